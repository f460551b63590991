#pragma once

// Constrained two-threshold optimization over an evaluation sample.
//
// Distinct scores u_1 < ... < u_U split the records into U classes. Grid
// threshold t_i separates class i from class i+1 (t_0 lies below every score,
// t_U above). The pair (k_L, k_H) = (t_a, t_b), a <= b, delays the physician's
// prescriptions in classes 1..a and adds prescriptions in classes b+1..U, so
//
//   delta_rho  = -L(a) + H(b)        L(a)  = prescriptions in classes <= a
//   delta_buti = -Ly(a) + Hy(b)      H(b)  = non-prescriptions in classes > b
//
// with Ly, Hy the same counts restricted to y = 1. L and Ly are nondecreasing
// in a, so for a fixed b the feasible a form a prefix (reduction rule) or a
// suffix (bUTI rule) and the best a is found by binary search.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "stewardsim/error.hpp"
#include "stewardsim/policy.hpp"

namespace stewardsim {

enum class Rule {
  kReduction,  ///< min delta_rho  s.t. delta_buti >= slack
  kButi,       ///< max delta_buti s.t. delta_rho <= -slack
};

inline const char* rule_name(Rule r) { return r == Rule::kReduction ? "reduction" : "buti"; }

struct CandidateGrid {
  std::vector<double> thresholds;  ///< t_0 < t_1 < ... < t_U
  std::vector<double> class_max;   ///< largest score in each class (size U)

  std::size_t classes() const { return class_max.size(); }
};

struct TraceRow {
  std::size_t a = 0, b = 0;
  double k_L = 0.0, k_H = 0.0;
  std::int64_t delta_rho = 0, delta_buti = 0;
  bool feasible = false;
};

struct OptimizerOptions {
  bool exempt_pregnant = false;  ///< pregnant records keep the physician's decision
  /// When nonzero and there are more distinct scores, consecutive classes are
  /// merged into this many quantile classes.
  std::size_t max_classes = 0;
  std::vector<TraceRow>* trace = nullptr;  ///< one row per k_H class scanned
};

struct OptimizerResult {
  PolicyParams params;
  PolicyOutcome outcome;
  std::int64_t objective_value = 0;   ///< delta_rho (reduction) or delta_buti (bUTI)
  std::int64_t constraint_value = 0;  ///< delta_buti (reduction) or delta_rho (bUTI)
  std::int64_t slack = 0;
  bool feasible = false;
  std::size_t a_index = 0, b_index = 0;
};

namespace detail {

inline bool is_active(const PolicyRecord& r, const OptimizerOptions& opt) {
  return !(opt.exempt_pregnant && r.pregnant == 1);
}

struct ClassCounts {
  CandidateGrid grid;
  std::vector<std::int64_t> L, Ly, H, Hy;  ///< size U + 1
};

inline CandidateGrid build_grid(std::span<const PolicyRecord> records, const OptimizerOptions& opt) {
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const auto& r : records) {
    if (is_active(r, opt)) scores.push_back(r.m);
  }
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  CandidateGrid g;
  if (scores.empty()) return g;

  // class boundaries: cut after distinct score index cut[i]
  std::vector<std::size_t> cuts;
  const std::size_t u = scores.size();
  if (opt.max_classes > 0 && u > opt.max_classes) {
    for (std::size_t j = 1; j < opt.max_classes; ++j) cuts.push_back(j * u / opt.max_classes - 1);
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  } else {
    for (std::size_t i = 0; i + 1 < u; ++i) cuts.push_back(i);
  }
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < u; ++i) min_gap = std::min(min_gap, scores[i + 1] - scores[i]);
  const double eps = std::isfinite(min_gap) ? 0.5 * min_gap : 0.5;

  double lo = scores.front() - eps;
  if (!(lo < scores.front())) lo = std::nextafter(scores.front(), -std::numeric_limits<double>::infinity());
  g.thresholds.push_back(lo);
  for (std::size_t c : cuts) {
    const double t = 0.5 * (scores[c] + scores[c + 1]);
    require_data(scores[c] < t && t < scores[c + 1], "predicted risks too close to separate by a threshold");
    g.thresholds.push_back(t);
    g.class_max.push_back(scores[c]);
  }
  double hi = scores.back() + eps;
  if (!(hi > scores.back())) hi = std::nextafter(scores.back(), std::numeric_limits<double>::infinity());
  g.thresholds.push_back(hi);
  g.class_max.push_back(scores.back());
  return g;
}

inline ClassCounts count_classes(std::span<const PolicyRecord> records, const OptimizerOptions& opt) {
  ClassCounts cc;
  cc.grid = build_grid(records, opt);
  const std::size_t u = cc.grid.classes();
  std::vector<std::int64_t> rx(u, 0), rx_y(u, 0), norx(u, 0), norx_y(u, 0);
  for (const auto& r : records) {
    check_record(r);
    if (!is_active(r, opt)) continue;
    const auto c = static_cast<std::size_t>(
        std::lower_bound(cc.grid.class_max.begin(), cc.grid.class_max.end(), r.m) - cc.grid.class_max.begin());
    if (r.rho_j == 1) {
      ++rx[c];
      rx_y[c] += r.y;
    } else {
      ++norx[c];
      norx_y[c] += r.y;
    }
  }
  cc.L.assign(u + 1, 0);
  cc.Ly.assign(u + 1, 0);
  cc.H.assign(u + 1, 0);
  cc.Hy.assign(u + 1, 0);
  for (std::size_t a = 1; a <= u; ++a) {
    cc.L[a] = cc.L[a - 1] + rx[a - 1];
    cc.Ly[a] = cc.Ly[a - 1] + rx_y[a - 1];
  }
  for (std::size_t b = u; b-- > 0;) {
    cc.H[b] = cc.H[b + 1] + norx[b];
    cc.Hy[b] = cc.Hy[b + 1] + norx_y[b];
  }
  return cc;
}

struct Candidate {
  std::size_t a = 0, b = 0;
  std::int64_t delta_rho = 0, delta_buti = 0, changed = 0;
};

/// Strict preference of x over y under the rule's tie order.
inline bool preferred(const Candidate& x, const Candidate& y, Rule rule) {
  if (rule == Rule::kReduction) {
    if (x.delta_rho != y.delta_rho) return x.delta_rho < y.delta_rho;
    if (x.delta_buti != y.delta_buti) return x.delta_buti > y.delta_buti;
  } else {
    if (x.delta_buti != y.delta_buti) return x.delta_buti > y.delta_buti;
    if (x.delta_rho != y.delta_rho) return x.delta_rho < y.delta_rho;
  }
  if (x.changed != y.changed) return x.changed < y.changed;
  return std::tie(x.a, x.b) < std::tie(y.a, y.b);
}

inline std::size_t first_at_least(const std::vector<std::int64_t>& v, std::int64_t x) {
  return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
}

inline std::size_t first_above(const std::vector<std::int64_t>& v, std::int64_t x) {
  return static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), x) - v.begin());
}

inline bool best_candidate(const ClassCounts& cc, Rule rule, std::int64_t slack, std::vector<TraceRow>* trace,
                           Candidate& best) {
  const std::size_t u = cc.grid.classes();
  bool found = false;
  for (std::size_t b = 0; b <= u; ++b) {
    std::size_t a = 0;
    bool ok = false;
    if (rule == Rule::kReduction) {
      const std::int64_t cap = cc.Hy[b] - slack;  // need Ly(a) <= cap
      if (cap >= 0) {
        const std::size_t a_max = std::min(b, first_above(cc.Ly, cap) - 1);
        a = first_at_least(cc.L, cc.L[a_max]);
        ok = true;
      }
    } else {
      const std::size_t a0 = first_at_least(cc.L, cc.H[b] + slack);  // need L(a) >= H(b) + slack
      if (a0 <= b) {
        const std::size_t a1 = std::min(b, first_above(cc.Ly, cc.Ly[a0]) - 1);
        a = first_at_least(cc.L, cc.L[a1]);
        ok = true;
      }
    }
    Candidate c{a, b, cc.H[b] - cc.L[a], cc.Hy[b] - cc.Ly[a], cc.L[a] + cc.H[b]};
    if (trace) {
      trace->push_back({a, b, cc.grid.thresholds[a], cc.grid.thresholds[b], c.delta_rho, c.delta_buti, ok});
    }
    if (ok && (!found || preferred(c, best, rule))) {
      best = c;
      found = true;
    }
  }
  return found;
}

inline PolicyOutcome evaluate_variant(std::span<const PolicyRecord> records, const PolicyParams& p,
                                      const OptimizerOptions& opt) {
  return opt.exempt_pregnant ? evaluate_exempt(records, p) : evaluate(records, p);
}

inline OptimizerResult finish_result(std::span<const PolicyRecord> records, const CandidateGrid& grid,
                                     const Candidate& c, Rule rule, std::int64_t slack, const OptimizerOptions& opt) {
  OptimizerResult r;
  r.a_index = c.a;
  r.b_index = c.b;
  r.params = {grid.thresholds[c.a], grid.thresholds[c.b]};
  r.outcome = evaluate_variant(records, r.params, opt);
  ensure(r.outcome.delta_rho == c.delta_rho && r.outcome.delta_buti == c.delta_buti && r.outcome.n_changed == c.changed,
         "optimizer class counts disagree with direct evaluation");
  r.slack = slack;
  r.objective_value = rule == Rule::kReduction ? r.outcome.delta_rho : r.outcome.delta_buti;
  r.constraint_value = rule == Rule::kReduction ? r.outcome.delta_buti : r.outcome.delta_rho;
  r.feasible = rule == Rule::kReduction ? r.constraint_value >= slack : r.constraint_value <= -slack;
  return r;
}

/// Result for samples with no active record: the identity policy.
inline OptimizerResult identity_result(std::span<const PolicyRecord> records, Rule rule, const OptimizerOptions& opt) {
  OptimizerResult r;
  r.params = identity_params();
  r.outcome = evaluate_variant(records, r.params, opt);
  r.objective_value = 0;
  r.constraint_value = 0;
  r.feasible = true;
  (void)rule;
  return r;
}

}  // namespace detail

/// Grid of outcome-distinct thresholds for the records that the rule can change.
inline CandidateGrid candidate_grid(std::span<const PolicyRecord> records, const OptimizerOptions& opt = {}) {
  return detail::build_grid(records, opt);
}

/// Solves the rule's program with the constraint tightened by `slack`.
/// `feasible` is false (and params are the identity class) when no pair meets
/// the tightened constraint; with slack 0 the identity pair always does.
inline OptimizerResult optimize(std::span<const PolicyRecord> records, Rule rule, std::int64_t slack = 0,
                                const OptimizerOptions& opt = {}) {
  detail::require_data(!records.empty(), "optimizer needs at least one record");
  detail::require_config(slack >= 0, "optimizer slack must be >= 0");
  const auto cc = detail::count_classes(records, opt);
  if (cc.grid.classes() == 0) {
    auto r = detail::identity_result(records, rule, opt);
    r.slack = slack;
    r.feasible = slack == 0;
    return r;
  }
  detail::Candidate best;
  const bool found = detail::best_candidate(cc, rule, slack, opt.trace, best);
  if (!found) {
    detail::ensure(slack > 0, "identity policy must be feasible without slack");
    auto r = detail::finish_result(records, cc.grid, detail::Candidate{0, cc.grid.classes(), 0, 0, 0}, rule, slack, opt);
    r.feasible = false;
    return r;
  }
  auto r = detail::finish_result(records, cc.grid, best, rule, slack, opt);
  detail::ensure(r.feasible, "optimizer returned an infeasible pair");
  return r;
}

inline OptimizerResult optimize_ab_reduction(std::span<const PolicyRecord> records, const OptimizerOptions& opt = {}) {
  return optimize(records, Rule::kReduction, 0, opt);
}

inline OptimizerResult optimize_buti(std::span<const PolicyRecord> records, const OptimizerOptions& opt = {}) {
  return optimize(records, Rule::kButi, 0, opt);
}

inline constexpr std::size_t kOracleMaxRecords = 200;

/// Exhaustive search over every grid pair, each evaluated directly. Same tie
/// order as the fast path.
inline OptimizerResult brute_force_oracle(std::span<const PolicyRecord> records, Rule rule, std::int64_t slack = 0,
                                          const OptimizerOptions& opt = {}) {
  detail::require_data(!records.empty(), "optimizer needs at least one record");
  detail::require_config(records.size() <= kOracleMaxRecords, "brute-force oracle is limited to 200 records");
  const auto grid = detail::build_grid(records, opt);
  if (grid.classes() == 0) {
    auto r = detail::identity_result(records, rule, opt);
    r.slack = slack;
    r.feasible = slack == 0;
    return r;
  }
  const std::size_t u = grid.classes();
  bool found = false;
  detail::Candidate best;
  for (std::size_t a = 0; a <= u; ++a) {
    for (std::size_t b = a; b <= u; ++b) {
      const auto o = detail::evaluate_variant(records, {grid.thresholds[a], grid.thresholds[b]}, opt);
      const bool ok = rule == Rule::kReduction ? o.delta_buti >= slack : o.delta_rho <= -slack;
      if (!ok) continue;
      detail::Candidate c{a, b, o.delta_rho, o.delta_buti, o.n_changed};
      if (!found || detail::preferred(c, best, rule)) {
        best = c;
        found = true;
      }
    }
  }
  if (!found) {
    auto r = detail::finish_result(records, grid, detail::Candidate{0, u, 0, 0, 0}, rule, slack, opt);
    r.feasible = false;
    return r;
  }
  return detail::finish_result(records, grid, best, rule, slack, opt);
}

struct ConservativeResult {
  OptimizerResult solution;        ///< the slack-s solution that is returned
  std::int64_t ex_post_value = 0;  ///< V*, the unconstrained-slack optimum
  double target = 0.0;             ///< alpha * V*
};

/// Largest integer slack s >= 0 whose solution is feasible and still reaches
/// alpha * V* (at most the target for the reduction rule, at least it for the
/// bUTI rule). Tighter slack can only worsen the objective, so the set of
/// acceptable s is an interval starting at 0 and is found by bisection.
inline ConservativeResult conservative_params(std::span<const PolicyRecord> records, double alpha, Rule rule,
                                              const OptimizerOptions& opt = {}) {
  detail::require_config(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
  ConservativeResult out;
  OptimizerOptions quiet = opt;
  quiet.trace = nullptr;
  out.solution = optimize(records, rule, 0, quiet);
  out.ex_post_value = out.solution.objective_value;
  out.target = alpha * static_cast<double>(out.ex_post_value);
  if (out.ex_post_value == 0) return out;

  const double tol = 1e-9 * std::abs(static_cast<double>(out.ex_post_value));
  auto acceptable = [&](const OptimizerResult& r) {
    if (!r.feasible) return false;
    const auto v = static_cast<double>(r.objective_value);
    return rule == Rule::kReduction ? v <= out.target + tol : v >= out.target - tol;
  };
  // slack above the largest achievable constraint value is never feasible
  std::int64_t lo = 0;
  std::int64_t hi = 1;
  for (const auto& r : records) {
    if (!detail::is_active(r, opt)) continue;
    hi += rule == Rule::kReduction ? (r.rho_j == 0 && r.y == 1) : r.rho_j;
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    auto r = optimize(records, rule, mid, quiet);
    if (acceptable(r)) {
      lo = mid;
      out.solution = std::move(r);
    } else {
      hi = mid;
    }
  }
  if (out.solution.slack != lo) out.solution = optimize(records, rule, lo, quiet);
  return out;
}

}  // namespace stewardsim
