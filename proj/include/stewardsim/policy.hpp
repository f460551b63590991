#pragma once

// Prescription rules, the policy-maker payoff, and evaluation of a rule
// against observed physician decisions.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stewardsim/error.hpp"

namespace stewardsim {

/// Two-threshold rule: delay below k_L, prescribe above k_H, defer to the
/// physician on the closed band [k_L, k_H]. Thresholds outside [0,1] are
/// allowed so that grid sentinels can express "never" and "always".
struct PolicyParams {
  double k_L = 0.0;
  double k_H = 1.0;

  void validate() const {
    detail::require_config(k_L <= k_H, "policy requires k_L <= k_H");
  }
  bool operator==(const PolicyParams&) const = default;
};

inline PolicyParams identity_params() { return {0.0, 1.0}; }

struct Preferences {
  double a = 2.0;  ///< sickness cost of an untreated bacterial infection
  double b = 1.0;  ///< social cost of one prescription

  void validate(bool allow_b_above_a = false) const {
    detail::require_config(a > 0.0 && b > 0.0, "preferences a and b must be positive");
    detail::require_config(allow_b_above_a || b < a, "preferences require b < a");
  }
};

/// One decided consultation: predicted risk, physician choice and outcome.
struct PolicyRecord {
  double m = 0.0;
  int rho_j = 0;
  int y = 0;
  int pregnant = 0;
  int post_test_rx = 0;
};

struct PolicyOutcome {
  std::size_t n = 0;
  std::int64_t observed_rx = 0;
  std::int64_t observed_treated_buti = 0;
  std::int64_t delta_rho = 0;
  std::int64_t delta_buti = 0;
  std::int64_t n_changed = 0;
  double pct_delta_rho = 0.0;
  double pct_delta_buti = 0.0;
  bool pct_rho_undefined = false;
  bool pct_buti_undefined = false;

  /// Fills the percentage fields from the counts.
  void finish() {
    pct_rho_undefined = observed_rx == 0;
    pct_buti_undefined = observed_treated_buti == 0;
    pct_delta_rho = pct_rho_undefined ? 0.0 : 100.0 * static_cast<double>(delta_rho) / static_cast<double>(observed_rx);
    pct_delta_buti =
        pct_buti_undefined ? 0.0 : 100.0 * static_cast<double>(delta_buti) / static_cast<double>(observed_treated_buti);
  }

  /// Adds the counts of another outcome; percentages are recomputed.
  PolicyOutcome& operator+=(const PolicyOutcome& o) {
    n += o.n;
    observed_rx += o.observed_rx;
    observed_treated_buti += o.observed_treated_buti;
    delta_rho += o.delta_rho;
    delta_buti += o.delta_buti;
    n_changed += o.n_changed;
    finish();
    return *this;
  }
};

inline int apply_rule(double m, int rho_j, const PolicyParams& p) {
  if (m < p.k_L) return 0;
  if (m > p.k_H) return 1;
  return rho_j;
}

inline int apply_machine_only(double m, double k) { return k <= m ? 1 : 0; }

/// pi(p; y) = -a*y*(1 - y*p) - b*p
inline double payoff(int p, int y, const Preferences& prefs) {
  const double pd = p, yd = y;
  return -prefs.a * yd * (1.0 - yd * pd) - prefs.b * pd;
}

namespace detail {

inline void check_record(const PolicyRecord& r) {
  require_data(r.m >= 0.0 && r.m <= 1.0, "predicted risk must lie in [0,1]");
  require_data((r.rho_j == 0 || r.rho_j == 1) && (r.y == 0 || r.y == 1), "rho_j and y must be 0 or 1");
}

template <typename Decide>
PolicyOutcome evaluate_with(std::span<const PolicyRecord> records, Decide&& decide) {
  PolicyOutcome out;
  out.n = records.size();
  for (const auto& r : records) {
    check_record(r);
    const int p = decide(r);
    const int d = p - r.rho_j;
    out.observed_rx += r.rho_j;
    out.observed_treated_buti += r.y * r.rho_j;
    out.delta_rho += d;
    out.delta_buti += r.y * d;
    out.n_changed += d != 0;
  }
  out.finish();
  return out;
}

}  // namespace detail

/// Empty input yields zero counts with both percentages flagged undefined.
inline PolicyOutcome evaluate(std::span<const PolicyRecord> records, const PolicyParams& params) {
  params.validate();
  return detail::evaluate_with(records, [&](const PolicyRecord& r) { return apply_rule(r.m, r.rho_j, params); });
}

inline PolicyOutcome evaluate_machine_only(std::span<const PolicyRecord> records, double k) {
  return detail::evaluate_with(records, [&](const PolicyRecord& r) { return apply_machine_only(r.m, k); });
}

/// Pregnant patients keep the physician's decision.
inline PolicyOutcome evaluate_exempt(std::span<const PolicyRecord> records, const PolicyParams& params) {
  params.validate();
  return detail::evaluate_with(records, [&](const PolicyRecord& r) {
    return r.pregnant == 1 ? r.rho_j : apply_rule(r.m, r.rho_j, params);
  });
}

/// a * delta_buti - b * delta_rho
inline double evaluate_payoff_gain(std::span<const PolicyRecord> records, const PolicyParams& params,
                                   const Preferences& prefs, bool allow_b_above_a = false) {
  prefs.validate(allow_b_above_a);
  const auto o = evaluate(records, params);
  return prefs.a * static_cast<double>(o.delta_buti) - prefs.b * static_cast<double>(o.delta_rho);
}

struct FollowupShare {
  std::size_t selected = 0;
  std::size_t followed = 0;
  std::optional<double> share;  ///< empty when nothing was selected
};

/// Share of untreated patients with m > k_H that got a prescription after the
/// test result.
inline FollowupShare post_test_followup(std::span<const PolicyRecord> records, double k_H) {
  FollowupShare out;
  for (const auto& r : records) {
    if (r.m > k_H && r.rho_j == 0) {
      ++out.selected;
      out.followed += r.post_test_rx == 1;
    }
  }
  if (out.selected > 0) out.share = static_cast<double>(out.followed) / static_cast<double>(out.selected);
  return out;
}

}  // namespace stewardsim
