#pragma once

// Rolling ex-post and ex-ante evaluation, bootstrap intervals and the
// machine-only threshold sweep.
//
// Ex post: window w gets a forest trained on everything before its start; the
// thresholds are optimized on the window itself.
//
// Ex ante: decision slices [s, s + lambda) run from one window after the first
// evaluation window to the end of the schedule. Conservative thresholds
// computed on the calibration period [s - tau, s) are applied to the slice.
// For each slice a forest is trained on everything before s - tau and scores
// the calibration period and the slice; with Schedule::exante_refit off the
// monthly ex-post forests are reused instead. Monthly reports collect the
// slices' consultations by the schedule's window grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stewardsim/cohort.hpp"
#include "stewardsim/error.hpp"
#include "stewardsim/forest.hpp"
#include "stewardsim/optimizer.hpp"
#include "stewardsim/parallel.hpp"
#include "stewardsim/policy.hpp"
#include "stewardsim/random.hpp"
#include "stewardsim/schedule.hpp"

namespace stewardsim {

// ---------------------------------------------------------------------------
// Bootstrap

/// A consultation after the policy decision has been fixed.
struct DecidedRecord {
  int p = 0;
  int rho_j = 0;
  int y = 0;
  std::uint32_t cluster = 0;  ///< clinic index, used by the clustered bootstrap
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool defined = false;

  bool covers(double v) const { return defined && lo <= v && v <= hi; }
};

/// Percentile interval with the inverse-ECDF definition: the q-quantile of B
/// sorted values is x[ceil(qB) - 1]. At B = 2 this gives the min and max.
inline Interval percentile_interval(std::vector<double> values, double level = 0.95) {
  Interval out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  const double tail = 0.5 * (1.0 - level);
  const auto nb = static_cast<double>(values.size());
  auto at = [&](double q) {
    auto k = static_cast<std::size_t>(std::ceil(q * nb - 1e-9));
    k = std::clamp<std::size_t>(k, 1, values.size());
    return values[k - 1];
  };
  out.lo = at(tail);
  out.hi = at(1.0 - tail);
  out.defined = true;
  return out;
}

/// Pooled counts of one resample.
struct ResampleCounts {
  std::int64_t observed_rx = 0;
  std::int64_t observed_treated_buti = 0;
  std::int64_t delta_rho = 0;
  std::int64_t delta_buti = 0;

  ResampleCounts& operator+=(const ResampleCounts& o) {
    observed_rx += o.observed_rx;
    observed_treated_buti += o.observed_treated_buti;
    delta_rho += o.delta_rho;
    delta_buti += o.delta_buti;
    return *this;
  }
  std::optional<double> pct_rho() const {
    if (observed_rx == 0) return std::nullopt;
    return 100.0 * static_cast<double>(delta_rho) / static_cast<double>(observed_rx);
  }
  std::optional<double> pct_buti() const {
    if (observed_treated_buti == 0) return std::nullopt;
    return 100.0 * static_cast<double>(delta_buti) / static_cast<double>(observed_treated_buti);
  }
};

struct BootstrapCI {
  Interval pct_rho;
  Interval pct_buti;
  std::size_t excluded_rho = 0;   ///< resamples with no observed prescription
  std::size_t excluded_buti = 0;  ///< resamples with no treated bacterial case
};

inline ResampleCounts count_decided(std::span<const DecidedRecord> records, std::span<const std::size_t> picks) {
  ResampleCounts c;
  for (std::size_t i : picks) {
    const auto& r = records[i];
    const int d = r.p - r.rho_j;
    c.observed_rx += r.rho_j;
    c.observed_treated_buti += r.y * r.rho_j;
    c.delta_rho += d;
    c.delta_buti += r.y * d;
  }
  return c;
}

/// Indices of one resample of the same size (records), or of the same number
/// of clusters with all their records (clustered).
inline std::vector<std::size_t> resample_indices(std::span<const DecidedRecord> records, std::uint64_t rep_seed,
                                                 bool clustered) {
  Rng rng(rep_seed);
  std::vector<std::size_t> picks;
  picks.reserve(records.size());
  if (!clustered) {
    for (std::size_t i = 0; i < records.size(); ++i) picks.push_back(static_cast<std::size_t>(rng.below(records.size())));
    return picks;
  }
  std::map<std::uint32_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i) members[records[i].cluster].push_back(i);
  std::vector<const std::vector<std::size_t>*> groups;
  groups.reserve(members.size());
  for (const auto& [id, idx] : members) groups.push_back(&idx);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& idx = *groups[static_cast<std::size_t>(rng.below(groups.size()))];
    picks.insert(picks.end(), idx.begin(), idx.end());
  }
  return picks;
}

/// Counts of B resamples; resample b uses the seed derive_seed(seed, b).
inline std::vector<ResampleCounts> bootstrap_counts(std::span<const DecidedRecord> records, std::size_t n_boot,
                                                    std::uint64_t seed, bool clustered = false, unsigned threads = 1) {
  std::vector<ResampleCounts> out(n_boot);
  if (records.empty()) return out;
  parallel_for(n_boot, threads, [&](std::size_t b) {
    const auto picks = resample_indices(records, derive_seed(seed, b), clustered);
    out[b] = count_decided(records, picks);
  });
  return out;
}

inline BootstrapCI interval_from_counts(std::span<const ResampleCounts> reps) {
  std::vector<double> rho, buti;
  BootstrapCI ci;
  for (const auto& c : reps) {
    if (auto v = c.pct_rho()) rho.push_back(*v);
    else ++ci.excluded_rho;
    if (auto v = c.pct_buti()) buti.push_back(*v);
    else ++ci.excluded_buti;
  }
  ci.pct_rho = percentile_interval(std::move(rho));
  ci.pct_buti = percentile_interval(std::move(buti));
  return ci;
}

inline BootstrapCI bootstrap_ci(std::span<const DecidedRecord> records, std::size_t n_boot, std::uint64_t seed,
                                bool clustered = false, unsigned threads = 1) {
  detail::require_config(n_boot >= 2, "bootstrap needs B >= 2");
  detail::require_data(!records.empty(), "bootstrap needs at least one record");
  const auto reps = bootstrap_counts(records, n_boot, seed, clustered, threads);
  return interval_from_counts(reps);
}

/// Decisions fixed by `params`, then resampled.
inline BootstrapCI bootstrap_ci(std::span<const PolicyRecord> records, const PolicyParams& params, std::size_t n_boot,
                                std::uint64_t seed) {
  params.validate();
  std::vector<DecidedRecord> decided;
  decided.reserve(records.size());
  for (const auto& r : records) decided.push_back({apply_rule(r.m, r.rho_j, params), r.rho_j, r.y, 0});
  return bootstrap_ci(decided, n_boot, seed);
}

// ---------------------------------------------------------------------------
// Scoring

struct WindowScores {
  std::size_t window_id = 0;
  int eval_start = 0, eval_end = 0;
  std::size_t begin = 0, end = 0;  ///< consultation index range
  std::size_t train_size = 0;
  std::vector<double> scores;      ///< one per consultation in [begin, end)
};

struct SliceScores {
  int calib_start = 0;  ///< s - tau
  int start = 0;        ///< s
  int end = 0;          ///< min(s + lambda, schedule end)
  std::size_t calib_begin = 0, begin = 0, end_index = 0;
  std::size_t train_size = 0;
  std::vector<double> scores;  ///< one per consultation in [calib_begin, end_index)
};

struct ScoreCache {
  std::vector<WindowScores> expost;
  std::vector<SliceScores> exante;
};

struct ScoringOptions {
  bool expost = true;
  bool exante = true;
  unsigned threads = 1;
};

/// Seed of the forest fitted for ex-post window w (fit id w) or ex-ante slice
/// k (fit id 1'000'000 + k).
inline std::uint64_t fit_seed(std::uint64_t forest_seed, std::uint64_t fit_id) {
  return derive_seed(forest_seed, Stream::kWindow, fit_id);
}

inline constexpr std::uint64_t kExanteFitOffset = 1'000'000;

namespace detail {

/// Covariates of the whole cohort, coded once and shared by every fit.
struct CohortData {
  FeatureMatrix x;
  CodedMatrix coded;
  std::vector<double> y;

  explicit CohortData(const Cohort& cohort)
      : x(feature_matrix(cohort.consultations, cohort.n_features())), coded(x), y(outcomes(cohort.consultations)) {}
};

inline std::vector<double> score_range(const CohortData& data, std::size_t train_begin, std::size_t train_end,
                                       std::size_t begin, std::size_t end, ForestParams hyper, std::uint64_t seed,
                                       unsigned threads) {
  if (begin == end) return {};
  require_data(train_end > train_begin, "no training data before the evaluation period");
  hyper.seed = seed;
  const auto model = fit(data.coded, data.y, train_begin, train_end, hyper, threads);
  std::vector<double> out(end - begin);
  parallel_for(end - begin, threads, [&](std::size_t i) { out[i] = model.predict(data.x.row(begin + i)); });
  return out;
}

}  // namespace detail

/// Ex-ante slice boundaries (no fitting).
inline std::vector<SliceScores> exante_slices(const Cohort& cohort, const Schedule& schedule) {
  std::vector<SliceScores> out;
  const int stop = schedule.eval_end_day();
  for (int s = schedule.eval_start_day + schedule.tau_days; s < stop; s += schedule.lambda_days) {
    SliceScores sl;
    sl.calib_start = s - schedule.tau_days;
    sl.start = s;
    sl.end = std::min(s + schedule.lambda_days, stop);
    sl.calib_begin = first_index_at(cohort, sl.calib_start);
    sl.begin = first_index_at(cohort, sl.start);
    sl.end_index = first_index_at(cohort, sl.end);
    out.push_back(std::move(sl));
  }
  return out;
}

/// Fits every forest the rolling runs need and stores its scores, so the two
/// rules and the exemption variant share one set of models.
inline ScoreCache build_scores(const Cohort& cohort, const Schedule& schedule, const ForestParams& forest,
                               const ScoringOptions& opt = {}) {
  schedule.validate(cohort.meta.config.horizon_days);
  forest.validate();
  ScoreCache cache;
  const detail::CohortData data(cohort);
  const bool need_expost = opt.expost || (opt.exante && !schedule.exante_refit);
  if (need_expost) {
    for (const auto& w : split_windows(cohort, schedule)) {
      WindowScores ws;
      ws.window_id = w.window_id;
      ws.eval_start = w.eval_start;
      ws.eval_end = w.eval_end;
      ws.begin = w.eval_begin;
      ws.end = w.eval_end_index;
      ws.train_size = w.train_size();
      try {
        ws.scores = detail::score_range(data, w.train_begin, w.train_end, w.eval_begin, w.eval_end_index, forest,
                                        fit_seed(forest.seed, w.window_id), opt.threads);
      } catch (const DataError& e) {
        throw DataError("ex-post window " + std::to_string(w.window_id) + ": " + e.what());
      }
      cache.expost.push_back(std::move(ws));
    }
  }
  if (opt.exante) {
    cache.exante = exante_slices(cohort, schedule);
    for (std::size_t k = 0; k < cache.exante.size(); ++k) {
      auto& sl = cache.exante[k];
      if (!schedule.exante_refit) {
        // every slice day lies inside the evaluation grid, so a monthly score exists
        sl.scores.reserve(sl.end_index - sl.calib_begin);
        for (std::size_t i = sl.calib_begin; i < sl.end_index; ++i) {
          const int day = cohort.consultations[i].day;
          const auto w = static_cast<std::size_t>((day - schedule.eval_start_day) / schedule.tau_days);
          const auto& ws = cache.expost[w];
          detail::ensure(i >= ws.begin && i < ws.end, "slice record outside its monthly window");
          sl.scores.push_back(ws.scores[i - ws.begin]);
        }
        sl.train_size = cache.expost[static_cast<std::size_t>((sl.start - schedule.eval_start_day) / schedule.tau_days)].train_size;
        continue;
      }
      const auto [tb, te] = training_range(cohort, sl.calib_start, schedule.fixed_train_days);
      sl.train_size = te - tb;
      try {
        sl.scores = detail::score_range(data, tb, te, sl.calib_begin, sl.end_index, forest,
                                        fit_seed(forest.seed, kExanteFitOffset + k), opt.threads);
      } catch (const DataError& e) {
        throw DataError("ex-ante slice starting day " + std::to_string(sl.start) + ": " + e.what());
      }
    }
    if (!opt.expost) cache.expost.clear();
  }
  return cache;
}

// ---------------------------------------------------------------------------
// Reports

struct AppliedParams {
  int start_day = 0, end_day = 0;  ///< days the params were applied to
  PolicyParams params;
  std::int64_t slack = 0;
  std::int64_t calibration_potential = 0;  ///< ex-post optimum on the calibration period
};

struct WindowReport {
  std::size_t window_id = 0;
  int eval_start = 0, eval_end = 0;
  std::vector<AppliedParams> params;  ///< one entry ex post, one per slice ex ante
  PolicyOutcome outcome;
  double objective_pct = 0.0;
  double constraint_pct = 0.0;
  Interval objective_ci, constraint_ci;
  std::size_t excluded_objective = 0, excluded_constraint = 0;
  bool empty = false;
  bool constraint_violated = false;  ///< point constraint fails on the window sample
  std::vector<TraceRow> trace;       ///< optimizer audit rows (ex post, when requested)
};

struct AggregateReport {
  PolicyOutcome outcome;  ///< pooled counts over non-empty windows
  double objective_pct = 0.0;
  double constraint_pct = 0.0;
  Interval objective_ci, constraint_ci;
  std::size_t excluded_objective = 0, excluded_constraint = 0;
  std::size_t windows = 0, empty_windows = 0;
  std::size_t constraint_ci_covers_zero = 0;  ///< windows whose constraint CI contains 0
  std::size_t constraint_violations = 0;
};

struct RunReport {
  std::string mode;  ///< "expost" or "exante"
  Rule rule = Rule::kReduction;
  bool exempt_pregnant = false;
  std::vector<WindowReport> windows;
  AggregateReport aggregate;
};

struct RunOptions {
  bool exempt_pregnant = false;
  std::size_t max_classes = 0;
  unsigned threads = 1;
  bool trace = false;  ///< keep the optimizer trace of every ex-post window
};

namespace detail {

inline PolicyRecord policy_record(const Consultation& c, double m) {
  return {std::clamp(m, 0.0, 1.0), c.rho_j, c.y, c.pregnant, c.post_test_rx};
}

inline std::map<std::string, std::uint32_t> clinic_index(const Cohort& cohort) {
  std::map<std::string, std::uint32_t> idx;
  for (const auto& c : cohort.consultations) idx.emplace(c.clinic_id, 0);
  std::uint32_t k = 0;
  for (auto& [id, v] : idx) v = k++;
  return idx;
}

inline double objective_of(const PolicyOutcome& o, Rule r) {
  return r == Rule::kReduction ? o.pct_delta_rho : o.pct_delta_buti;
}
inline double constraint_of(const PolicyOutcome& o, Rule r) {
  return r == Rule::kReduction ? o.pct_delta_buti : o.pct_delta_rho;
}

inline bool violates(const PolicyOutcome& o, Rule r) {
  return r == Rule::kReduction ? o.delta_buti < 0 : o.delta_rho > 0;
}

/// Fills CIs of every window and the stratified aggregate interval, in which
/// each resample sums independently resampled window counts.
inline void finish_run(RunReport& run, const std::vector<std::vector<DecidedRecord>>& decided,
                       const Schedule& schedule, unsigned threads) {
  const Rule rule = run.rule;
  std::vector<ResampleCounts> pooled(schedule.n_boot);
  auto& agg = run.aggregate;
  agg = AggregateReport{};
  for (std::size_t i = 0; i < run.windows.size(); ++i) {
    auto& w = run.windows[i];
    ++agg.windows;
    if (w.empty) {
      ++agg.empty_windows;
      continue;
    }
    agg.outcome += w.outcome;
    w.objective_pct = objective_of(w.outcome, rule);
    w.constraint_pct = constraint_of(w.outcome, rule);
    w.constraint_violated = violates(w.outcome, rule);
    agg.constraint_violations += w.constraint_violated;
    const auto reps = bootstrap_counts(decided[i], schedule.n_boot,
                                       derive_seed(schedule.seed, Stream::kBootstrap, w.window_id),
                                       schedule.clustered_bootstrap, threads);
    for (std::size_t b = 0; b < reps.size(); ++b) pooled[b] += reps[b];
    const auto ci = interval_from_counts(reps);
    const bool red = rule == Rule::kReduction;
    w.objective_ci = red ? ci.pct_rho : ci.pct_buti;
    w.constraint_ci = red ? ci.pct_buti : ci.pct_rho;
    w.excluded_objective = red ? ci.excluded_rho : ci.excluded_buti;
    w.excluded_constraint = red ? ci.excluded_buti : ci.excluded_rho;
    agg.constraint_ci_covers_zero += w.constraint_ci.covers(0.0);
  }
  agg.outcome.finish();
  agg.objective_pct = objective_of(agg.outcome, rule);
  agg.constraint_pct = constraint_of(agg.outcome, rule);
  if (agg.windows > agg.empty_windows) {
    const auto ci = interval_from_counts(pooled);
    const bool red = rule == Rule::kReduction;
    agg.objective_ci = red ? ci.pct_rho : ci.pct_buti;
    agg.constraint_ci = red ? ci.pct_buti : ci.pct_rho;
    agg.excluded_objective = red ? ci.excluded_rho : ci.excluded_buti;
    agg.excluded_constraint = red ? ci.excluded_buti : ci.excluded_rho;
  }
}

}  // namespace detail

/// Ex-post thresholds per window, evaluated on the window they were chosen on.
inline RunReport run_expost(const Cohort& cohort, const Schedule& schedule, const ScoreCache& cache, Rule rule,
                            const RunOptions& opt = {}) {
  schedule.validate(cohort.meta.config.horizon_days);
  detail::require_config(cache.expost.size() == schedule.n_windows, "score cache lacks ex-post windows");
  const auto clinics = detail::clinic_index(cohort);
  OptimizerOptions oo;
  oo.exempt_pregnant = opt.exempt_pregnant;
  oo.max_classes = opt.max_classes;

  RunReport run;
  run.mode = "expost";
  run.rule = rule;
  run.exempt_pregnant = opt.exempt_pregnant;
  std::vector<std::vector<DecidedRecord>> decided;
  for (const auto& ws : cache.expost) {
    WindowReport w;
    w.window_id = ws.window_id;
    w.eval_start = ws.eval_start;
    w.eval_end = ws.eval_end;
    std::vector<PolicyRecord> records;
    records.reserve(ws.end - ws.begin);
    for (std::size_t i = ws.begin; i < ws.end; ++i) {
      records.push_back(detail::policy_record(cohort.consultations[i], ws.scores[i - ws.begin]));
    }
    std::vector<DecidedRecord> dec;
    if (records.empty()) {
      w.empty = true;
    } else {
      oo.trace = opt.trace ? &w.trace : nullptr;
      const auto res = optimize(records, rule, 0, oo);
      detail::ensure(res.feasible, "ex-post optimum violates its constraint");
      w.outcome = res.outcome;
      w.params.push_back({ws.eval_start, ws.eval_end, res.params, 0, res.objective_value});
      dec.reserve(records.size());
      for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const int p = opt.exempt_pregnant && r.pregnant ? r.rho_j : apply_rule(r.m, r.rho_j, res.params);
        dec.push_back({p, r.rho_j, r.y, clinics.at(cohort.consultations[ws.begin + i].clinic_id)});
      }
    }
    decided.push_back(std::move(dec));
    run.windows.push_back(std::move(w));
  }
  detail::finish_run(run, decided, schedule, opt.threads);
  return run;
}

/// Conservative thresholds from the preceding tau days, applied forward one
/// lambda-slice at a time; reported on windows 1..n_windows-1.
inline RunReport run_exante(const Cohort& cohort, const Schedule& schedule, const ScoreCache& cache, Rule rule,
                            const RunOptions& opt = {}) {
  schedule.validate(cohort.meta.config.horizon_days);
  detail::require_config(schedule.n_windows >= 2, "ex-ante evaluation needs at least two windows");
  detail::require_config(!cache.exante.empty(), "score cache lacks ex-ante slices");
  const auto clinics = detail::clinic_index(cohort);
  OptimizerOptions oo;
  oo.exempt_pregnant = opt.exempt_pregnant;
  oo.max_classes = opt.max_classes;

  RunReport run;
  run.mode = "exante";
  run.rule = rule;
  run.exempt_pregnant = opt.exempt_pregnant;
  const std::size_t n_reported = schedule.n_windows - 1;
  for (std::size_t w = 1; w < schedule.n_windows; ++w) {
    WindowReport r;
    r.window_id = w;
    r.eval_start = schedule.window_start(w);
    r.eval_end = r.eval_start + schedule.tau_days;
    run.windows.push_back(std::move(r));
  }
  std::vector<std::vector<DecidedRecord>> decided(n_reported);
  std::vector<std::vector<PolicyRecord>> window_records(n_reported);
  std::vector<std::vector<int>> window_decisions(n_reported);

  for (const auto& sl : cache.exante) {
    std::vector<PolicyRecord> calib;
    calib.reserve(sl.begin - sl.calib_begin);
    for (std::size_t i = sl.calib_begin; i < sl.begin; ++i) {
      calib.push_back(detail::policy_record(cohort.consultations[i], sl.scores[i - sl.calib_begin]));
    }
    AppliedParams ap;
    ap.start_day = sl.start;
    ap.end_day = sl.end;
    if (calib.empty()) {
      ap.params = identity_params();
    } else {
      const auto cons = conservative_params(calib, schedule.alpha, rule, oo);
      ap.params = cons.solution.params;
      ap.slack = cons.solution.slack;
      ap.calibration_potential = cons.ex_post_value;
    }
    // a slice can straddle two report windows
    std::size_t last_window = n_reported;
    for (std::size_t i = sl.begin; i < sl.end_index; ++i) {
      const auto& c = cohort.consultations[i];
      const auto w = static_cast<std::size_t>((c.day - schedule.eval_start_day) / schedule.tau_days);
      detail::ensure(w >= 1 && w <= n_reported, "ex-ante slice outside the report windows");
      const auto rec = detail::policy_record(c, sl.scores[i - sl.calib_begin]);
      const int p = opt.exempt_pregnant && rec.pregnant ? rec.rho_j : apply_rule(rec.m, rec.rho_j, ap.params);
      window_records[w - 1].push_back(rec);
      window_decisions[w - 1].push_back(p);
      decided[w - 1].push_back({p, rec.rho_j, rec.y, clinics.at(c.clinic_id)});
      if (w != last_window) {
        run.windows[w - 1].params.push_back(ap);
        last_window = w;
      }
    }
  }
  for (std::size_t k = 0; k < n_reported; ++k) {
    auto& w = run.windows[k];
    w.empty = window_records[k].empty();
    const auto& recs = window_records[k];
    const auto& dec = window_decisions[k];
    std::size_t i = 0;
    w.outcome = detail::evaluate_with(std::span<const PolicyRecord>(recs), [&](const PolicyRecord&) { return dec[i++]; });
  }
  detail::finish_run(run, decided, schedule, opt.threads);
  return run;
}

// ---------------------------------------------------------------------------
// Machine-only sweep

/// Cut-off above every possible risk: the rule never prescribes.
inline const double kNeverPrescribe = std::nextafter(1.0, 2.0);

inline std::vector<double> default_k_grid(std::size_t steps = 100) {
  std::vector<double> k;
  for (std::size_t i = 0; i <= steps; ++i) k.push_back(static_cast<double>(i) / static_cast<double>(steps));
  k.push_back(kNeverPrescribe);
  return k;
}

struct SweepPoint {
  double k = 0.0;
  double mean_pct_rho = 0.0;   ///< average of window percentages
  double mean_pct_buti = 0.0;
  Interval ci_rho, ci_buti;    ///< bootstrap intervals of the averages
  std::size_t windows_rho = 0, windows_buti = 0;  ///< windows with defined percentages
  PolicyOutcome pooled;        ///< counts pooled over windows
};

/// Machine-only rule on the ex-post scores of every window. Window averages
/// skip windows whose percentage is undefined.
inline std::vector<SweepPoint> machine_only_sweep(const Cohort& cohort, const Schedule& schedule,
                                                  const ScoreCache& cache, std::span<const double> k_grid,
                                                  unsigned threads = 1) {
  for (double k : k_grid) {
    detail::require_config(k >= 0.0 && k <= kNeverPrescribe, "machine-only cut-offs must lie in [0, 1+eps]");
  }
  std::vector<std::vector<PolicyRecord>> windows;
  for (const auto& ws : cache.expost) {
    std::vector<PolicyRecord> recs;
    for (std::size_t i = ws.begin; i < ws.end; ++i) {
      recs.push_back(detail::policy_record(cohort.consultations[i], ws.scores[i - ws.begin]));
    }
    if (!recs.empty()) windows.push_back(std::move(recs));
  }
  const std::size_t nk = k_grid.size();
  std::vector<SweepPoint> curve(nk);
  auto mean_of = [](const std::vector<std::optional<double>>& v, std::size_t& used) {
    double s = 0.0;
    used = 0;
    for (const auto& x : v) {
      if (x) {
        s += *x;
        ++used;
      }
    }
    return used ? s / static_cast<double>(used) : 0.0;
  };
  for (std::size_t j = 0; j < nk; ++j) {
    auto& pt = curve[j];
    pt.k = k_grid[j];
    std::vector<std::optional<double>> rho, buti;
    for (const auto& recs : windows) {
      const auto o = evaluate_machine_only(recs, pt.k);
      pt.pooled += o;
      rho.push_back(o.pct_rho_undefined ? std::nullopt : std::optional<double>(o.pct_delta_rho));
      buti.push_back(o.pct_buti_undefined ? std::nullopt : std::optional<double>(o.pct_delta_buti));
    }
    pt.pooled.finish();
    pt.mean_pct_rho = mean_of(rho, pt.windows_rho);
    pt.mean_pct_buti = mean_of(buti, pt.windows_buti);
  }

  // bootstrap: resample every window, average the window percentages
  std::vector<std::vector<double>> rep_rho(nk, std::vector<double>(schedule.n_boot, 0.0));
  std::vector<std::vector<double>> rep_buti = rep_rho;
  std::vector<std::vector<char>> ok_rho(nk, std::vector<char>(schedule.n_boot, 0));
  std::vector<std::vector<char>> ok_buti = ok_rho;
  parallel_for(schedule.n_boot, threads, [&](std::size_t b) {
    std::vector<double> sum_rho(nk, 0.0), sum_buti(nk, 0.0);
    std::vector<std::size_t> n_rho(nk, 0), n_buti(nk, 0);
    for (std::size_t w = 0; w < windows.size(); ++w) {
      const auto& recs = windows[w];
      Rng rng(derive_seed(derive_seed(schedule.seed, Stream::kSweep, w), b));
      std::vector<const PolicyRecord*> pick(recs.size());
      for (auto& p : pick) p = &recs[static_cast<std::size_t>(rng.below(recs.size()))];
      for (std::size_t j = 0; j < nk; ++j) {
        ResampleCounts c;
        for (const auto* r : pick) {
          const int d = apply_machine_only(r->m, k_grid[j]) - r->rho_j;
          c.observed_rx += r->rho_j;
          c.observed_treated_buti += r->y * r->rho_j;
          c.delta_rho += d;
          c.delta_buti += r->y * d;
        }
        if (auto v = c.pct_rho()) {
          sum_rho[j] += *v;
          ++n_rho[j];
        }
        if (auto v = c.pct_buti()) {
          sum_buti[j] += *v;
          ++n_buti[j];
        }
      }
    }
    for (std::size_t j = 0; j < nk; ++j) {
      if (n_rho[j]) {
        rep_rho[j][b] = sum_rho[j] / static_cast<double>(n_rho[j]);
        ok_rho[j][b] = 1;
      }
      if (n_buti[j]) {
        rep_buti[j][b] = sum_buti[j] / static_cast<double>(n_buti[j]);
        ok_buti[j][b] = 1;
      }
    }
  });
  for (std::size_t j = 0; j < nk; ++j) {
    std::vector<double> r, u;
    for (std::size_t b = 0; b < schedule.n_boot; ++b) {
      if (ok_rho[j][b]) r.push_back(rep_rho[j][b]);
      if (ok_buti[j][b]) u.push_back(rep_buti[j][b]);
    }
    curve[j].ci_rho = percentile_interval(std::move(r));
    curve[j].ci_buti = percentile_interval(std::move(u));
  }
  return curve;
}

}  // namespace stewardsim
