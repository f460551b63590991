#pragma once

// Report writers. Every CSV starts with a header row and keeps a fixed column
// order; undefined values are written as empty fields (CSV) or null (JSON).

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stewardsim/cohort_io.hpp"
#include "stewardsim/diagnostics.hpp"
#include "stewardsim/optimizer.hpp"
#include "stewardsim/policy.hpp"
#include "stewardsim/rolling.hpp"

namespace stewardsim {

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::initializer_list<const char*> header) : out_(out), width_(header.size()) {
    bool first = true;
    for (const char* h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }

  CsvWriter& operator<<(const std::string& v) { return field(v); }
  CsvWriter& operator<<(const char* v) { return field(v); }
  CsvWriter& operator<<(double v) { return field(format_double(v)); }
  CsvWriter& operator<<(bool v) { return field(v ? "1" : "0"); }
  CsvWriter& operator<<(std::optional<double> v) { return field(v ? format_double(*v) : std::string{}); }
  template <typename T>
    requires std::is_integral_v<T>
  CsvWriter& operator<<(T v) {
    return field(std::to_string(v));
  }

  void end_row() {
    ensure(col_ == width_, "CSV row has the wrong number of fields");
    out_ << '\n';
    col_ = 0;
  }

 private:
  CsvWriter& field(const std::string& v) {
    if (col_ > 0) out_ << ',';
    out_ << v;
    ++col_;
    return *this;
  }

  std::ostream& out_;
  std::size_t width_;
  std::size_t col_ = 0;
};

inline std::optional<double> defined_if(bool undefined, double v) {
  return undefined ? std::nullopt : std::optional<double>(v);
}

inline nlohmann::json json_value(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline nlohmann::json json_interval(const Interval& iv) {
  if (!iv.defined) return {{"lo", nullptr}, {"hi", nullptr}, {"defined", false}};
  return {{"lo", iv.lo}, {"hi", iv.hi}, {"defined", true}};
}

inline const char* objective_metric(Rule r) { return r == Rule::kReduction ? "pct_delta_rho" : "pct_delta_buti"; }
inline const char* constraint_metric(Rule r) { return r == Rule::kReduction ? "pct_delta_buti" : "pct_delta_rho"; }

inline bool objective_undefined(const PolicyOutcome& o, Rule r) {
  return r == Rule::kReduction ? o.pct_rho_undefined : o.pct_buti_undefined;
}
inline bool constraint_undefined(const PolicyOutcome& o, Rule r) {
  return r == Rule::kReduction ? o.pct_buti_undefined : o.pct_rho_undefined;
}

inline nlohmann::json json_counts(const PolicyOutcome& o) {
  return {{"n", o.n},
          {"observed_rx", o.observed_rx},
          {"observed_treated_buti", o.observed_treated_buti},
          {"delta_rho", o.delta_rho},
          {"delta_buti", o.delta_buti},
          {"n_changed", o.n_changed}};
}

}  // namespace detail

/// One row per (run, window); used for both expost_windows.csv and
/// exante_windows.csv.
inline void write_windows_csv(std::span<const RunReport> runs, std::ostream& out) {
  detail::CsvWriter csv(out, {"mode", "rule", "exempt_pregnant", "window_id", "eval_start", "eval_end", "empty", "n",
                              "observed_rx", "observed_treated_buti", "delta_rho", "delta_buti", "n_changed",
                              "pct_delta_rho", "pct_delta_buti", "objective_pct", "objective_ci_lo",
                              "objective_ci_hi", "excluded_resamples", "n_param_sets", "k_L", "k_H"});
  for (const auto& run : runs) {
    for (const auto& w : run.windows) {
      const auto& o = w.outcome;
      const bool undef = w.empty || detail::objective_undefined(o, run.rule);
      csv << run.mode << rule_name(run.rule) << run.exempt_pregnant << w.window_id << w.eval_start << w.eval_end
          << w.empty << o.n << o.observed_rx << o.observed_treated_buti << o.delta_rho << o.delta_buti << o.n_changed
          << detail::defined_if(w.empty || o.pct_rho_undefined, o.pct_delta_rho)
          << detail::defined_if(w.empty || o.pct_buti_undefined, o.pct_delta_buti)
          << detail::defined_if(undef, w.objective_pct)
          << detail::defined_if(!w.objective_ci.defined, w.objective_ci.lo)
          << detail::defined_if(!w.objective_ci.defined, w.objective_ci.hi) << w.excluded_objective
          << w.params.size();
      // a single parameter set is shown inline; ex-ante windows list theirs in policy_rows.json
      const bool one = w.params.size() == 1;
      csv << detail::defined_if(!one, one ? w.params[0].params.k_L : 0.0)
          << detail::defined_if(!one, one ? w.params[0].params.k_H : 0.0);
      csv.end_row();
    }
  }
}

inline void write_constraint_csv(std::span<const RunReport> runs, std::ostream& out) {
  detail::CsvWriter csv(out, {"mode", "rule", "exempt_pregnant", "window_id", "eval_start", "eval_end",
                              "constraint_metric", "constraint_pct", "ci_lo", "ci_hi", "ci_covers_zero",
                              "excluded_resamples", "violated"});
  for (const auto& run : runs) {
    for (const auto& w : run.windows) {
      const bool undef = w.empty || detail::constraint_undefined(w.outcome, run.rule);
      csv << run.mode << rule_name(run.rule) << run.exempt_pregnant << w.window_id << w.eval_start << w.eval_end
          << detail::constraint_metric(run.rule) << detail::defined_if(undef, w.constraint_pct)
          << detail::defined_if(!w.constraint_ci.defined, w.constraint_ci.lo)
          << detail::defined_if(!w.constraint_ci.defined, w.constraint_ci.hi) << w.constraint_ci.covers(0.0)
          << w.excluded_constraint << w.constraint_violated;
      csv.end_row();
    }
  }
}

/// Policy evaluation rows: {window_id, k_L, k_H, counts, deltas, percentages, flags}.
inline nlohmann::json policy_rows_json(std::span<const RunReport> runs) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& run : runs) {
    for (const auto& w : run.windows) {
      nlohmann::json params = nlohmann::json::array();
      for (const auto& p : w.params) {
        params.push_back({{"start_day", p.start_day},
                          {"end_day", p.end_day},
                          {"k_L", p.params.k_L},
                          {"k_H", p.params.k_H},
                          {"slack", p.slack},
                          {"calibration_potential", p.calibration_potential}});
      }
      const auto& o = w.outcome;
      rows.push_back({{"mode", run.mode},
                      {"rule", rule_name(run.rule)},
                      {"exempt_pregnant", run.exempt_pregnant},
                      {"window_id", w.window_id},
                      {"params", std::move(params)},
                      {"counts", detail::json_counts(o)},
                      {"pct_delta_rho", detail::json_value(detail::defined_if(w.empty || o.pct_rho_undefined, o.pct_delta_rho))},
                      {"pct_delta_buti", detail::json_value(detail::defined_if(w.empty || o.pct_buti_undefined, o.pct_delta_buti))},
                      {"flags",
                       {{"empty", w.empty},
                        {"pct_rho_undefined", o.pct_rho_undefined},
                        {"pct_buti_undefined", o.pct_buti_undefined},
                        {"constraint_violated", w.constraint_violated}}}});
    }
  }
  return rows;
}

inline void write_trace_csv(std::span<const RunReport> runs, std::ostream& out) {
  detail::CsvWriter csv(out, {"rule", "exempt_pregnant", "window_id", "a", "b", "k_L", "k_H", "delta_rho",
                              "delta_buti", "feasible"});
  for (const auto& run : runs) {
    for (const auto& w : run.windows) {
      for (const auto& t : w.trace) {
        csv << rule_name(run.rule) << run.exempt_pregnant << w.window_id << t.a << t.b << t.k_L << t.k_H
            << t.delta_rho << t.delta_buti << t.feasible;
        csv.end_row();
      }
    }
  }
}

inline nlohmann::json run_json(const RunReport& run) {
  const auto& a = run.aggregate;
  const bool obj_undef = a.windows == a.empty_windows || detail::objective_undefined(a.outcome, run.rule);
  const bool con_undef = a.windows == a.empty_windows || detail::constraint_undefined(a.outcome, run.rule);
  return {{"mode", run.mode},
          {"rule", rule_name(run.rule)},
          {"exempt_pregnant", run.exempt_pregnant},
          {"windows", a.windows},
          {"empty_windows", a.empty_windows},
          {"objective",
           {{"metric", detail::objective_metric(run.rule)},
            {"point", detail::json_value(detail::defined_if(obj_undef, a.objective_pct))},
            {"ci", detail::json_interval(a.objective_ci)},
            {"excluded_resamples", a.excluded_objective}}},
          {"constraint",
           {{"metric", detail::constraint_metric(run.rule)},
            {"point", detail::json_value(detail::defined_if(con_undef, a.constraint_pct))},
            {"ci", detail::json_interval(a.constraint_ci)},
            {"excluded_resamples", a.excluded_constraint},
            {"windows_ci_covers_zero", a.constraint_ci_covers_zero},
            {"windows_violated", a.constraint_violations}}},
          {"counts", detail::json_counts(a.outcome)}};
}

inline nlohmann::json sweep_summary_json(std::span<const SweepPoint> curve) {
  bool win_win = false;
  for (const auto& p : curve) {
    win_win = win_win || (p.windows_rho > 0 && p.windows_buti > 0 && p.mean_pct_rho < 0.0 && p.mean_pct_buti > 0.0);
  }
  nlohmann::json j = {{"points", curve.size()}, {"win_win_exists", win_win}};
  if (!curve.empty()) {
    auto point = [](const SweepPoint& p) {
      return nlohmann::json{{"k", p.k},
                            {"mean_pct_delta_rho", detail::json_value(detail::defined_if(p.windows_rho == 0, p.mean_pct_rho))},
                            {"mean_pct_delta_buti", detail::json_value(detail::defined_if(p.windows_buti == 0, p.mean_pct_buti))}};
    };
    j["first"] = point(curve.front());
    j["last"] = point(curve.back());
  }
  return j;
}

struct AggregateContext {
  std::uint64_t seed = 0;
  std::string cohort_source;
  std::size_t n_consultations = 0;
  std::optional<double> auc;  ///< pooled ex-post AUC when known
};

inline nlohmann::json aggregate_json(const AggregateContext& ctx, std::span<const RunReport> runs,
                                     const std::vector<SweepPoint>* sweep = nullptr) {
  nlohmann::json j = {{"schema_version", kReportSchemaVersion},
                      {"seed", ctx.seed},
                      {"cohort_source", ctx.cohort_source},
                      {"n_consultations", ctx.n_consultations},
                      {"auc", detail::json_value(ctx.auc)}};
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : runs) arr.push_back(run_json(r));
  j["runs"] = std::move(arr);
  if (sweep) j["machine_only"] = sweep_summary_json(*sweep);
  return j;
}

inline void write_sweep_csv(std::span<const SweepPoint> curve, std::ostream& out) {
  detail::CsvWriter csv(out, {"k", "mean_pct_delta_rho", "ci_rho_lo", "ci_rho_hi", "mean_pct_delta_buti",
                              "ci_buti_lo", "ci_buti_hi", "windows_rho", "windows_buti", "pooled_observed_rx",
                              "pooled_delta_rho", "pooled_pct_delta_rho", "pooled_observed_treated_buti",
                              "pooled_delta_buti", "pooled_pct_delta_buti"});
  for (const auto& p : curve) {
    const auto& o = p.pooled;
    csv << p.k << detail::defined_if(p.windows_rho == 0, p.mean_pct_rho)
        << detail::defined_if(!p.ci_rho.defined, p.ci_rho.lo) << detail::defined_if(!p.ci_rho.defined, p.ci_rho.hi)
        << detail::defined_if(p.windows_buti == 0, p.mean_pct_buti)
        << detail::defined_if(!p.ci_buti.defined, p.ci_buti.lo)
        << detail::defined_if(!p.ci_buti.defined, p.ci_buti.hi) << p.windows_rho << p.windows_buti << o.observed_rx
        << o.delta_rho << detail::defined_if(o.pct_rho_undefined, o.pct_delta_rho) << o.observed_treated_buti
        << o.delta_buti << detail::defined_if(o.pct_buti_undefined, o.pct_delta_buti);
    csv.end_row();
  }
}

// ---------------------------------------------------------------------------
// Diagnostics

inline void write_roc_csv(const RocResult& roc, std::ostream& out) {
  detail::CsvWriter csv(out, {"fpr", "tpr", "threshold"});
  for (const auto& p : roc.points) {
    csv << p.fpr << p.tpr << p.threshold;
    csv.end_row();
  }
}

inline void write_calibration_csv(std::span<const CalibrationBin> bins, std::ostream& out) {
  detail::CsvWriter csv(out, {"bin", "size", "mean_predicted", "mean_outcome"});
  for (std::size_t i = 0; i < bins.size(); ++i) {
    csv << i << bins[i].size << bins[i].mean_predicted << bins[i].mean_outcome;
    csv.end_row();
  }
}

inline void write_clinic_rates_csv(std::span<const ClinicRate> rates, std::ostream& out) {
  detail::CsvWriter csv(out, {"clinic_id", "n", "n_positive", "n_negative", "rx_rate_positive", "rx_rate_negative"});
  for (const auto& r : rates) {
    csv << r.clinic_id << r.n << r.n_pos << r.n_neg << r.rate_pos << r.rate_neg;
    csv.end_row();
  }
}

inline void write_deviation_csv(std::span<const ClinicDeviation> devs, std::ostream& out) {
  detail::CsvWriter csv(out, {"clinic_id", "n_treated", "n_untreated", "mean_deviation"});
  for (const auto& d : devs) {
    csv << d.clinic_id << d.treated << d.untreated << d.d;
    csv.end_row();
  }
}

inline void write_histogram_csv(std::span<const HistogramBin> bins, std::ostream& out) {
  detail::CsvWriter csv(out, {"bin_lo", "bin_hi", "count"});
  for (const auto& b : bins) {
    csv << b.lo << b.hi << b.count;
    csv.end_row();
  }
}

/// Without a regression only the header is written.
inline void write_ols_csv(const std::optional<OlsResult>& ols, std::ostream& out) {
  detail::CsvWriter csv(out, {"term", "estimate", "robust_se", "ci_lo", "ci_hi", "n", "r_squared"});
  if (!ols) return;
  for (const auto& c : ols->coefficients) {
    csv << c.name << c.estimate << c.se << c.ci_lo << c.ci_hi << ols->n << ols->r_squared;
    csv.end_row();
  }
}

inline void write_importance_csv(std::span<const double> importance, std::ostream& out) {
  detail::CsvWriter csv(out, {"feature", "importance"});
  for (std::size_t j = 0; j < importance.size(); ++j) {
    csv << ("x" + std::to_string(j)) << importance[j];
    csv.end_row();
  }
}

inline nlohmann::json cohort_meta_json(const Cohort& cohort) {
  std::size_t pos = 0, rx = 0, preg = 0;
  for (const auto& c : cohort.consultations) {
    pos += static_cast<std::size_t>(c.y);
    rx += static_cast<std::size_t>(c.rho_j);
    preg += static_cast<std::size_t>(c.pregnant);
  }
  const double n = static_cast<double>(cohort.size());
  auto share = [&](std::size_t k) { return cohort.empty() ? nlohmann::json(nullptr) : nlohmann::json(static_cast<double>(k) / n); };
  return {{"source", cohort.meta.source},
          {"seed", cohort.meta.seed},
          {"n_consultations", cohort.size()},
          {"n_clinics", cohort.clinics.size()},
          {"n_features", cohort.n_features()},
          {"horizon_days", cohort.meta.config.horizon_days},
          {"positive_rate", share(pos)},
          {"rx_rate", share(rx)},
          {"pregnant_share", share(preg)},
          {"warnings", cohort.meta.warnings}};
}

}  // namespace stewardsim
