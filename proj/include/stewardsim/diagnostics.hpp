#pragma once

// Model and physician diagnostics on the pooled out-of-sample ex-post scores.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stewardsim/cohort.hpp"
#include "stewardsim/error.hpp"
#include "stewardsim/forest.hpp"
#include "stewardsim/metrics.hpp"
#include "stewardsim/rolling.hpp"
#include "stewardsim/schedule.hpp"

namespace stewardsim {

struct DiagnosticsOptions {
  std::size_t calibration_bin_size = 100;
  std::size_t min_clinic_consultations = 3;
  std::size_t importance_reps = 3;
  double histogram_bin_width = 0.05;
  unsigned threads = 1;
};

struct HistogramBin {
  double lo = 0.0, hi = 0.0;
  std::size_t count = 0;
};

struct Diagnostics {
  RocResult roc;
  std::vector<CalibrationBin> calibration;
  std::vector<ClinicRate> clinic_rates;  ///< clinics below the size floor are left out
  std::vector<ClinicDeviation> deviations;
  std::vector<HistogramBin> deviation_histogram;
  std::optional<OlsResult> ols;  ///< empty without clinic characteristics
  std::vector<double> importance;
  std::size_t importance_window = 0;
  std::size_t scored = 0;
  std::vector<std::string> warnings;
};

inline const std::vector<std::string>& clinic_characteristics() {
  static const std::vector<std::string> names{"intercept",         "n_physicians",           "mean_age",
                                              "share_female",      "patients_per_physician", "tests_per_patient"};
  return names;
}

/// Fixed-width bins aligned on multiples of `width`, covering every value.
inline std::vector<HistogramBin> histogram(const std::vector<double>& values, double width) {
  detail::require_config(width > 0.0, "histogram bin width must be positive");
  if (values.empty()) return {};
  const double lo_v = *std::min_element(values.begin(), values.end());
  const double hi_v = *std::max_element(values.begin(), values.end());
  const double start = std::floor(lo_v / width);
  const auto n = static_cast<std::size_t>(std::floor(hi_v / width) - start) + 1;
  std::vector<HistogramBin> bins(n);
  for (std::size_t i = 0; i < n; ++i) {
    bins[i].lo = (start + static_cast<double>(i)) * width;
    bins[i].hi = (start + static_cast<double>(i) + 1.0) * width;
  }
  for (double v : values) {
    auto i = static_cast<std::ptrdiff_t>(std::floor(v / width) - start);
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1);
    ++bins[static_cast<std::size_t>(i)].count;
  }
  return bins;
}

/// Needs ex-post scores. Feature importance uses the forest of the last
/// non-empty window, refitted with its own seed, on that window's records.
inline Diagnostics diagnose(const Cohort& cohort, const Schedule& schedule, const ForestParams& forest,
                            const ScoreCache& cache, const DiagnosticsOptions& opt = {}) {
  Diagnostics out;
  std::vector<double> scores;
  std::vector<int> y;
  std::vector<std::string> ids;
  std::vector<ClinicRecord> clinic_records;
  const WindowScores* last = nullptr;
  for (const auto& ws : cache.expost) {
    if (ws.end > ws.begin) last = &ws;
    for (std::size_t i = ws.begin; i < ws.end; ++i) {
      const auto& c = cohort.consultations[i];
      const double m = ws.scores[i - ws.begin];
      scores.push_back(m);
      y.push_back(c.y);
      ids.push_back(c.patient_id);
      clinic_records.push_back({c.clinic_id, m, c.y, c.rho_j});
    }
  }
  detail::require_data(last != nullptr, "diagnostics need at least one scored window");
  out.scored = scores.size();
  out.roc = roc_auc(scores, y);
  if (out.roc.auc_undefined) out.warnings.push_back("AUC undefined: only one outcome class in the scored windows");
  out.calibration = calibration_bins(scores, y, ids, opt.calibration_bin_size);

  for (auto& r : clinic_rates(clinic_records)) {
    if (r.n >= opt.min_clinic_consultations) out.clinic_rates.push_back(std::move(r));
  }
  out.deviations = mean_deviation(clinic_records);
  std::vector<double> defined;
  for (const auto& d : out.deviations) {
    if (d.d) defined.push_back(*d.d);
  }
  out.deviation_histogram = histogram(defined, opt.histogram_bin_width);

  // D_c on clinic characteristics
  std::vector<std::pair<const Clinic*, double>> rows;
  for (const auto& d : out.deviations) {
    const Clinic* k = cohort.find_clinic(d.clinic_id);
    if (k && d.d) rows.emplace_back(k, *d.d);
  }
  const auto& names = clinic_characteristics();
  if (rows.size() > names.size()) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    Eigen::VectorXd dv(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Clinic& k = *rows[i].first;
      const auto r = static_cast<Eigen::Index>(i);
      x.row(r) << 1.0, k.n_physicians, k.mean_age, k.share_female, k.patients_per_physician, k.tests_per_patient;
      dv(r) = rows[i].second;
    }
    out.ols = ols_robust(x, dv, names);
  } else {
    out.warnings.push_back("clinic regression skipped: too few clinics with characteristics and a defined D_c");
  }

  const detail::CohortData data(cohort);
  const auto [tb, te] = training_range(cohort, last->eval_start, schedule.fixed_train_days);
  ForestParams hyper = forest;
  hyper.seed = fit_seed(forest.seed, last->window_id);
  const auto model = fit(data.coded, data.y, tb, te, hyper, opt.threads);
  FeatureMatrix x_eval(0, data.x.cols());
  std::vector<double> y_eval;
  for (std::size_t i = last->begin; i < last->end; ++i) {
    x_eval.append_row(data.x.row(i));
    y_eval.push_back(data.y[i]);
  }
  out.importance = permutation_importance(model, x_eval, y_eval, opt.importance_reps,
                                          derive_seed(forest.seed, Stream::kPermutation, last->window_id), opt.threads);
  out.importance_window = last->window_id;
  return out;
}

}  // namespace stewardsim
