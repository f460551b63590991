#pragma once

// Prediction-quality and physician-behaviour diagnostics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stewardsim/error.hpp"

namespace stewardsim {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  ///< records with score >= threshold are called positive
};

struct RocResult {
  std::vector<RocPoint> points;  ///< from (0,0) to (1,1)
  double auc = 0.5;
  bool auc_undefined = false;  ///< only one outcome class present
  std::size_t positives = 0, negatives = 0;
};

/// ROC curve over all distinct score thresholds. The AUC is the trapezoidal
/// area, accumulated in integer counts, which equals P(s+ > s-) + P(tie)/2.
inline RocResult roc_auc(std::span<const double> scores, std::span<const int> y) {
  detail::require_data(scores.size() == y.size(), "scores and outcomes differ in length");
  RocResult out;
  for (int v : y) {
    detail::require_data(v == 0 || v == 1, "outcomes must be 0 or 1");
    (v ? out.positives : out.negatives) += 1;
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double p = static_cast<double>(out.positives), n = static_cast<double>(out.negatives);
  auto rate = [](std::int64_t k, double total) { return total > 0 ? static_cast<double>(k) / total : 0.0; };
  out.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::int64_t tp = 0, fp = 0;
  std::int64_t twice_area = 0;  // sum of dFP * (TP_prev + TP_cur)
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const std::int64_t tp_prev = tp, fp_prev = fp;
    while (i < order.size() && scores[order[i]] == s) {
      (y[order[i]] ? tp : fp) += 1;
      ++i;
    }
    twice_area += (fp - fp_prev) * (tp + tp_prev);
    out.points.push_back({rate(fp, n), rate(tp, p), s});
  }
  if (out.positives == 0 || out.negatives == 0) {
    out.auc_undefined = true;
    out.auc = 0.5;
  } else {
    out.auc = static_cast<double>(twice_area) / (2.0 * p * n);
  }
  return out;
}

struct CalibrationBin {
  double mean_predicted = 0.0;
  double mean_outcome = 0.0;
  std::size_t size = 0;
};

/// Records sorted by descending score (ties by ascending id), cut into
/// consecutive bins of `bin_size`; the last bin may be smaller.
inline std::vector<CalibrationBin> calibration_bins(std::span<const double> scores, std::span<const int> y,
                                                    std::span<const std::string> ids, std::size_t bin_size = 100) {
  detail::require_config(bin_size >= 1, "calibration bin_size must be >= 1");
  detail::require_data(scores.size() == y.size(), "scores and outcomes differ in length");
  detail::require_data(ids.empty() || ids.size() == scores.size(), "ids and scores differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return !ids.empty() && ids[a] < ids[b];
  });
  std::vector<CalibrationBin> bins;
  for (std::size_t start = 0; start < order.size(); start += bin_size) {
    const std::size_t end = std::min(order.size(), start + bin_size);
    CalibrationBin bin;
    bin.size = end - start;
    for (std::size_t i = start; i < end; ++i) {
      bin.mean_predicted += scores[order[i]];
      bin.mean_outcome += y[order[i]];
    }
    bin.mean_predicted /= static_cast<double>(bin.size);
    bin.mean_outcome /= static_cast<double>(bin.size);
    bins.push_back(bin);
  }
  return bins;
}

/// Scored consultation as seen by the clinic-level diagnostics.
struct ClinicRecord {
  std::string clinic_id;
  double m = 0.0;
  int y = 0;
  int rho_j = 0;
};

struct ClinicDeviation {
  std::string clinic_id;
  std::size_t treated = 0, untreated = 0;
  std::optional<double> d;  ///< empty when one side has no records
};

/// D_c = mean(y - m | treated) - mean(y - m | untreated), per clinic, sorted
/// by clinic id.
inline std::vector<ClinicDeviation> mean_deviation(std::span<const ClinicRecord> records) {
  struct Acc {
    std::size_t nt = 0, nu = 0;
    double st = 0.0, su = 0.0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : records) {
    auto& a = acc[r.clinic_id];
    const double dev = static_cast<double>(r.y) - r.m;
    if (r.rho_j == 1) {
      ++a.nt;
      a.st += dev;
    } else {
      ++a.nu;
      a.su += dev;
    }
  }
  std::vector<ClinicDeviation> out;
  out.reserve(acc.size());
  for (const auto& [id, a] : acc) {
    ClinicDeviation c{id, a.nt, a.nu, std::nullopt};
    if (a.nt > 0 && a.nu > 0) c.d = a.st / static_cast<double>(a.nt) - a.su / static_cast<double>(a.nu);
    out.push_back(std::move(c));
  }
  return out;
}

struct ClinicRate {
  std::string clinic_id;
  std::size_t n = 0, n_pos = 0, n_neg = 0;
  std::optional<double> rate_pos;  ///< P(rho_j = 1 | y = 1)
  std::optional<double> rate_neg;  ///< P(rho_j = 1 | y = 0)
};

inline std::vector<ClinicRate> clinic_rates(std::span<const ClinicRecord> records) {
  struct Acc {
    std::size_t pos = 0, neg = 0, rx_pos = 0, rx_neg = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : records) {
    auto& a = acc[r.clinic_id];
    if (r.y == 1) {
      ++a.pos;
      a.rx_pos += r.rho_j;
    } else {
      ++a.neg;
      a.rx_neg += r.rho_j;
    }
  }
  std::vector<ClinicRate> out;
  for (const auto& [id, a] : acc) {
    ClinicRate c{id, a.pos + a.neg, a.pos, a.neg, std::nullopt, std::nullopt};
    if (a.pos > 0) c.rate_pos = static_cast<double>(a.rx_pos) / static_cast<double>(a.pos);
    if (a.neg > 0) c.rate_neg = static_cast<double>(a.rx_neg) / static_cast<double>(a.neg);
    out.push_back(std::move(c));
  }
  return out;
}

struct OlsCoefficient {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
};

struct OlsResult {
  std::vector<OlsCoefficient> coefficients;
  std::size_t n = 0;
  double r_squared = 0.0;
};

/// OLS with HC1 standard errors: V = n/(n-p) (X'X)^-1 X' diag(e^2) X (X'X)^-1.
/// `x` is n x p and must already contain the intercept column.
inline OlsResult ols_robust(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names = {}) {
  const auto n = x.rows(), p = x.cols();
  detail::require_data(y.size() == n, "design matrix and response differ in length");
  detail::require_data(p >= 1, "design matrix has no columns");
  detail::require_data(n > p, "OLS needs more observations than columns");
  if (names.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  }
  detail::require_data(static_cast<Eigen::Index>(names.size()) == p, "one name per design column expected");

  // the first column whose addition does not raise the rank is the culprit
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x.leftCols(j + 1));
    if (qr.rank() < j + 1) throw DataError("rank-deficient design: column '" + names[static_cast<std::size_t>(j)] + "'");
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - x * beta;
  const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
  const Eigen::MatrixXd meat = x.transpose() * resid.array().square().matrix().asDiagonal() * x;
  const double scale = static_cast<double>(n) / static_cast<double>(n - p);
  const Eigen::MatrixXd v = scale * xtx_inv * meat * xtx_inv;

  OlsResult out;
  out.n = static_cast<std::size_t>(n);
  const double ybar = y.mean();
  const double tss = (y.array() - ybar).square().sum();
  out.r_squared = tss > 0.0 ? 1.0 - resid.squaredNorm() / tss : 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    OlsCoefficient c;
    c.name = names[static_cast<std::size_t>(j)];
    c.estimate = beta(j);
    c.se = std::sqrt(std::max(0.0, v(j, j)));
    c.ci_lo = c.estimate - 1.96 * c.se;
    c.ci_hi = c.estimate + 1.96 * c.se;
    out.coefficients.push_back(std::move(c));
  }
  return out;
}

}  // namespace stewardsim
