#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "stewardsim/error.hpp"

namespace stewardsim {

/// Rolling-window specification. Days are integer offsets from study start.
struct Schedule {
  int eval_start_day = 360;
  std::size_t n_windows = 24;
  int tau_days = 30;     ///< evaluation window length
  int lambda_days = 7;   ///< ex-ante parameter update step
  double alpha = 0.8;    ///< fraction of ex-post potential targeted ex ante
  std::size_t n_boot = 100;
  std::uint64_t seed = 0;
  int fixed_train_days = 0;  ///< 0: expanding training window; otherwise trailing length
  bool clustered_bootstrap = false;  ///< resample clinics instead of consultations
  /// Ex ante: true fits one forest per slice on the data before the slice's
  /// calibration period; false reuses the monthly ex-post forests (each
  /// trained before its own window), which is much cheaper.
  bool exante_refit = true;

  int eval_end_day() const { return eval_start_day + static_cast<int>(n_windows) * tau_days; }
  int window_start(std::size_t w) const { return eval_start_day + static_cast<int>(w) * tau_days; }

  void validate() const {
    detail::require_config(eval_start_day >= 0, "schedule.eval_start_day must be >= 0");
    detail::require_config(n_windows >= 1, "schedule.n_windows must be >= 1");
    detail::require_config(lambda_days >= 1, "schedule.lambda_days must be >= 1");
    detail::require_config(tau_days >= lambda_days, "schedule.tau_days must be >= schedule.lambda_days");
    detail::require_config(alpha > 0.0 && alpha <= 1.0, "schedule.alpha must lie in (0, 1]");
    detail::require_config(n_boot >= 2, "schedule.n_boot must be >= 2");
    detail::require_config(fixed_train_days >= 0, "schedule.fixed_train_days must be >= 0");
  }

  void validate(int horizon_days) const {
    validate();
    detail::require_config(eval_end_day() <= horizon_days,
                           "schedule ends at day " + std::to_string(eval_end_day()) + " beyond the cohort horizon (" +
                               std::to_string(horizon_days) + " days)");
  }
};

}  // namespace stewardsim
