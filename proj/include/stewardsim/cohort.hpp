#pragma once

// Consultation cohorts: the synthetic generator, the initial-consultation
// filter, and the rolling train/evaluation split.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "stewardsim/error.hpp"
#include "stewardsim/feature_matrix.hpp"
#include "stewardsim/random.hpp"
#include "stewardsim/schedule.hpp"

namespace stewardsim {

/// One initial patient contact with a laboratory test.
struct Consultation {
  std::string patient_id;
  std::string clinic_id;
  int day = 0;
  std::vector<double> covariates;
  int y = 0;             ///< bacterial isolate in the sample
  int rho_j = 0;         ///< physician prescribed before the result
  int post_test_rx = 0;  ///< prescription within 10 days after the result
  int pregnant = 0;

  bool operator==(const Consultation&) const = default;
};

struct Clinic {
  std::string clinic_id;
  double n_physicians = 1.0;
  double mean_age = 50.0;
  double share_female = 0.5;
  double patients_per_physician = 1.0;
  double tests_per_patient = 1.0;
  // Latent generator fields, exported for diagnostics only.
  double leniency = 0.0;
  double expertise = 0.0;

  bool operator==(const Clinic&) const = default;
};

struct CohortConfig {
  std::size_t n_consultations = 20000;
  std::size_t n_features = 60;
  std::size_t n_noise_features = 10;
  std::size_t n_clinics = 120;
  std::size_t n_latent = 6;
  int horizon_days = 1080;

  double target_positive_rate = 0.33;
  double target_rx_rate = 0.31;
  double target_pregnant_share = 0.28;
  double target_followup_share = 0.70;
  double followup_negative_rate = 0.40;
  double tolerance = 0.03;

  double signal_strength = 1.0;  ///< 0 makes every covariate uninformative
  double hidden_strength = 0.8;  ///< risk component no covariate observes
  double covariate_noise = 0.6;
  double season_amplitude = 0.25;
  double trend_strength = 0.2;
  double volume_growth = 0.5;

  double expertise_mean = 1.2;
  double expertise_sd = 0.5;
  double leniency_sd = 1.2;
  double decision_noise = 0.6;       ///< mean sd of the physician's idiosyncratic noise
  double private_noise_min = 0.5;    ///< range of the clinic sd of the private signal
  double private_noise_max = 2.0;
  double pregnant_rx_shift = 0.4;    ///< added to the physician signal for pregnant patients
  double physician_observable_weight = 0.55;  ///< share of the covariate-driven risk the physician perceives

  std::size_t informative_features() const { return n_features - n_noise_features; }

  void validate() const {
    using detail::require_config;
    require_config(n_consultations >= 1, "cohort.n_consultations must be positive");
    require_config(n_features >= 5, "cohort.n_features must be >= 5");
    require_config(n_noise_features < n_features && n_features - n_noise_features >= 3,
                   "cohort.n_noise_features leaves fewer than 3 informative features");
    require_config(n_clinics >= 1, "cohort.n_clinics must be positive");
    require_config(n_latent >= 1, "cohort.n_latent must be positive");
    require_config(horizon_days >= 1, "cohort.horizon_days must be positive");
    auto unit = [](double v) { return v > 0.0 && v < 1.0; };
    require_config(unit(target_positive_rate), "cohort.target_positive_rate must lie in (0,1)");
    require_config(unit(target_rx_rate), "cohort.target_rx_rate must lie in (0,1)");
    require_config(unit(target_pregnant_share), "cohort.target_pregnant_share must lie in (0,1)");
    require_config(unit(target_followup_share), "cohort.target_followup_share must lie in (0,1)");
    require_config(followup_negative_rate >= 0.0 && followup_negative_rate < 1.0,
                   "cohort.followup_negative_rate must lie in [0,1)");
    require_config(tolerance > 0.0, "cohort.tolerance must be positive");
    require_config(signal_strength >= 0.0, "cohort.signal_strength must be >= 0");
    require_config(hidden_strength >= 0.0, "cohort.hidden_strength must be >= 0");
    require_config(covariate_noise > 0.0, "cohort.covariate_noise must be positive");
    require_config(volume_growth > -1.0, "cohort.volume_growth must be > -1");
    require_config(expertise_sd >= 0.0 && leniency_sd >= 0.0, "cohort physician spreads must be >= 0");
    require_config(decision_noise > 0.0, "cohort.decision_noise must be positive");
    require_config(physician_observable_weight >= 0.0 && physician_observable_weight <= 1.0,
                   "cohort.physician_observable_weight must lie in [0,1]");
    require_config(private_noise_min > 0.0 && private_noise_max >= private_noise_min,
                   "cohort.private_noise_min/max must satisfy 0 < min <= max");
  }
};

struct CohortMeta {
  std::string source = "generated";  ///< generated | csv | filtered
  std::uint64_t seed = 0;
  CohortConfig config{};
  std::vector<std::string> warnings;
};

struct Cohort {
  std::vector<Consultation> consultations;  ///< sorted by day (stable)
  std::vector<Clinic> clinics;              ///< sorted by clinic_id
  CohortMeta meta;
  /// Generator ground truth P(y=1) per consultation (same order); empty for
  /// ingested data. Never used as a model input.
  std::vector<double> latent_risk;

  std::size_t size() const noexcept { return consultations.size(); }
  bool empty() const noexcept { return consultations.empty(); }
  std::size_t n_features() const { return consultations.empty() ? meta.config.n_features : consultations.front().covariates.size(); }

  const Clinic* find_clinic(const std::string& id) const {
    auto it = std::lower_bound(clinics.begin(), clinics.end(), id,
                               [](const Clinic& c, const std::string& key) { return c.clinic_id < key; });
    return it != clinics.end() && it->clinic_id == id ? &*it : nullptr;
  }
};

/// Feature matrix and outcomes for a contiguous slice of consultations.
inline FeatureMatrix feature_matrix(std::span<const Consultation> rows, std::size_t n_features) {
  FeatureMatrix x(0, n_features);
  x.reserve_rows(rows.size());
  for (const auto& c : rows) x.append_row(c.covariates);
  return x;
}

inline std::vector<double> outcomes(std::span<const Consultation> rows) {
  std::vector<double> y;
  y.reserve(rows.size());
  for (const auto& c : rows) y.push_back(static_cast<double>(c.y));
  return y;
}

namespace detail {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Consultation invariants shared by every cohort producer.
inline void check_consultation(const Consultation& c, std::size_t n_features, std::optional<int> horizon_days) {
  auto binary = [](int v) { return v == 0 || v == 1; };
  require_data(binary(c.y), "y must be 0 or 1");
  require_data(binary(c.rho_j), "rho_j must be 0 or 1");
  require_data(binary(c.post_test_rx), "post_test_rx must be 0 or 1");
  require_data(binary(c.pregnant), "pregnant must be 0 or 1");
  require_data(c.day >= 0, "day must be >= 0");
  if (horizon_days) require_data(c.day < *horizon_days, "day must be < horizon_days");
  require_data(c.covariates.size() == n_features, "expected " + std::to_string(n_features) + " covariates");
  for (double v : c.covariates) require_data(std::isfinite(v), "covariates must be finite");
}

/// Stable day sort plus the (patient_id, day) uniqueness check.
inline void finalize_order(std::vector<Consultation>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const Consultation& a, const Consultation& b) { return a.day < b.day; });
  std::vector<std::pair<std::string_view, int>> keys;
  keys.reserve(rows.size());
  for (const auto& c : rows) keys.emplace_back(c.patient_id, c.day);
  std::sort(keys.begin(), keys.end());
  auto dup = std::adjacent_find(keys.begin(), keys.end());
  require_data(dup == keys.end(), dup == keys.end() ? std::string{}
                                                    : "duplicate (patient_id, day): (" + std::string(dup->first) + ", " +
                                                          std::to_string(dup->second) + ")");
}

inline std::string padded_id(char prefix, std::size_t i, int width) {
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return std::string(1, prefix) + digits;
}

/// Intercept c with mean(sigmoid(c + eta)) == target, by bisection.
inline double solve_intercept(std::span<const double> eta, double target) {
  double lo = -30.0, hi = 30.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (double e : eta) mean += sigmoid(mid + e);
    mean /= static_cast<double>(eta.size());
    (mean < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Relative weights of the latent factors in the risk index; factor 0 dominates.
inline double factor_weight(std::size_t k) { return 1.0 / (1.0 + 0.6 * static_cast<double>(k)); }

struct PatientDraws {
  double t = 0.0;  ///< continuous time in [0, horizon)
  double clinic_u = 0.0;
  std::vector<double> latent;
  double hidden = 0.0;
  int pregnant = 0;
  std::vector<double> feature_noise;
  double outcome_u = 0.0;
  double followup_u = 0.0;
  double private_noise = 0.0;
  double decision_noise = 0.0;
};

inline PatientDraws draw_patient(const CohortConfig& cfg, std::uint64_t seed, std::size_t i) {
  Rng rng(derive_seed(seed, Stream::kPatient, i));
  PatientDraws d;
  const double h = static_cast<double>(cfg.horizon_days);
  const double g = cfg.volume_growth;
  // density proportional to 1 + g*t/h on [0, h): invert the quadratic CDF
  const double u = rng.uniform();
  if (std::abs(g) < 1e-12) {
    d.t = u * h;
  } else {
    const double a = g / (2.0 * h), b = 1.0, c = -u * (h + g * h / 2.0);
    d.t = (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
  }
  d.t = std::clamp(d.t, 0.0, std::nextafter(h, 0.0));
  d.clinic_u = rng.uniform();
  d.latent.resize(cfg.n_latent);
  for (auto& z : d.latent) z = rng.normal();
  d.hidden = rng.normal();
  d.pregnant = rng.bernoulli(cfg.target_pregnant_share) ? 1 : 0;
  d.feature_noise.resize(cfg.n_features);
  for (auto& e : d.feature_noise) e = rng.normal();
  d.outcome_u = rng.uniform();
  d.followup_u = rng.uniform();
  d.private_noise = rng.normal();
  d.decision_noise = rng.normal();
  return d;
}

struct ClinicDraw {
  Clinic clinic;
  double weight = 1.0;
  double decision_sd = 1.0;
  double private_sd = 1.0;
};

inline ClinicDraw draw_clinic(const CohortConfig& cfg, std::uint64_t seed, std::size_t c) {
  Rng rng(derive_seed(seed, Stream::kClinic, c));
  ClinicDraw d;
  auto& k = d.clinic;
  k.clinic_id = padded_id('C', c, 3);
  k.n_physicians = 1.0 + static_cast<double>(rng.below(5));
  k.mean_age = std::clamp(rng.normal(52.0, 7.0), 30.0, 75.0);
  k.share_female = rng.uniform();
  const double z_ppp = rng.normal();
  const double z_tests = rng.normal();
  k.patients_per_physician = std::exp(std::log(40.0) + 0.4 * z_ppp);
  k.tests_per_patient = std::exp(std::log(1.5) + 0.25 * z_tests);
  const double z_age = (k.mean_age - 52.0) / 7.0;
  const double z_phys = (k.n_physicians - 3.0) / std::sqrt(2.0);
  // expertise correlates with clinic volume, testing propensity and age
  const double loadings = 0.35 * z_ppp + 0.25 * z_tests + 0.2 * z_phys - 0.35 * z_age;
  const double resid = std::sqrt(1.0 - (0.35 * 0.35 + 0.25 * 0.25 + 0.2 * 0.2 + 0.35 * 0.35));
  k.expertise = std::max(0.0, cfg.expertise_mean + cfg.expertise_sd * (loadings + resid * rng.normal()));
  k.leniency = cfg.leniency_sd * rng.normal();
  d.decision_sd = cfg.decision_noise * std::exp(0.35 * rng.normal());
  d.private_sd = rng.uniform(cfg.private_noise_min, cfg.private_noise_max);
  d.weight = k.n_physicians * k.patients_per_physician;
  return d;
}

/// Maps a latent value to a registry-style covariate: rounded measurement,
/// small count, or indicator.
inline double encode_covariate(double v, std::size_t kind) {
  switch (kind % 3) {
    case 0:
      return std::round(v * 10.0) / 10.0;
    case 1:
      return std::max(0.0, std::round(2.0 + 1.5 * v));
    default:
      return v > 0.5 ? 1.0 : 0.0;
  }
}

}  // namespace detail

/// Synthetic cohort from a latent-factor logistic risk model with clinic-level
/// leniency and expertise. Deterministic in (config, seed); every patient's
/// randomness comes from its own derived stream.
///
/// Latent risk r = sigmoid(c0 + s*beta.z + h*u + season(day) + trend(day)),
/// with u unobserved by any covariate. Covariates are noisy encodings of z
/// (plus calendar month and pregnancy); the last n_noise_features are pure
/// noise. The physician sees s_i = logit(r) - (1 - w)*o + expertise*g + e,
/// where o is the covariate-driven part of logit(r), w the observable weight
/// and g = y + N(0, sd_g) a private signal, and prescribes iff s_i exceeds
/// the clinic threshold. c0 and the global prescribing threshold are solved so that the
/// positive and prescription rates match their targets.
inline Cohort generate(const CohortConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = cfg.n_consultations;
  const std::size_t k_latent = cfg.n_latent;
  const std::size_t d_inf = cfg.informative_features();

  std::vector<detail::ClinicDraw> clinics;
  clinics.reserve(cfg.n_clinics);
  for (std::size_t c = 0; c < cfg.n_clinics; ++c) clinics.push_back(detail::draw_clinic(cfg, seed, c));
  std::vector<double> cum_weight(clinics.size());
  double total_w = 0.0;
  for (std::size_t c = 0; c < clinics.size(); ++c) cum_weight[c] = (total_w += clinics[c].weight);

  std::vector<detail::PatientDraws> draws;
  draws.reserve(n);
  for (std::size_t i = 0; i < n; ++i) draws.push_back(detail::draw_patient(cfg, seed, i));

  const double two_pi = 2.0 * 3.14159265358979323846;
  const double horizon = static_cast<double>(cfg.horizon_days);
  std::vector<double> eta(n), eta_obs(n);
  std::vector<std::size_t> clinic_of(n);
  std::vector<int> day(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = draws[i];
    day[i] = static_cast<int>(std::floor(d.t));
    const double target = d.clinic_u * total_w;
    clinic_of[i] = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cum_weight.begin(), cum_weight.end(), target) - cum_weight.begin()),
        clinics.size() - 1);
    double index = 0.0;
    for (std::size_t k = 0; k < k_latent; ++k) index += detail::factor_weight(k) * d.latent[k];
    eta_obs[i] = cfg.signal_strength * index;
    eta[i] = eta_obs[i] + cfg.hidden_strength * d.hidden +
             cfg.season_amplitude * std::sin(two_pi * static_cast<double>(day[i]) / 360.0) +
             cfg.trend_strength * (static_cast<double>(day[i]) / horizon - 0.5);
  }
  const double intercept = detail::solve_intercept(eta, cfg.target_positive_rate);

  Cohort cohort;
  cohort.meta.seed = seed;
  cohort.meta.config = cfg;
  cohort.meta.source = "generated";
  cohort.latent_risk.resize(n);
  std::vector<Consultation> rows(n);
  std::vector<double> signal(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = draws[i];
    const auto& cd = clinics[clinic_of[i]];
    auto& c = rows[i];
    c.patient_id = detail::padded_id('P', i, 6);
    c.clinic_id = cd.clinic.clinic_id;
    c.day = day[i];
    c.pregnant = d.pregnant;
    const double logit_r = intercept + eta[i];
    const double r = detail::sigmoid(logit_r);
    cohort.latent_risk[i] = r;
    c.y = d.outcome_u < r ? 1 : 0;

    c.covariates.resize(cfg.n_features);
    for (std::size_t j = 0; j < cfg.n_features; ++j) {
      if (j >= d_inf) {
        c.covariates[j] = detail::encode_covariate(d.feature_noise[j], j);
      } else if (j == d_inf - 2) {
        c.covariates[j] = static_cast<double>((c.day % 360) / 30);
      } else if (j == d_inf - 1) {
        c.covariates[j] = static_cast<double>(c.pregnant);
      } else {
        const std::size_t factor = j % k_latent;
        const std::size_t layer = j / k_latent;
        const double noise_sd = cfg.covariate_noise * (1.0 + static_cast<double>(layer));
        c.covariates[j] = detail::encode_covariate(d.latent[factor] + noise_sd * d.feature_noise[j], layer);
      }
    }

    const double private_signal = static_cast<double>(c.y) + cd.private_sd * d.private_noise;
    const double perceived = logit_r - (1.0 - cfg.physician_observable_weight) * eta_obs[i];
    signal[i] = perceived + cd.clinic.expertise * private_signal + cd.decision_sd * d.decision_noise +
                cfg.pregnant_rx_shift * static_cast<double>(c.pregnant) - cd.clinic.leniency;
  }

  // global prescribing threshold: the (1 - target) quantile of the signals
  std::vector<double> sorted_signal = signal;
  std::sort(sorted_signal.begin(), sorted_signal.end());
  const auto n_rx = static_cast<std::size_t>(std::llround(cfg.target_rx_rate * static_cast<double>(n)));
  double threshold;
  if (n_rx == 0) {
    threshold = sorted_signal.back();
  } else if (n_rx >= n) {
    threshold = std::nextafter(sorted_signal.front(), -1e300);
  } else {
    threshold = 0.5 * (sorted_signal[n - n_rx - 1] + sorted_signal[n - n_rx]);
  }
  for (std::size_t i = 0; i < n; ++i) rows[i].rho_j = signal[i] > threshold ? 1 : 0;

  // follow-up prescriptions: calibrated on untreated patients in the top risk quintile
  std::vector<double> sorted_risk = cohort.latent_risk;
  std::sort(sorted_risk.begin(), sorted_risk.end());
  const double high_risk = sorted_risk[static_cast<std::size_t>(0.8 * static_cast<double>(n - 1))];
  double n_pos = 0.0, n_neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].rho_j == 0 && cohort.latent_risk[i] >= high_risk) (rows[i].y ? n_pos : n_neg) += 1.0;
  }
  double p_pos = cfg.target_followup_share;
  if (n_pos > 0.0) {
    p_pos = (cfg.target_followup_share * (n_pos + n_neg) - cfg.followup_negative_rate * n_neg) / n_pos;
  }
  p_pos = std::clamp(p_pos, 0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = rows[i].y ? p_pos : cfg.followup_negative_rate;
    rows[i].post_test_rx = draws[i].followup_u < p ? 1 : 0;
  }

  // reorder latent risk alongside the stable day sort
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rows[a].day < rows[b].day; });
  cohort.consultations.reserve(n);
  std::vector<double> risk_sorted(n);
  for (std::size_t i = 0; i < n; ++i) {
    cohort.consultations.push_back(std::move(rows[order[i]]));
    risk_sorted[i] = cohort.latent_risk[order[i]];
  }
  cohort.latent_risk = std::move(risk_sorted);
  detail::finalize_order(cohort.consultations);

  cohort.clinics.reserve(clinics.size());
  for (auto& cd : clinics) cohort.clinics.push_back(cd.clinic);
  std::sort(cohort.clinics.begin(), cohort.clinics.end(),
            [](const Clinic& a, const Clinic& b) { return a.clinic_id < b.clinic_id; });
  return cohort;
}

// ---------------------------------------------------------------------------
// Initial-consultation filter

enum class EventKind { kTest, kPrescription };

struct RawEvent {
  std::string patient_id;
  int day = 0;
  EventKind kind = EventKind::kTest;
  /// Consultation record carried by test events (patient_id/day are taken
  /// from the event).
  std::optional<Consultation> consultation;
};

inline constexpr int kLookbackDays = 28;

/// Keeps a test only if the same patient had no test or prescription event in
/// the open interval (day - 28, day). Every test counts as history, retained
/// or not, so a retained test blocks later tests within 28 days.
inline Cohort filter_initial(std::span<const RawEvent> events) {
  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (events[a].patient_id != events[b].patient_id) return events[a].patient_id < events[b].patient_id;
    return events[a].day < events[b].day;
  });
  Cohort out;
  out.meta.source = "filtered";
  std::size_t n_features = 0;
  bool width_known = false;
  for (std::size_t pos = 0; pos < order.size();) {
    std::size_t end = pos;
    while (end < order.size() && events[order[end]].patient_id == events[order[pos]].patient_id) ++end;
    for (std::size_t i = pos; i < end; ++i) {
      const auto& ev = events[order[i]];
      if (ev.kind != EventKind::kTest) continue;
      bool blocked = false;
      for (std::size_t j = pos; j < end && !blocked; ++j) {
        const auto& other = events[order[j]];
        blocked = j != i && other.day < ev.day && other.day > ev.day - kLookbackDays;
      }
      if (blocked) continue;
      Consultation c = ev.consultation.value_or(Consultation{});
      c.patient_id = ev.patient_id;
      c.day = ev.day;
      if (!width_known) {
        n_features = c.covariates.size();
        width_known = true;
      }
      detail::check_consultation(c, n_features, std::nullopt);
      out.consultations.push_back(std::move(c));
    }
    pos = end;
  }
  detail::finalize_order(out.consultations);
  out.meta.config.n_features = n_features;
  return out;
}

// ---------------------------------------------------------------------------
// Rolling split

/// Index ranges into Cohort::consultations (which is day-sorted).
struct WindowSplit {
  std::size_t window_id = 0;
  int eval_start = 0;
  int eval_end = 0;  ///< exclusive
  std::size_t train_begin = 0, train_end = 0;
  std::size_t eval_begin = 0, eval_end_index = 0;
  bool empty_eval = false;

  std::size_t train_size() const { return train_end - train_begin; }
  std::size_t eval_size() const { return eval_end_index - eval_begin; }
};

/// First consultation index with day >= `day`.
inline std::size_t first_index_at(const Cohort& cohort, int day) {
  auto it = std::lower_bound(cohort.consultations.begin(), cohort.consultations.end(), day,
                             [](const Consultation& c, int d) { return c.day < d; });
  return static_cast<std::size_t>(it - cohort.consultations.begin());
}

/// Training slice for a model that may only use data strictly before `cutoff`.
inline std::pair<std::size_t, std::size_t> training_range(const Cohort& cohort, int cutoff, int fixed_train_days) {
  const std::size_t end = first_index_at(cohort, cutoff);
  const std::size_t begin = fixed_train_days > 0 ? first_index_at(cohort, cutoff - fixed_train_days) : 0;
  return {begin, end};
}

inline std::vector<WindowSplit> split_windows(const Cohort& cohort, const Schedule& schedule, int horizon_days) {
  schedule.validate(horizon_days);
  std::vector<WindowSplit> out;
  out.reserve(schedule.n_windows);
  for (std::size_t w = 0; w < schedule.n_windows; ++w) {
    WindowSplit s;
    s.window_id = w;
    s.eval_start = schedule.window_start(w);
    s.eval_end = s.eval_start + schedule.tau_days;
    std::tie(s.train_begin, s.train_end) = training_range(cohort, s.eval_start, schedule.fixed_train_days);
    s.eval_begin = first_index_at(cohort, s.eval_start);
    s.eval_end_index = first_index_at(cohort, s.eval_end);
    s.empty_eval = s.eval_size() == 0;
    out.push_back(s);
  }
  return out;
}

inline std::vector<WindowSplit> split_windows(const Cohort& cohort, const Schedule& schedule) {
  return split_windows(cohort, schedule, cohort.meta.config.horizon_days);
}

}  // namespace stewardsim
