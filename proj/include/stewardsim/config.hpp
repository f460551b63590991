#pragma once

// Run configuration (JSON).
//
// Every section is optional and falls back to the library defaults. Unknown
// keys are rejected so a misspelt field cannot silently take its default.
//
// Seeds: the single top-level `seed` feeds the cohort generator, the forest
// (per fit: derive_seed(seed, kWindow, fit id), then one stream per tree) and
// the bootstrap (derive_seed(seed, kBootstrap, window id), then one stream per
// replicate). Streams are separated by their Stream tag.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "stewardsim/cohort.hpp"
#include "stewardsim/error.hpp"
#include "stewardsim/forest.hpp"
#include "stewardsim/optimizer.hpp"
#include "stewardsim/schedule.hpp"

namespace stewardsim {

inline constexpr int kConfigSchemaVersion = 1;

enum class RuleSelection { kReduction, kButi, kBoth };

inline const char* rule_selection_name(RuleSelection r) {
  switch (r) {
    case RuleSelection::kReduction: return "reduction";
    case RuleSelection::kButi: return "buti";
    case RuleSelection::kBoth: return "both";
  }
  return "?";
}

inline RuleSelection parse_rule_selection(const std::string& s) {
  if (s == "reduction") return RuleSelection::kReduction;
  if (s == "buti") return RuleSelection::kButi;
  if (s == "both") return RuleSelection::kBoth;
  throw ConfigError("rule must be one of reduction, buti, both (got '" + s + "')");
}

inline std::vector<Rule> selected_rules(RuleSelection r) {
  switch (r) {
    case RuleSelection::kReduction: return {Rule::kReduction};
    case RuleSelection::kButi: return {Rule::kButi};
    case RuleSelection::kBoth: return {Rule::kReduction, Rule::kButi};
  }
  return {};
}

struct DiagnosticsConfig {
  std::size_t calibration_bin_size = 100;
  std::size_t min_clinic_consultations = 3;  ///< smaller clinics are left out of clinic_rates.csv
  std::size_t importance_reps = 3;
  double histogram_bin_width = 0.05;

  void validate() const {
    detail::require_config(calibration_bin_size >= 1, "diagnostics.calibration_bin_size must be >= 1");
    detail::require_config(importance_reps >= 1, "diagnostics.importance_reps must be >= 1");
    detail::require_config(histogram_bin_width > 0.0, "diagnostics.histogram_bin_width must be positive");
  }
};

struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 7;
  CohortConfig cohort{};
  ForestParams forest{};
  Schedule schedule{};
  RuleSelection rule = RuleSelection::kBoth;
  bool exempt_pregnant = false;
  bool machine_only = false;
  int fixed_train_window = 0;  ///< days; 0 keeps the expanding window
  std::size_t k_grid_steps = 100;
  DiagnosticsConfig diagnostics{};
  std::optional<std::string> cohort_csv;  ///< ingest instead of generating
  std::string output_dir = "out";

  /// Copies the top-level seed and variant flags into the module sections.
  void propagate() {
    forest.seed = seed;
    schedule.seed = seed;
    schedule.fixed_train_days = fixed_train_window;
  }

  void validate() const {
    detail::require_config(schema_version == kConfigSchemaVersion,
                           "schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                               std::to_string(kConfigSchemaVersion) + ")");
    cohort.validate();
    forest.validate();
    schedule.validate();
    diagnostics.validate();
    detail::require_config(fixed_train_window >= 0, "fixed_train_window must be >= 0");
    detail::require_config(k_grid_steps >= 1, "k_grid_steps must be >= 1");
    detail::require_config(!output_dir.empty(), "output_dir must not be empty");
    if (!cohort_csv) {
      detail::require_config(schedule.eval_end_day() <= cohort.horizon_days,
                             "schedule ends at day " + std::to_string(schedule.eval_end_day()) +
                                 " beyond cohort.horizon_days (" + std::to_string(cohort.horizon_days) + ")");
    }
  }
};

namespace detail {

class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    const std::string name = field(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(name + " must be a boolean");
      out = it->template get<bool>();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!it->is_number_integer() || it->template get<long long>() < 0) {
        throw ConfigError(name + " must be a non-negative integer");
      }
      out = it->template get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError(name + " must be an integer");
      out = it->template get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(name + " must be a number");
      out = it->template get<T>();
    } else {
      if (!it->is_string()) throw ConfigError(name + " must be a string");
      out = it->template get<std::string>();
    }
  }

  JsonReader section(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    static const nlohmann::json empty = nlohmann::json::object();
    return JsonReader(it == j_.end() ? empty : *it, field(key));
  }

  bool has(const char* key) const { return j_.contains(key); }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config field '" + field(it.key().c_str()) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  RunConfig cfg;
  detail::JsonReader root(j, "");
  root.get("schema_version", cfg.schema_version);
  detail::require_config(root.has("schema_version"), "schema_version is required");
  detail::require_config(cfg.schema_version == kConfigSchemaVersion,
                         "schema_version " + std::to_string(cfg.schema_version) + " is not supported");
  root.get("seed", cfg.seed);

  {
    auto s = root.section("cohort");
    auto& c = cfg.cohort;
    s.get("n_consultations", c.n_consultations);
    s.get("n_features", c.n_features);
    s.get("n_noise_features", c.n_noise_features);
    s.get("n_clinics", c.n_clinics);
    s.get("n_latent", c.n_latent);
    s.get("horizon_days", c.horizon_days);
    s.get("target_positive_rate", c.target_positive_rate);
    s.get("target_rx_rate", c.target_rx_rate);
    s.get("target_pregnant_share", c.target_pregnant_share);
    s.get("target_followup_share", c.target_followup_share);
    s.get("followup_negative_rate", c.followup_negative_rate);
    s.get("tolerance", c.tolerance);
    s.get("signal_strength", c.signal_strength);
    s.get("hidden_strength", c.hidden_strength);
    s.get("covariate_noise", c.covariate_noise);
    s.get("season_amplitude", c.season_amplitude);
    s.get("trend_strength", c.trend_strength);
    s.get("volume_growth", c.volume_growth);
    s.get("expertise_mean", c.expertise_mean);
    s.get("expertise_sd", c.expertise_sd);
    s.get("leniency_sd", c.leniency_sd);
    s.get("decision_noise", c.decision_noise);
    s.get("private_noise_min", c.private_noise_min);
    s.get("private_noise_max", c.private_noise_max);
    s.get("pregnant_rx_shift", c.pregnant_rx_shift);
    s.get("physician_observable_weight", c.physician_observable_weight);
    s.reject_unknown();
  }
  {
    auto s = root.section("forest");
    s.get("n_trees", cfg.forest.n_trees);
    s.get("max_depth", cfg.forest.max_depth);
    s.get("min_leaf", cfg.forest.min_leaf);
    s.get("mtry", cfg.forest.mtry);
    s.reject_unknown();
  }
  {
    auto s = root.section("schedule");
    auto& c = cfg.schedule;
    s.get("eval_start_day", c.eval_start_day);
    s.get("n_windows", c.n_windows);
    s.get("tau_days", c.tau_days);
    s.get("lambda_days", c.lambda_days);
    s.get("alpha", c.alpha);
    s.get("n_boot", c.n_boot);
    s.get("clustered_bootstrap", c.clustered_bootstrap);
    s.get("exante_refit", c.exante_refit);
    s.reject_unknown();
  }
  {
    auto s = root.section("diagnostics");
    auto& c = cfg.diagnostics;
    s.get("calibration_bin_size", c.calibration_bin_size);
    s.get("min_clinic_consultations", c.min_clinic_consultations);
    s.get("importance_reps", c.importance_reps);
    s.get("histogram_bin_width", c.histogram_bin_width);
    s.reject_unknown();
  }
  std::string rule = rule_selection_name(cfg.rule);
  root.get("rule", rule);
  cfg.rule = parse_rule_selection(rule);
  root.get("exempt_pregnant", cfg.exempt_pregnant);
  root.get("machine_only", cfg.machine_only);
  root.get("fixed_train_window", cfg.fixed_train_window);
  root.get("k_grid_steps", cfg.k_grid_steps);
  std::string csv_path;
  root.get("cohort_csv", csv_path);
  if (!csv_path.empty()) cfg.cohort_csv = csv_path;
  root.get("output_dir", cfg.output_dir);
  root.reject_unknown();
  cfg.propagate();
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig parse_config(const char* text) { return parse_config(std::string(text)); }

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

inline nlohmann::json to_json(const CohortConfig& c) {
  return {{"n_consultations", c.n_consultations},
          {"n_features", c.n_features},
          {"n_noise_features", c.n_noise_features},
          {"n_clinics", c.n_clinics},
          {"n_latent", c.n_latent},
          {"horizon_days", c.horizon_days},
          {"target_positive_rate", c.target_positive_rate},
          {"target_rx_rate", c.target_rx_rate},
          {"target_pregnant_share", c.target_pregnant_share},
          {"target_followup_share", c.target_followup_share},
          {"followup_negative_rate", c.followup_negative_rate},
          {"tolerance", c.tolerance},
          {"signal_strength", c.signal_strength},
          {"hidden_strength", c.hidden_strength},
          {"covariate_noise", c.covariate_noise},
          {"season_amplitude", c.season_amplitude},
          {"trend_strength", c.trend_strength},
          {"volume_growth", c.volume_growth},
          {"expertise_mean", c.expertise_mean},
          {"expertise_sd", c.expertise_sd},
          {"leniency_sd", c.leniency_sd},
          {"decision_noise", c.decision_noise},
          {"private_noise_min", c.private_noise_min},
          {"private_noise_max", c.private_noise_max},
          {"pregnant_rx_shift", c.pregnant_rx_shift},
          {"physician_observable_weight", c.physician_observable_weight}};
}

/// The output directory is left out so that report bundles do not depend on
/// where they were written.
inline nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j = {
      {"schema_version", cfg.schema_version},
      {"seed", cfg.seed},
      {"cohort", to_json(cfg.cohort)},
      {"forest",
       {{"n_trees", cfg.forest.n_trees},
        {"max_depth", cfg.forest.max_depth},
        {"min_leaf", cfg.forest.min_leaf},
        {"mtry", cfg.forest.mtry}}},
      {"schedule",
       {{"eval_start_day", cfg.schedule.eval_start_day},
        {"n_windows", cfg.schedule.n_windows},
        {"tau_days", cfg.schedule.tau_days},
        {"lambda_days", cfg.schedule.lambda_days},
        {"alpha", cfg.schedule.alpha},
        {"n_boot", cfg.schedule.n_boot},
        {"clustered_bootstrap", cfg.schedule.clustered_bootstrap},
        {"exante_refit", cfg.schedule.exante_refit}}},
      {"diagnostics",
       {{"calibration_bin_size", cfg.diagnostics.calibration_bin_size},
        {"min_clinic_consultations", cfg.diagnostics.min_clinic_consultations},
        {"importance_reps", cfg.diagnostics.importance_reps},
        {"histogram_bin_width", cfg.diagnostics.histogram_bin_width}}},
      {"rule", rule_selection_name(cfg.rule)},
      {"exempt_pregnant", cfg.exempt_pregnant},
      {"machine_only", cfg.machine_only},
      {"fixed_train_window", cfg.fixed_train_window},
      {"k_grid_steps", cfg.k_grid_steps}};
  if (cfg.cohort_csv) j["cohort_csv"] = *cfg.cohort_csv;
  return j;
}

}  // namespace stewardsim
