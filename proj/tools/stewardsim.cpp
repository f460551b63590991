// stewardsim: generate cohorts, run rolling policy evaluations, diagnostics
// and the machine-only sweep.
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal
// invariant failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "stewardsim/stewardsim.hpp"

namespace fs = std::filesystem;
using namespace stewardsim;

namespace {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

Level log_level() {
  const char* env = std::getenv("STEWARDSIM_LOG");
  if (!env) return Level::kWarn;
  const std::string v = env;
  if (v == "error") return Level::kError;
  if (v == "info") return Level::kInfo;
  if (v == "debug") return Level::kDebug;
  return Level::kWarn;
}

void log(Level level, const std::string& msg) {
  static const Level threshold = log_level();
  if (level > threshold) return;
  static const char* tags[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << tags[static_cast<int>(level)] << "] " << msg << '\n';
}

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> rule;
  std::optional<std::string> out;
  std::optional<std::string> cohort_csv;
  bool exempt_pregnant = false;
  bool machine_only = false;
  bool trace = false;
  unsigned threads = 1;
};

RunConfig resolve_config(const Options& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.rule) cfg.rule = parse_rule_selection(*o.rule);
  if (o.out) cfg.output_dir = *o.out;
  if (o.cohort_csv) cfg.cohort_csv = *o.cohort_csv;
  cfg.exempt_pregnant = cfg.exempt_pregnant || o.exempt_pregnant;
  cfg.machine_only = cfg.machine_only || o.machine_only;
  detail::require_config(o.threads >= 1, "--threads must be >= 1");
  cfg.propagate();
  cfg.validate();
  return cfg;
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cfg.output_dir + "': " + ec.message());
  return dir;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ostringstream buf;
  body(buf);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << buf.str();
  if (!out) throw DataError("write failed for '" + path.string() + "'");
  log(Level::kInfo, "wrote " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_file(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

Cohort load_cohort(const RunConfig& cfg) {
  if (!cfg.cohort_csv) {
    log(Level::kInfo, "generating cohort (seed " + std::to_string(cfg.seed) + ")");
    return generate(cfg.cohort, cfg.seed);
  }
  log(Level::kInfo, "ingesting " + *cfg.cohort_csv);
  Cohort cohort = ingest_csv(*cfg.cohort_csv);
  const fs::path clinics = fs::path(*cfg.cohort_csv).parent_path() / "clinics.csv";
  if (fs::exists(clinics)) {
    std::ifstream in(clinics);
    cohort.clinics = read_clinics_csv(in);
  } else {
    cohort.meta.warnings.push_back("no clinics.csv next to the cohort file; clinic regression unavailable");
  }
  for (const auto& w : cohort.meta.warnings) log(Level::kWarn, w);
  return cohort;
}

/// Re-throws module errors with the pipeline stage prepended.
template <typename F>
auto stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const IngestError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(name + ": " + e.what());
  }
}

int cmd_generate(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const Cohort cohort = stage("generate", [&] { return load_cohort(cfg); });
  const fs::path dir = prepare_out(cfg);
  write_file(dir / "cohort.csv", [&](std::ostream& out) { write_cohort_csv(cohort, out); });
  write_file(dir / "clinics.csv", [&](std::ostream& out) { write_clinics_csv(cohort, out); });
  nlohmann::json meta = cohort_meta_json(cohort);
  meta["config"] = to_json(cfg);
  write_json(dir / "meta.json", meta);
  std::cout << "consultations " << cohort.size() << ", clinics " << cohort.clinics.size() << '\n';
  return 0;
}

ScoreCache score(const Cohort& cohort, const RunConfig& cfg, bool exante, unsigned threads) {
  ScoringOptions so;
  so.exante = exante;
  so.threads = threads;
  log(Level::kInfo, exante ? "fitting ex-post and ex-ante forests" : "fitting ex-post forests");
  return stage("scoring", [&] { return build_scores(cohort, cfg.schedule, cfg.forest, so); });
}

std::optional<double> pooled_auc(const Cohort& cohort, const ScoreCache& cache) {
  std::vector<double> scores;
  std::vector<int> y;
  for (const auto& ws : cache.expost) {
    scores.insert(scores.end(), ws.scores.begin(), ws.scores.end());
    for (std::size_t i = ws.begin; i < ws.end; ++i) y.push_back(cohort.consultations[i].y);
  }
  const auto roc = roc_auc(scores, y);
  return roc.auc_undefined ? std::nullopt : std::optional<double>(roc.auc);
}

void print_run(const RunReport& r) {
  const auto& a = r.aggregate;
  std::cout << r.mode << ' ' << rule_name(r.rule) << (r.exempt_pregnant ? " (pregnant exempt)" : "") << ": "
            << detail::objective_metric(r.rule) << ' ' << a.objective_pct << "% [" << a.objective_ci.lo << ", "
            << a.objective_ci.hi << "], " << detail::constraint_metric(r.rule) << ' ' << a.constraint_pct << "% ["
            << a.constraint_ci.lo << ", " << a.constraint_ci.hi << "]\n";
}

std::vector<SweepPoint> sweep(const Cohort& cohort, const RunConfig& cfg, const ScoreCache& cache, unsigned threads) {
  const auto grid = default_k_grid(cfg.k_grid_steps);
  return stage("machine-only sweep", [&] { return machine_only_sweep(cohort, cfg.schedule, cache, grid, threads); });
}

int cmd_run(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const Cohort cohort = stage("cohort", [&] { return load_cohort(cfg); });
  const fs::path dir = prepare_out(cfg);
  const ScoreCache cache = score(cohort, cfg, true, o.threads);

  std::vector<bool> exemptions{false};
  if (cfg.exempt_pregnant) exemptions.push_back(true);
  std::vector<RunReport> expost, exante;
  for (Rule rule : selected_rules(cfg.rule)) {
    for (bool exempt : exemptions) {
      RunOptions ro;
      ro.exempt_pregnant = exempt;
      ro.threads = o.threads;
      ro.trace = o.trace;
      const std::string tag = std::string(rule_name(rule)) + (exempt ? ", pregnant exempt" : "");
      expost.push_back(stage("ex-post " + tag, [&] { return run_expost(cohort, cfg.schedule, cache, rule, ro); }));
      ro.trace = false;
      exante.push_back(stage("ex-ante " + tag, [&] { return run_exante(cohort, cfg.schedule, cache, rule, ro); }));
    }
  }
  std::vector<RunReport> all = expost;
  all.insert(all.end(), exante.begin(), exante.end());

  std::optional<std::vector<SweepPoint>> curve;
  if (cfg.machine_only) curve = sweep(cohort, cfg, cache, o.threads);

  write_file(dir / "expost_windows.csv", [&](std::ostream& out) { write_windows_csv(expost, out); });
  write_file(dir / "exante_windows.csv", [&](std::ostream& out) { write_windows_csv(exante, out); });
  write_file(dir / "constraint_windows.csv", [&](std::ostream& out) { write_constraint_csv(all, out); });
  write_json(dir / "policy_rows.json", policy_rows_json(all));
  if (o.trace) write_file(dir / "optimizer_trace.csv", [&](std::ostream& out) { write_trace_csv(expost, out); });
  if (curve) write_file(dir / "machine_only_curve.csv", [&](std::ostream& out) { write_sweep_csv(*curve, out); });

  AggregateContext ctx{cfg.seed, cohort.meta.source, cohort.size(), pooled_auc(cohort, cache)};
  write_json(dir / "aggregate.json", aggregate_json(ctx, all, curve ? &*curve : nullptr));
  write_json(dir / "run_config.json", to_json(cfg));
  for (const auto& r : all) print_run(r);
  return 0;
}

int cmd_sweep(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const Cohort cohort = stage("cohort", [&] { return load_cohort(cfg); });
  const fs::path dir = prepare_out(cfg);
  const ScoreCache cache = score(cohort, cfg, false, o.threads);
  const auto curve = sweep(cohort, cfg, cache, o.threads);
  write_file(dir / "machine_only_curve.csv", [&](std::ostream& out) { write_sweep_csv(curve, out); });
  const auto summary = sweep_summary_json(curve);
  std::cout << "k = " << curve.front().k << ": pct_delta_rho " << curve.front().mean_pct_rho << "%, pct_delta_buti "
            << curve.front().mean_pct_buti << "%\n";
  std::cout << "win-win cut-off exists: " << (summary["win_win_exists"].get<bool>() ? "yes" : "no") << '\n';
  return 0;
}

int cmd_diagnose(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const Cohort cohort = stage("cohort", [&] { return load_cohort(cfg); });
  const fs::path dir = prepare_out(cfg);
  const ScoreCache cache = score(cohort, cfg, false, o.threads);
  DiagnosticsOptions d;
  d.calibration_bin_size = cfg.diagnostics.calibration_bin_size;
  d.min_clinic_consultations = cfg.diagnostics.min_clinic_consultations;
  d.importance_reps = cfg.diagnostics.importance_reps;
  d.histogram_bin_width = cfg.diagnostics.histogram_bin_width;
  d.threads = o.threads;
  const Diagnostics diag = stage("diagnostics", [&] { return diagnose(cohort, cfg.schedule, cfg.forest, cache, d); });
  for (const auto& w : diag.warnings) log(Level::kWarn, w);

  write_file(dir / "roc.csv", [&](std::ostream& out) { write_roc_csv(diag.roc, out); });
  write_file(dir / "calibration.csv", [&](std::ostream& out) { write_calibration_csv(diag.calibration, out); });
  write_file(dir / "clinic_rates.csv", [&](std::ostream& out) { write_clinic_rates_csv(diag.clinic_rates, out); });
  write_file(dir / "clinic_deviation.csv", [&](std::ostream& out) { write_deviation_csv(diag.deviations, out); });
  write_file(dir / "mean_deviation_hist.csv",
             [&](std::ostream& out) { write_histogram_csv(diag.deviation_histogram, out); });
  write_file(dir / "ols_table.csv", [&](std::ostream& out) { write_ols_csv(diag.ols, out); });
  write_file(dir / "feature_importance.csv", [&](std::ostream& out) { write_importance_csv(diag.importance, out); });
  if (diag.roc.auc_undefined) {
    std::cout << "AUC undefined\n";
  } else {
    std::cout << "AUC " << detail::format_double(diag.roc.auc) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction-based antibiotic prescription policy simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed (overrides the config)");
    sub->add_option("--out", o.out, "output directory (overrides the config)");
    sub->add_option("--cohort", o.cohort_csv, "ingest this cohort CSV instead of generating one");
    sub->add_option("--threads", o.threads, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  };
  auto* gen = app.add_subcommand("generate", "write cohort.csv, clinics.csv and meta.json");
  add_common(gen);
  auto* run = app.add_subcommand("run", "rolling ex-post and ex-ante policy evaluation");
  add_common(run);
  run->add_option("--rule", o.rule, "reduction, buti or both")->check(CLI::IsMember({"reduction", "buti", "both"}));
  run->add_flag("--exempt-pregnant", o.exempt_pregnant, "also evaluate with pregnant patients exempt");
  run->add_flag("--machine-only", o.machine_only, "also write the machine-only curve");
  run->add_flag("--trace", o.trace, "write the ex-post optimizer trace");
  auto* diag = app.add_subcommand("diagnose", "ROC, calibration, clinic statistics and feature importance");
  add_common(diag);
  auto* sw = app.add_subcommand("sweep", "machine-only cut-off sweep");
  add_common(sw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*run) return cmd_run(o);
    if (*diag) return cmd_diagnose(o);
    if (*sw) return cmd_sweep(o);
  } catch (const ConfigError& e) {
    log(Level::kError, std::string("configuration error: ") + e.what());
    return 1;
  } catch (const DataError& e) {
    log(Level::kError, std::string("data error: ") + e.what());
    return 2;
  } catch (const InvariantError& e) {
    log(Level::kError, std::string("internal error: ") + e.what());
    return 3;
  } catch (const std::exception& e) {
    log(Level::kError, std::string("internal error: ") + e.what());
    return 3;
  }
  return 3;
}
