#include <gtest/gtest.h>

#include <string>

#include "stewardsim/config.hpp"

using namespace stewardsim;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, MinimalUsesDefaults) {
  const auto c = parse_config(R"({"schema_version": 1})");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.cohort.n_consultations, 20000u);
  EXPECT_EQ(c.forest.n_trees, 200u);
  EXPECT_EQ(c.schedule.n_windows, 24u);
  EXPECT_EQ(c.schedule.alpha, 0.8);
  EXPECT_EQ(c.rule, RuleSelection::kBoth);
  EXPECT_TRUE(c.schedule.exante_refit);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, SeedPropagates) {
  const auto c = parse_config(R"({"schema_version": 1, "seed": 42, "fixed_train_window": 365})");
  EXPECT_EQ(c.forest.seed, 42u);
  EXPECT_EQ(c.schedule.seed, 42u);
  EXPECT_EQ(c.schedule.fixed_train_days, 365);
}

TEST(Config, Sections) {
  const auto c = parse_config(R"({
    "schema_version": 1,
    "cohort": {"n_consultations": 500, "target_positive_rate": 0.25},
    "forest": {"n_trees": 12, "max_depth": 4},
    "schedule": {"n_windows": 6, "n_boot": 10, "exante_refit": false},
    "rule": "buti",
    "exempt_pregnant": true,
    "cohort_csv": "data.csv"
  })");
  EXPECT_EQ(c.cohort.n_consultations, 500u);
  EXPECT_EQ(c.cohort.target_positive_rate, 0.25);
  EXPECT_EQ(c.forest.n_trees, 12u);
  EXPECT_EQ(c.forest.max_depth, 4u);
  EXPECT_EQ(c.schedule.n_windows, 6u);
  EXPECT_FALSE(c.schedule.exante_refit);
  EXPECT_EQ(c.rule, RuleSelection::kButi);
  EXPECT_TRUE(c.exempt_pregnant);
  ASSERT_TRUE(c.cohort_csv.has_value());
  EXPECT_EQ(*c.cohort_csv, "data.csv");
}

TEST(Config, UnknownFieldsNamed) {
  EXPECT_NE(error_of(R"({"schema_version": 1, "forest": {"n_tres": 5}})").find("forest.n_tres"), std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 1, "colour": 5})").find("colour"), std::string::npos);
}

TEST(Config, TypeErrorsNamed) {
  EXPECT_NE(error_of(R"({"schema_version": 1, "cohort": {"n_clinics": -3}})").find("cohort.n_clinics"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 1, "schedule": {"alpha": "high"}})").find("schedule.alpha"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 1, "machine_only": 1})").find("machine_only"), std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 1, "rule": "both_ways"})"), "");
}

TEST(Config, SchemaVersion) {
  EXPECT_NE(error_of(R"({"seed": 1})").find("schema_version"), std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 99})").find("99"), std::string::npos);
  EXPECT_NE(error_of("not json"), "");
  EXPECT_NE(error_of("[1, 2]"), "");
}

TEST(Config, ValidationNamesField) {
  auto c = parse_config(R"({"schema_version": 1, "cohort": {"target_positive_rate": 1.5}})");
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("target_positive_rate"), std::string::npos);
  }
  c = parse_config(R"({"schema_version": 1, "cohort": {"horizon_days": 700}})");
  EXPECT_THROW(c.validate(), ConfigError);
  c = parse_config(R"({"schema_version": 1, "schedule": {"tau_days": 5, "lambda_days": 7}})");
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, RoundTrip) {
  auto c = parse_config(R"({
    "schema_version": 1, "seed": 3,
    "cohort": {"n_consultations": 1234, "season_amplitude": 0.1},
    "schedule": {"lambda_days": 14, "clustered_bootstrap": true},
    "diagnostics": {"importance_reps": 2},
    "rule": "reduction", "machine_only": true, "k_grid_steps": 20
  })");
  const auto j = to_json(c);
  EXPECT_FALSE(j.contains("output_dir"));
  const auto back = parse_config(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.cohort.n_consultations, 1234u);
  EXPECT_EQ(back.schedule.lambda_days, 14);
  EXPECT_TRUE(back.schedule.clustered_bootstrap);
  EXPECT_EQ(back.diagnostics.importance_reps, 2u);
  EXPECT_EQ(back.k_grid_steps, 20u);
}

TEST(Config, RuleSelection) {
  EXPECT_EQ(selected_rules(RuleSelection::kBoth).size(), 2u);
  EXPECT_EQ(selected_rules(RuleSelection::kButi).front(), Rule::kButi);
  EXPECT_EQ(parse_rule_selection("reduction"), RuleSelection::kReduction);
  EXPECT_THROW(parse_rule_selection("x"), ConfigError);
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}
