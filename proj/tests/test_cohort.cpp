#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "stewardsim/cohort.hpp"
#include "stewardsim/cohort_io.hpp"
#include "stewardsim/forest.hpp"
#include "stewardsim/metrics.hpp"

using namespace stewardsim;

namespace {

std::string csv_bytes(const Cohort& c) {
  std::ostringstream a, b;
  write_cohort_csv(c, a);
  write_clinics_csv(c, b);
  return a.str() + b.str();
}

RawEvent test_event(const std::string& id, int day) { return {id, day, EventKind::kTest, std::nullopt}; }
RawEvent rx_event(const std::string& id, int day) { return {id, day, EventKind::kPrescription, std::nullopt}; }

}  // namespace

TEST(Generate, DeterministicBytes) {
  CohortConfig cfg;
  cfg.n_consultations = 3000;
  const auto a = generate(cfg, 7);
  const auto b = generate(cfg, 7);
  EXPECT_EQ(a.consultations, b.consultations);
  EXPECT_EQ(a.clinics, b.clinics);
  EXPECT_EQ(csv_bytes(a), csv_bytes(b));
  EXPECT_NE(csv_bytes(a), csv_bytes(generate(cfg, 8)));
}

TEST(Generate, Invariants) {
  CohortConfig cfg;
  cfg.n_consultations = 5000;
  const auto c = generate(cfg, 3);
  ASSERT_EQ(c.size(), 5000u);
  ASSERT_EQ(c.latent_risk.size(), 5000u);
  std::set<std::pair<std::string, int>> keys;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& r = c.consultations[i];
    if (i > 0) {
      EXPECT_LE(c.consultations[i - 1].day, r.day);
    }
    EXPECT_TRUE(keys.emplace(r.patient_id, r.day).second);
    EXPECT_GE(r.day, 0);
    EXPECT_LT(r.day, cfg.horizon_days);
    EXPECT_EQ(r.covariates.size(), cfg.n_features);
    for (int v : {r.y, r.rho_j, r.pregnant, r.post_test_rx}) EXPECT_TRUE(v == 0 || v == 1);
    EXPECT_NE(c.find_clinic(r.clinic_id), nullptr);
  }
  EXPECT_EQ(c.clinics.size(), cfg.n_clinics);
  EXPECT_TRUE(std::is_sorted(c.clinics.begin(), c.clinics.end(),
                             [](const Clinic& a, const Clinic& b) { return a.clinic_id < b.clinic_id; }));
  for (const auto& k : c.clinics) {
    EXPECT_GE(k.share_female, 0.0);
    EXPECT_LE(k.share_female, 1.0);
    EXPECT_GE(k.n_physicians, 1.0);
  }
}

TEST(Generate, DeskPositiveRate) {
  const auto c = generate(CohortConfig{}, 7);
  double pos = 0.0;
  for (const auto& r : c.consultations) pos += r.y;
  pos /= static_cast<double>(c.size());
  EXPECT_GE(pos, 0.30);
  EXPECT_LE(pos, 0.36);
}

TEST(Generate, CalibratedOverSeeds) {
  const CohortConfig cfg;
  double pos = 0.0, preg = 0.0, follow = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = generate(cfg, seed);
    const double n = static_cast<double>(c.size());
    double p = 0.0, g = 0.0;
    for (const auto& r : c.consultations) {
      p += r.y;
      g += r.pregnant;
    }
    pos += p / n;
    preg += g / n;
    // untreated patients in the top quintile of true risk
    auto sorted = c.latent_risk;
    std::sort(sorted.begin(), sorted.end());
    const double cut = sorted[static_cast<std::size_t>(0.8 * (n - 1))];
    double sel = 0.0, fol = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.latent_risk[i] >= cut && c.consultations[i].rho_j == 0) {
        sel += 1.0;
        fol += c.consultations[i].post_test_rx;
      }
    }
    follow += fol / sel;
  }
  EXPECT_NEAR(pos / 5.0, cfg.target_positive_rate, cfg.tolerance);
  EXPECT_NEAR(preg / 5.0, cfg.target_pregnant_share, cfg.tolerance);
  EXPECT_NEAR(follow / 5.0, cfg.target_followup_share, cfg.tolerance);
}

TEST(Generate, NoSignalMeansChanceAuc) {
  CohortConfig cfg;
  cfg.n_consultations = 6000;
  cfg.signal_strength = 0.0;
  cfg.season_amplitude = 0.0;
  cfg.trend_strength = 0.0;
  const auto c = generate(cfg, 5);
  const std::span<const Consultation> all(c.consultations);
  ForestParams p;
  p.n_trees = 100;
  p.seed = 5;
  const auto m = fit(feature_matrix(all.first(4000), c.n_features()), outcomes(all.first(4000)), p);
  const auto test = all.subspan(4000);
  const auto scores = m.predict(feature_matrix(test, c.n_features()));
  std::vector<int> y;
  for (const auto& r : test) y.push_back(r.y);
  EXPECT_NEAR(roc_auc(scores, y).auc, 0.5, 0.03);
}

TEST(Generate, RejectsInvalidConfig) {
  CohortConfig cfg;
  cfg.target_positive_rate = 1.5;
  EXPECT_THROW(generate(cfg, 1), ConfigError);
  cfg = CohortConfig{};
  cfg.n_features = 4;
  EXPECT_THROW(generate(cfg, 1), ConfigError);
  cfg = CohortConfig{};
  cfg.n_consultations = 0;
  EXPECT_THROW(generate(cfg, 1), ConfigError);
  cfg = CohortConfig{};
  cfg.n_noise_features = cfg.n_features;
  EXPECT_THROW(generate(cfg, 1), ConfigError);
}

TEST(FilterInitial, Examples) {
  const std::vector<RawEvent> repeat{test_event("A", 10), test_event("A", 20)};
  auto out = filter_initial(repeat);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.consultations[0].day, 10);

  const std::vector<RawEvent> gap{rx_event("B", 5), test_event("B", 40)};
  out = filter_initial(gap);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.consultations[0].day, 40);

  const std::vector<RawEvent> single{test_event("C", 3)};
  EXPECT_EQ(filter_initial(single).size(), 1u);

  EXPECT_TRUE(filter_initial({}).empty());
}

TEST(FilterInitial, BoundaryDays) {
  // exactly 28 days back is outside the open interval
  const std::vector<RawEvent> ev{rx_event("A", 0), test_event("A", 28), test_event("A", 55)};
  const auto out = filter_initial(ev);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.consultations[0].day, 28);
}

TEST(FilterInitial, Soundness) {
  std::mt19937 gen(17);
  std::vector<RawEvent> events;
  for (int i = 0; i < 3000; ++i) {
    const std::string id = "P" + std::to_string(gen() % 200);
    const int day = static_cast<int>(gen() % 720);
    events.push_back(gen() % 4 == 0 ? rx_event(id, day) : test_event(id, day));
  }
  // drop duplicate test keys; a patient has at most one test per day
  std::set<std::pair<std::string, int>> seen;
  std::erase_if(events, [&](const RawEvent& e) {
    return e.kind == EventKind::kTest && !seen.emplace(e.patient_id, e.day).second;
  });
  const auto out = filter_initial(events);
  std::map<std::string, std::vector<int>> kept;
  for (const auto& c : out.consultations) kept[c.patient_id].push_back(c.day);
  for (const auto& [id, days] : kept) {
    for (std::size_t i = 1; i < days.size(); ++i) EXPECT_GE(days[i] - days[i - 1], 28);
  }
  for (const auto& c : out.consultations) {
    for (const auto& e : events) {
      if (e.patient_id != c.patient_id) continue;
      EXPECT_FALSE(e.day < c.day && e.day > c.day - kLookbackDays);
    }
  }
  EXPECT_FALSE(out.empty());
}

TEST(SplitWindows, DeskSchedule) {
  CohortConfig cfg;
  cfg.n_consultations = 4000;
  const auto c = generate(cfg, 2);
  const Schedule s;
  const auto w = split_windows(c, s);
  ASSERT_EQ(w.size(), 24u);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_EQ(w[i].eval_end - w[i].eval_start, 30);
    EXPECT_EQ(w[i].train_begin, 0u);
    if (w[i].train_end > 0) {
      EXPECT_LT(c.consultations[w[i].train_end - 1].day, w[i].eval_start);
    }
    for (std::size_t k = w[i].eval_begin; k < w[i].eval_end_index; ++k) {
      EXPECT_GE(c.consultations[k].day, w[i].eval_start);
      EXPECT_LT(c.consultations[k].day, w[i].eval_end);
    }
    if (i > 0) {
      EXPECT_GE(w[i].train_end, w[i - 1].train_end);
      EXPECT_EQ(w[i].eval_begin, w[i - 1].eval_end_index);
    }
  }
}

TEST(SplitWindows, TrailingTrainingWindow) {
  CohortConfig cfg;
  cfg.n_consultations = 4000;
  const auto c = generate(cfg, 2);
  Schedule s;
  s.fixed_train_days = 180;
  for (const auto& w : split_windows(c, s)) {
    EXPECT_GE(c.consultations[w.train_begin].day, w.eval_start - 180);
    EXPECT_LT(c.consultations[w.train_begin - 1].day, w.eval_start - 180);
  }
}

TEST(SplitWindows, EmptyWindowFlagged) {
  Cohort c;
  c.meta.config.horizon_days = 120;
  for (int d : {1, 5, 12, 70, 71}) {
    Consultation r;
    r.patient_id = "P" + std::to_string(d);
    r.day = d;
    c.consultations.push_back(r);
  }
  Schedule s;
  s.eval_start_day = 30;
  s.n_windows = 3;
  const auto w = split_windows(c, s);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_TRUE(w[0].empty_eval);
  EXPECT_FALSE(w[1].empty_eval);
  EXPECT_TRUE(w[2].empty_eval);
  EXPECT_EQ(w[1].train_size(), 3u);
}

TEST(SplitWindows, BeyondHorizonRejected) {
  CohortConfig cfg;
  cfg.n_consultations = 500;
  cfg.horizon_days = 700;
  const auto c = generate(cfg, 1);
  EXPECT_THROW(split_windows(c, Schedule{}), ConfigError);
}
