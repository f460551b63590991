#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "stewardsim/cohort.hpp"
#include "stewardsim/cohort_io.hpp"

using namespace stewardsim;

namespace {

const char* kHeader = "patient_id,clinic_id,day,y,rho_j,post_test_rx,pregnant,x0,x1\n";

std::size_t row_of(const std::string& text) {
  std::istringstream in(text);
  try {
    read_cohort_csv(in);
  } catch (const IngestError& e) {
    return e.row();
  }
  return static_cast<std::size_t>(-1);
}

}  // namespace

TEST(Ingest, ThreeRows) {
  std::istringstream in(std::string(kHeader) +
                        "P1,C1,5,1,1,0,0,0.5,2\n"
                        "P2,C1,3,0,0,1,1,-1.25,0\n"
                        "P3,C2,9,0,1,0,0,3,1\n");
  const auto c = read_cohort_csv(in);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.meta.source, "csv");
  EXPECT_EQ(c.n_features(), 2u);
  EXPECT_EQ(c.consultations[0].patient_id, "P2");  // day-sorted
  EXPECT_EQ(c.consultations[0].covariates[0], -1.25);
  EXPECT_EQ(c.meta.config.horizon_days, 10);
  EXPECT_TRUE(c.meta.warnings.empty());
}

TEST(Ingest, BadOutcomeCitesRow) {
  const std::string text = std::string(kHeader) +
                           "P1,C1,5,1,1,0,0,0.5,2\n"
                           "P2,C1,3,2,0,1,1,-1.25,0\n";
  EXPECT_EQ(row_of(text), 2u);
  std::istringstream in(text);
  try {
    read_cohort_csv(in);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
}

TEST(Ingest, EmptyFileWarns) {
  std::istringstream in(kHeader);
  const auto c = read_cohort_csv(in);
  EXPECT_TRUE(c.empty());
  ASSERT_EQ(c.meta.warnings.size(), 1u);
}

TEST(Ingest, RowErrors) {
  EXPECT_EQ(row_of("patient_id,day,y\nP1,1,0\n"), 0u);  // missing columns
  EXPECT_EQ(row_of(std::string(kHeader) + "P1,C1,5,1,1,0,0,abc,2\n"), 1u);
  EXPECT_EQ(row_of(std::string(kHeader) + "P1,C1,5,1,1,0,0,1\n"), 1u);
  EXPECT_EQ(row_of(std::string(kHeader) + "P1,C1,5,1,1,0,0,1,2\nP2,C1,-1,1,1,0,0,1,2\n"), 2u);
  EXPECT_EQ(row_of(std::string(kHeader) + "P1,C1,5,1,1,0,0,1,2\nP2,C1,6,1,1,0,0,nan,2\n"), 2u);
  std::istringstream dup(std::string(kHeader) + "P1,C1,5,1,1,0,0,1,2\nP1,C2,5,0,0,0,0,1,2\n");
  EXPECT_THROW(read_cohort_csv(dup), DataError);
}

TEST(Ingest, HorizonBound) {
  std::istringstream in(std::string(kHeader) + "P1,C1,50,1,1,0,0,0.5,2\n");
  EXPECT_THROW(read_cohort_csv(in, {}, 40), IngestError);
}

TEST(Ingest, CustomColumnMap) {
  std::istringstream in("pid,site,t,label,rx,after,preg,age,count,ignored\n"
                        "\"A,1\",S,4,1,0,0,0,61,3,zzz\r\n");
  ColumnMap map;
  map.patient_id = "pid";
  map.clinic_id = "site";
  map.day = "t";
  map.y = "label";
  map.rho_j = "rx";
  map.post_test_rx = "after";
  map.pregnant = "preg";
  map.covariates = {"age", "count"};
  const auto c = read_cohort_csv(in, map);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.consultations[0].patient_id, "A,1");
  EXPECT_EQ(c.consultations[0].covariates, (std::vector<double>{61.0, 3.0}));
}

TEST(Ingest, MissingFile) {
  EXPECT_THROW(ingest_csv("/nonexistent/cohort.csv"), DataError);
}

TEST(Roundtrip, GeneratedCohortIsExact) {
  CohortConfig cfg;
  cfg.n_consultations = 2000;
  const auto c = generate(cfg, 13);
  std::stringstream cs, ks;
  write_cohort_csv(c, cs);
  write_clinics_csv(c, ks);
  const auto back = read_cohort_csv(cs, {}, cfg.horizon_days);
  EXPECT_EQ(back.consultations, c.consultations);
  EXPECT_EQ(read_clinics_csv(ks), c.clinics);

  std::stringstream again;
  write_cohort_csv(back, again);
  std::stringstream first;
  write_cohort_csv(c, first);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Roundtrip, File) {
  const auto dir = std::filesystem::temp_directory_path() / "stewardsim_io_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "cohort.csv").string();
  CohortConfig cfg;
  cfg.n_consultations = 300;
  const auto c = generate(cfg, 4);
  {
    std::ofstream out(path);
    write_cohort_csv(c, out);
  }
  EXPECT_EQ(ingest_csv(path).consultations, c.consultations);
  std::filesystem::remove_all(dir);
}

TEST(Clinics, RejectsBadRows) {
  std::istringstream bad_header("clinic_id,n\nC1,1\n");
  EXPECT_THROW(read_clinics_csv(bad_header), IngestError);
  std::istringstream bad_share(
      "clinic_id,n_physicians,mean_age,share_female,patients_per_physician,tests_per_patient,leniency,expertise\n"
      "C1,2,50,1.5,40,1.5,0,1\n");
  EXPECT_THROW(read_clinics_csv(bad_share), IngestError);
}
