#pragma once

// Cohort CSV files.
//
// cohort.csv:  patient_id,clinic_id,day,y,rho_j,post_test_rx,pregnant,x0,...,x{d-1}
// clinics.csv: clinic_id,n_physicians,mean_age,share_female,patients_per_physician,
//              tests_per_patient,leniency,expertise
//
// Reals are written in the shortest form that reads back to the same double.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "stewardsim/cohort.hpp"
#include "stewardsim/error.hpp"

namespace stewardsim {

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline void strip_eol(std::string& line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

}  // namespace detail

/// Column names of an external cohort file. Covariates are either listed
/// explicitly or taken as every column whose name starts with
/// `covariate_prefix` followed by digits, in file order.
struct ColumnMap {
  std::string patient_id = "patient_id";
  std::string clinic_id = "clinic_id";
  std::string day = "day";
  std::string y = "y";
  std::string rho_j = "rho_j";
  std::string post_test_rx = "post_test_rx";
  std::string pregnant = "pregnant";
  std::vector<std::string> covariates;
  std::string covariate_prefix = "x";
};

inline void write_cohort_csv(const Cohort& cohort, std::ostream& out) {
  const std::size_t d = cohort.n_features();
  out << "patient_id,clinic_id,day,y,rho_j,post_test_rx,pregnant";
  for (std::size_t j = 0; j < d; ++j) out << ",x" << j;
  out << '\n';
  for (const auto& c : cohort.consultations) {
    out << c.patient_id << ',' << c.clinic_id << ',' << c.day << ',' << c.y << ',' << c.rho_j << ','
        << c.post_test_rx << ',' << c.pregnant;
    for (double v : c.covariates) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

inline void write_clinics_csv(const Cohort& cohort, std::ostream& out) {
  using detail::format_double;
  out << "clinic_id,n_physicians,mean_age,share_female,patients_per_physician,tests_per_patient,leniency,expertise\n";
  for (const auto& k : cohort.clinics) {
    out << k.clinic_id << ',' << format_double(k.n_physicians) << ',' << format_double(k.mean_age) << ','
        << format_double(k.share_female) << ',' << format_double(k.patients_per_physician) << ','
        << format_double(k.tests_per_patient) << ',' << format_double(k.leniency) << ','
        << format_double(k.expertise) << '\n';
  }
}

/// Parses a cohort from a stream. Rows are 1-based data rows (the header is
/// row 0). `horizon_days`, when given, bounds the day column; otherwise the
/// horizon is one past the largest day.
inline Cohort read_cohort_csv(std::istream& in, const ColumnMap& map = {},
                              std::optional<int> horizon_days = std::nullopt) {
  Cohort cohort;
  cohort.meta.source = "csv";
  std::string line;
  if (!std::getline(in, line)) throw IngestError(0, "missing header line");
  detail::strip_eol(line);
  const auto header = detail::split_csv_line(line);
  auto find = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw IngestError(0, "missing column '" + name + "'");
  };
  const std::size_t i_pid = find(map.patient_id), i_cid = find(map.clinic_id), i_day = find(map.day),
                    i_y = find(map.y), i_rho = find(map.rho_j), i_post = find(map.post_test_rx),
                    i_preg = find(map.pregnant);
  std::vector<std::size_t> i_x;
  if (!map.covariates.empty()) {
    for (const auto& name : map.covariates) i_x.push_back(find(name));
  } else {
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto& h = header[i];
      if (h.size() > map.covariate_prefix.size() && h.compare(0, map.covariate_prefix.size(), map.covariate_prefix) == 0 &&
          h.find_first_not_of("0123456789", map.covariate_prefix.size()) == std::string::npos) {
        i_x.push_back(i);
      }
    }
  }
  if (i_x.empty()) throw IngestError(0, "no covariate columns");
  const std::size_t d = i_x.size();

  std::size_t row = 0;
  int max_day = -1;
  while (std::getline(in, line)) {
    detail::strip_eol(line);
    ++row;
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) {
      throw IngestError(row, "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
    }
    Consultation c;
    c.patient_id = f[i_pid];
    c.clinic_id = f[i_cid];
    if (c.patient_id.empty()) throw IngestError(row, "empty " + map.patient_id);
    if (c.clinic_id.empty()) throw IngestError(row, "empty " + map.clinic_id);
    auto integer = [&](std::size_t col, const std::string& name) {
      int v = 0;
      if (!detail::parse_number(f[col], v)) throw IngestError(row, "cannot parse " + name + " value '" + f[col] + "'");
      return v;
    };
    c.day = integer(i_day, map.day);
    c.y = integer(i_y, map.y);
    c.rho_j = integer(i_rho, map.rho_j);
    c.post_test_rx = integer(i_post, map.post_test_rx);
    c.pregnant = integer(i_preg, map.pregnant);
    c.covariates.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      if (!detail::parse_number(f[i_x[j]], c.covariates[j])) {
        throw IngestError(row, "cannot parse " + header[i_x[j]] + " value '" + f[i_x[j]] + "'");
      }
    }
    try {
      detail::check_consultation(c, d, horizon_days);
    } catch (const DataError& e) {
      throw IngestError(row, e.what());
    }
    max_day = std::max(max_day, c.day);
    cohort.consultations.push_back(std::move(c));
  }
  cohort.meta.config.n_features = d;
  cohort.meta.config.horizon_days = horizon_days.value_or(std::max(1, max_day + 1));
  if (cohort.consultations.empty()) cohort.meta.warnings.push_back("cohort file has no data rows");
  detail::finalize_order(cohort.consultations);
  return cohort;
}

inline Cohort ingest_csv(const std::string& path, const ColumnMap& map = {},
                         std::optional<int> horizon_days = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cohort file '" + path + "'");
  return read_cohort_csv(in, map, horizon_days);
}

inline std::vector<Clinic> read_clinics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError(0, "missing header line");
  detail::strip_eol(line);
  const auto header = detail::split_csv_line(line);
  const std::vector<std::string> expected{"clinic_id",         "n_physicians",      "mean_age", "share_female",
                                          "patients_per_physician", "tests_per_patient", "leniency", "expertise"};
  if (header != expected) throw IngestError(0, "unexpected clinics header");
  std::vector<Clinic> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    detail::strip_eol(line);
    ++row;
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != expected.size()) throw IngestError(row, "expected 8 fields");
    Clinic k;
    k.clinic_id = f[0];
    double* fields[] = {&k.n_physicians, &k.mean_age, &k.share_female, &k.patients_per_physician,
                        &k.tests_per_patient, &k.leniency, &k.expertise};
    for (std::size_t j = 0; j < 7; ++j) {
      if (!detail::parse_number(f[j + 1], *fields[j])) throw IngestError(row, "cannot parse " + expected[j + 1]);
    }
    if (k.share_female < 0.0 || k.share_female > 1.0) throw IngestError(row, "share_female must lie in [0,1]");
    if (k.n_physicians < 1.0) throw IngestError(row, "n_physicians must be >= 1");
    out.push_back(std::move(k));
  }
  std::sort(out.begin(), out.end(), [](const Clinic& a, const Clinic& b) { return a.clinic_id < b.clinic_id; });
  return out;
}

}  // namespace stewardsim
