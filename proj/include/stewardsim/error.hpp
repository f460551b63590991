#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stewardsim {

/// Invalid configuration values or schedules. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invariant-violating input data. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-level ingestion failure; `row()` is the 1-based data row (header excluded).
class IngestError : public DataError {
 public:
  IngestError(std::size_t row, const std::string& what)
      : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// A postcondition the library guarantees did not hold. Maps to CLI exit code 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

inline void require_config(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

inline void require_data(bool ok, const std::string& what) {
  if (!ok) throw DataError(what);
}

inline void ensure(bool ok, const std::string& what) {
  if (!ok) throw InvariantError(what);
}

}  // namespace detail
}  // namespace stewardsim
