#pragma once

#include <stdexcept>
#include <string>

namespace cryptofactor {

// Machine-readable reason codes shared by exceptions and stage logs.
enum class Errc {
  missing_column,
  bad_numeric,
  bad_value,
  duplicate_key,
  empty_series,
  empty_universe,
  too_few_coins,
  empty_cell,
  too_few_observations,
  singular_design,
  rank_deficient,
  underdetermined,
  too_few_groups,
  absorbed,
  empty_panel,
  invalid_config,
  missing_artifact,
  no_riskfree,
  gap_break,
};

const char* errc_name(Errc c);

// Bad configuration or missing prerequisite artifact. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

// Invalid or unusable input data. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  DataError(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

// Estimation impossible on otherwise valid data. CLI exit code 4.
class EstimationError : public std::runtime_error {
 public:
  EstimationError(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace cryptofactor
