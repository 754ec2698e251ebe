#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace hybrid {

// One replicate's outcome. Metrics that do not apply stay empty and are
// written as null.
struct ExperimentReport {
  std::string problem;
  std::string scheme;
  std::string model;
  bool filtered = false;
  long n_train = 0;
  unsigned long long seed = 0;
  std::optional<double> d_hat;
  std::optional<double> dk_hat;
  std::optional<double> rmae;
  std::optional<double> log_d_hat;
  double wall_time_s = 0.0;
  std::optional<std::string> error;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, double> extra;

  bool ok() const { return !error.has_value(); }
  // Key of the summary cell this record belongs to.
  std::string cell() const;
};

nlohmann::json to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const nlohmann::json& j);

void write_jsonl(std::ostream& out, const ExperimentReport& r);
std::vector<ExperimentReport> read_jsonl(std::istream& in);

}  // namespace hybrid
