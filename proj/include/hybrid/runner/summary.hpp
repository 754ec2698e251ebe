#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hybrid/core/report.hpp"

namespace hybrid::runner {

// Mean and population standard deviation over the successful records of a
// cell. Empty when no record reports the metric.
struct Stat {
  int count = 0;
  double mean = 0.0;
  double sd = 0.0;
};

struct SummaryRow {
  std::string problem;
  std::string scheme;
  std::string model;
  bool filtered = false;
  long n_train = 0;
  int records = 0;
  int failed = 0;
  std::optional<Stat> d_hat;
  std::optional<Stat> dk_hat;
  std::optional<Stat> rmae;
  std::optional<Stat> log_d_hat;

  bool all_failed() const { return failed == records; }
};

std::optional<Stat> stat_of(const std::vector<double>& values);

// One row per cell, ordered by (problem, scheme, model, filter, n_train).
std::vector<SummaryRow> summarize(const std::vector<ExperimentReport>& records);

// CSV with a header row; missing statistics are empty fields and cells with
// no successful record carry status all_failed.
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace hybrid::runner
