#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hybrid/core/report.hpp"
#include "hybrid/runner/config.hpp"

namespace hybrid::runner {

// One (seed, training size, scheme, model, filter) cell replicate.
struct Task {
  std::uint64_t seed = 0;
  int n_train = 0;  // 0: problem default
  std::string scheme;
  std::string model;
  bool filtered = false;
};

// Deterministic task order: seed, size, scheme, model, filter. Combinations
// that are undefined (PD with filtering, filtering on dynamic problems) are
// left out.
std::vector<Task> expand_tasks(const RunConfig& cfg);

// Training-set size of a task: the requested size, or the problem default
// (training trajectories for dynamic problems).
int train_size(const RunConfig& cfg, const Task& task);

// Trains and evaluates one task. Never throws for failures inside the run;
// they are returned in the report's error field.
ExperimentReport run_task(const RunConfig& cfg, const Task& task);

using Progress = std::function<void(const ExperimentReport&, std::size_t done, std::size_t total)>;

// Runs every task on cfg.workers threads. Records are written to `jsonl`
// (when non-null) in task order as soon as their predecessors are done, and
// returned in the same order.
std::vector<ExperimentReport> run_experiment(const RunConfig& cfg, std::ostream* jsonl = nullptr,
                                             const Progress& progress = {});

}  // namespace hybrid::runner
