#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hybrid {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using IndexSet = std::vector<int>;

// Invalid configuration: bad ids, shape mismatches, PD on filtered inputs.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or insufficient input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or state. `where` is the step or epoch index that failed.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long where)
      : std::runtime_error(what + " (at " + std::to_string(where) + ")"), where_(where) {}
  long where() const { return where_; }

 private:
  long where_;
};

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split split);

// Supervised pairs (x_i, y_i) plus the columns read by the prior.
struct Dataset {
  Matrix features;
  Vector targets;
  IndexSet known;
  Split split = Split::kTrain;

  int size() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }

  // Throws DataError when N < 1, shapes disagree, K is empty or out of
  // bounds, or any entry is non-finite.
  void validate() const;

  Dataset subset(const std::vector<int>& rows) const;
};

Dataset make_dataset(Matrix features, Vector targets, IndexSet known, Split split);

// State trajectories sampled every `dt` seconds. Each matrix is (T+1) x d.
struct TrajectoryDataset {
  std::vector<Matrix> trajectories;
  double dt = 0.0;
  std::optional<std::pair<int, int>> grid_shape;

  int size() const { return static_cast<int>(trajectories.size()); }
  int horizon() const;
  int state_dim() const;

  void validate() const;

  // Every observed state of every trajectory, stacked row-wise.
  Matrix pooled_states() const;
};

// A sub-trajectory [start, start + length] of trajectory `traj`.
struct Window {
  int traj = 0;
  int start = 0;
};

// Training windows extracted from a trajectory set without copying states.
struct WindowSet {
  const TrajectoryDataset* source = nullptr;
  std::vector<Window> windows;
  int length = 0;  // steps per window; each window holds length + 1 states

  int size() const { return static_cast<int>(windows.size()); }
};

// Windows of `length` steps taken every `stride` steps from each trajectory.
WindowSet extract_windows(const TrajectoryDataset& data, int length, int stride);

}  // namespace hybrid
