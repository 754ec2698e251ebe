#include "hybrid/core/types.hpp"

#include <algorithm>
#include <cmath>

namespace hybrid {

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "unknown";
}

void Dataset::validate() const {
  if (features.rows() < 1) throw DataError("dataset is empty");
  if (targets.size() != features.rows()) {
    throw DataError("targets length " + std::to_string(targets.size()) + " != rows " +
                    std::to_string(features.rows()));
  }
  if (known.empty()) throw DataError("known feature set is empty");
  for (int k : known) {
    if (k < 0 || k >= dim()) throw DataError("known feature index " + std::to_string(k) + " out of range");
  }
  if (!features.allFinite() || !targets.allFinite()) throw DataError("dataset has non-finite entries");
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    out.targets(static_cast<Eigen::Index>(i)) = targets(rows[i]);
  }
  out.known = known;
  out.split = split;
  return out;
}

Dataset make_dataset(Matrix features, Vector targets, IndexSet known, Split split) {
  Dataset d{std::move(features), std::move(targets), std::move(known), split};
  d.validate();
  return d;
}

int TrajectoryDataset::horizon() const {
  return trajectories.empty() ? 0 : static_cast<int>(trajectories.front().rows()) - 1;
}

int TrajectoryDataset::state_dim() const {
  return trajectories.empty() ? 0 : static_cast<int>(trajectories.front().cols());
}

void TrajectoryDataset::validate() const {
  if (trajectories.empty()) throw DataError("trajectory dataset is empty");
  if (!(dt > 0.0)) throw DataError("trajectory dt must be positive");
  const auto rows = trajectories.front().rows();
  const auto cols = trajectories.front().cols();
  if (rows < 2) throw DataError("trajectory horizon must be at least one step");
  for (const auto& t : trajectories) {
    if (t.rows() != rows || t.cols() != cols) throw DataError("trajectories differ in shape");
    if (!t.allFinite()) throw DataError("trajectory has non-finite states");
  }
  if (grid_shape) {
    const long cells = static_cast<long>(grid_shape->first) * grid_shape->second;
    if (cells <= 0 || cols % cells != 0) throw DataError("grid shape does not divide the state dimension");
  }
}

Matrix TrajectoryDataset::pooled_states() const {
  Matrix out(static_cast<Eigen::Index>(size()) * (horizon() + 1), state_dim());
  Eigen::Index r = 0;
  for (const auto& t : trajectories) {
    out.middleRows(r, t.rows()) = t;
    r += t.rows();
  }
  return out;
}

WindowSet extract_windows(const TrajectoryDataset& data, int length, int stride) {
  if (length < 1 || stride < 1) throw ConfigError("window length and stride must be positive");
  WindowSet set;
  set.source = &data;
  set.length = std::min(length, data.horizon());
  for (int i = 0; i < data.size(); ++i) {
    for (int s = 0; s + set.length <= data.horizon(); s += stride) set.windows.push_back({i, s});
  }
  return set;
}

}  // namespace hybrid
