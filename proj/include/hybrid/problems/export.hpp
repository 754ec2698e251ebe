#pragma once

#include <filesystem>

#include "hybrid/problems/dynamic_problems.hpp"
#include "hybrid/problems/static_problems.hpp"

namespace hybrid::problems {

// Writes train.csv, val.csv and test.csv (header x0..x{d-1},y) plus
// manifest.json with the known indices, true prior and generator metadata.
void export_static(const StaticProblem& p, const std::filesystem::path& dir);

// Writes <split>/traj_NNNN.csv (header t,s0..s{d-1}) for every trajectory
// plus manifest.json holding dt, horizon, grid_shape and the split sizes.
void export_dynamic(const DynamicProblem& p, const std::filesystem::path& dir);

// Reads back a directory written by export_dynamic.
TrajectoryDataset load_trajectories(const std::filesystem::path& dir, const std::string& split);

}  // namespace hybrid::problems
