#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace hybrid::runner {

// Optional overrides of the per-problem model defaults.
struct ModelParams {
  std::optional<int> hidden_layers;
  std::optional<int> width;
  std::optional<int> trees;
  std::optional<int> max_depth;
  std::optional<int> min_samples_split;
  std::optional<double> shrinkage;
  std::optional<int> hidden_channels;
  std::optional<int> conv_layers;
  std::string activation = "tanh";
};

// Optional overrides of the per-problem training defaults. Epoch counts are
// full-scale values; desk_scale_factor multiplies them.
struct TrainingParams {
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<double> prior_learning_rate;
  std::optional<int> prior_epochs;
  std::optional<int> alternate_epochs;
  std::optional<int> repeats;
  std::optional<int> init_epochs;
  std::optional<int> pd_block_epochs;
  std::optional<int> pd_final_epochs;
  std::optional<int> batch_size;
  std::optional<std::string> integrator;
  std::optional<int> substeps;
  std::optional<int> pd_queries;
  std::optional<int> pd_background;
};

struct RunConfig {
  std::string problem;
  std::string data_path;         // real datasets only
  std::string split_mode = "int";
  std::vector<int> n_train;      // static problems; empty keeps the generator default
  std::vector<std::string> schemes;
  std::vector<std::string> models;
  std::vector<bool> filters{false};
  ModelParams model;
  TrainingParams training;
  std::uint64_t master_seed = 0;
  int replicates = 1;
  double scale = 1.0;
  int workers = 1;

  bool dynamic() const;
  bool real() const;
  std::vector<std::uint64_t> seeds() const;
  // Throws ConfigError for unknown ids or out-of-range values.
  void validate() const;
  nlohmann::json to_json() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

// max(1, round(n * scale))
int scaled_epochs(int n, double scale);

}  // namespace hybrid::runner
