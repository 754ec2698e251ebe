#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "hybrid/core/residual.hpp"
#include "hybrid/core/types.hpp"

namespace hybrid::trees {

struct TreeConfig {
  int max_depth = -1;  // < 0: unlimited
  int min_samples_split = 2;
};

// CART regression tree with exhaustive variance-reduction splits. Rows with
// x[feature] <= threshold go left.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // mean target of the training rows reaching the node
    int samples = 0;
  };

  RegressionTree() = default;

  // Fits on all rows of (x, y).
  static RegressionTree fit(const Matrix& x, const Vector& y, const TreeConfig& cfg);

  double predict_row(const double* row) const;
  Vector predict(const Matrix& x) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  int depth() const;
  int leaves() const;

 private:
  friend class TreeBuilder;
  std::vector<Node> nodes_;
};

// Per-feature row orderings computed once and reused for many trees.
class Presorted {
 public:
  explicit Presorted(const Matrix& x);
  const Matrix& x() const { return *x_; }
  const std::vector<int>& order(int feature) const { return order_[static_cast<std::size_t>(feature)]; }

 private:
  const Matrix* x_;
  std::vector<std::vector<int>> order_;
};

// Fits a tree on rows `sample` (duplicates allowed, as in a bootstrap draw).
RegressionTree fit_tree(const Presorted& sorted, const Vector& y, const std::vector<int>& sample, const TreeConfig& cfg);

struct ForestConfig {
  int trees = 500;
  int max_depth = -1;
  int min_samples_split = 5;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

class RandomForest {
 public:
  static RandomForest fit(const Matrix& x, const Vector& y, const ForestConfig& cfg);
  Vector predict(const Matrix& x) const;
  const std::vector<RegressionTree>& trees() const { return trees_; }
  std::vector<RegressionTree>& trees() { return trees_; }

 private:
  std::vector<RegressionTree> trees_;
};

struct BoostConfig {
  int trees = 700;
  int max_depth = 2;
  int min_samples_split = 2;
  double shrinkage = 0.1;
};

// Least-squares gradient boosting: F_0 = mean(y), F_t = F_{t-1} + nu * tree_t.
class GradientBoosting {
 public:
  static GradientBoosting fit(const Matrix& x, const Vector& y, const BoostConfig& cfg);
  Vector predict(const Matrix& x) const;
  // Prediction using only the first `t` trees.
  Vector predict_prefix(const Matrix& x, int t) const;
  double init() const { return init_; }
  double shrinkage() const { return shrinkage_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  double init_ = 0.0;
  double shrinkage_ = 0.1;
  std::vector<RegressionTree> trees_;
};

class ForestRegressor final : public ResidualModel {
 public:
  explicit ForestRegressor(ForestConfig cfg, IndexSet input_filter = {})
      : ResidualModel(std::move(input_filter)), cfg_(cfg) {}
  std::string kind() const override { return "rf"; }
  std::unique_ptr<ResidualModel> clone() const override { return std::make_unique<ForestRegressor>(*this); }
  const RandomForest& model() const { return model_; }

 protected:
  void do_fit(const Matrix& x, const Vector& y, const Matrix*, const Vector*) override {
    model_ = RandomForest::fit(x, y, cfg_);
  }
  Vector do_predict(const Matrix& x) const override { return model_.predict(x); }

 private:
  ForestConfig cfg_;
  RandomForest model_;
};

class BoostingRegressor final : public ResidualModel {
 public:
  explicit BoostingRegressor(BoostConfig cfg, IndexSet input_filter = {})
      : ResidualModel(std::move(input_filter)), cfg_(cfg) {}
  std::string kind() const override { return "gb"; }
  std::unique_ptr<ResidualModel> clone() const override { return std::make_unique<BoostingRegressor>(*this); }
  const GradientBoosting& model() const { return model_; }

 protected:
  void do_fit(const Matrix& x, const Vector& y, const Matrix*, const Vector*) override {
    model_ = GradientBoosting::fit(x, y, cfg_);
  }
  Vector do_predict(const Matrix& x) const override { return model_.predict(x); }

 private:
  BoostConfig cfg_;
  GradientBoosting model_;
};

}  // namespace hybrid::trees
