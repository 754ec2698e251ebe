#include "hybrid/trees/tree.hpp"

#include <algorithm>
#include <numeric>

#include "hybrid/core/random.hpp"

namespace hybrid::trees {

Presorted::Presorted(const Matrix& x) : x_(&x), order_(static_cast<std::size_t>(x.cols())) {
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& o = order_[static_cast<std::size_t>(f)];
    o.resize(static_cast<std::size_t>(x.rows()));
    std::iota(o.begin(), o.end(), 0);
    std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return x(a, f) < x(b, f); });
  }
}

class TreeBuilder {
 public:
  TreeBuilder(const Presorted& sorted, const Vector& y, const std::vector<int>& sample, const TreeConfig& cfg)
      : x_(sorted.x()), sample_(sample), cfg_(cfg) {
    const auto n = sample.size();
    const int N = static_cast<int>(x_.rows());
    ys_.resize(n);
    for (std::size_t p = 0; p < n; ++p) ys_[p] = y(sample[p]);
    // Positions of each row inside the sample, so the global orderings can
    // be expanded without re-sorting.
    std::vector<int> start(static_cast<std::size_t>(N) + 1, 0);
    for (int r : sample) ++start[static_cast<std::size_t>(r) + 1];
    std::partial_sum(start.begin(), start.end(), start.begin());
    std::vector<int> fill(start.begin(), start.end() - 1), positions(n);
    for (std::size_t p = 0; p < n; ++p) positions[static_cast<std::size_t>(fill[sample[p]]++)] = static_cast<int>(p);
    cols_.resize(static_cast<std::size_t>(x_.cols()));
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      auto& c = cols_[static_cast<std::size_t>(f)];
      c.reserve(n);
      for (int r : sorted.order(static_cast<int>(f))) {
        for (int k = start[r]; k < start[r + 1]; ++k) c.push_back(positions[static_cast<std::size_t>(k)]);
      }
    }
    left_.resize(n);
    tmp_.resize(n);
  }

  RegressionTree build() {
    RegressionTree t;
    tree_ = &t;
    grow(0, static_cast<int>(ys_.size()), 0);
    return t;
  }

 private:
  double xv(int pos, int f) const { return x_(sample_[static_cast<std::size_t>(pos)], f); }

  int grow(int begin, int end, int depth) {
    const int n = end - begin;
    double sum = 0.0, sq = 0.0;
    for (int i = begin; i < end; ++i) {
      const double v = ys_[static_cast<std::size_t>(cols_[0][static_cast<std::size_t>(i)])];
      sum += v;
      sq += v * v;
    }
    const int id = static_cast<int>(tree_->nodes_.size());
    tree_->nodes_.push_back({});
    tree_->nodes_[id].value = sum / n;
    tree_->nodes_[id].samples = n;
    if (n < cfg_.min_samples_split || n < 2 || (cfg_.max_depth >= 0 && depth >= cfg_.max_depth)) return id;

    const double parent = sum * sum / n;
    const double eps = 1e-12 * sq;
    double best_gain = eps;
    int best_f = -1;
    double best_thr = 0.0;
    for (int f = 0; f < static_cast<int>(cols_.size()); ++f) {
      const auto& c = cols_[static_cast<std::size_t>(f)];
      double sl = 0.0;
      for (int i = begin; i < end - 1; ++i) {
        const int p = c[static_cast<std::size_t>(i)];
        sl += ys_[static_cast<std::size_t>(p)];
        const double v = xv(p, f);
        const double vn = xv(c[static_cast<std::size_t>(i) + 1], f);
        if (!(vn > v)) continue;
        const int nl = i - begin + 1;
        const double sr = sum - sl;
        const double gain = sl * sl / nl + sr * sr / (n - nl) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = f;
          double thr = 0.5 * (v + vn);
          if (!(thr < vn)) thr = v;
          best_thr = thr;
        }
      }
    }
    if (best_f < 0) return id;

    int nl = 0;
    for (int i = begin; i < end; ++i) {
      const int p = cols_[0][static_cast<std::size_t>(i)];
      const bool l = xv(p, best_f) <= best_thr;
      left_[static_cast<std::size_t>(p)] = l;
      nl += l;
    }
    for (auto& c : cols_) {
      int a = begin, b = 0;
      for (int i = begin; i < end; ++i) {
        const int p = c[static_cast<std::size_t>(i)];
        if (left_[static_cast<std::size_t>(p)]) {
          c[static_cast<std::size_t>(a++)] = p;
        } else {
          tmp_[static_cast<std::size_t>(b++)] = p;
        }
      }
      std::copy(tmp_.begin(), tmp_.begin() + b, c.begin() + a);
    }
    const int l = grow(begin, begin + nl, depth + 1);
    const int r = grow(begin + nl, end, depth + 1);
    auto& node = tree_->nodes_[id];
    node.feature = best_f;
    node.threshold = best_thr;
    node.left = l;
    node.right = r;
    return id;
  }

  const Matrix& x_;
  const std::vector<int>& sample_;
  TreeConfig cfg_;
  std::vector<double> ys_;
  std::vector<std::vector<int>> cols_;
  std::vector<char> left_;
  std::vector<int> tmp_;
  RegressionTree* tree_ = nullptr;
};

RegressionTree fit_tree(const Presorted& sorted, const Vector& y, const std::vector<int>& sample,
                        const TreeConfig& cfg) {
  if (sample.empty() || sorted.x().rows() == 0) throw DataError("cannot fit a tree on empty data");
  if (y.size() != sorted.x().rows()) throw ConfigError("tree fit: rows != targets");
  if (sorted.x().cols() == 0) throw DataError("tree fit needs at least one feature");
  return TreeBuilder(sorted, y, sample, cfg).build();
}

RegressionTree RegressionTree::fit(const Matrix& x, const Vector& y, const TreeConfig& cfg) {
  if (x.rows() == 0) throw DataError("cannot fit a tree on empty data");
  Presorted sorted(x);
  std::vector<int> all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), 0);
  return fit_tree(sorted, y, all, cfg);
}

double RegressionTree::predict_row(const double* row) const {
  int i = 0;
  while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    i = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(i)].value;
}

Vector RegressionTree::predict(const Matrix& x) const {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict_row(x.row(i).data());
  return out;
}

int RegressionTree::depth() const {
  // Children are always appended after their parent, so one forward pass suffices.
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

int RegressionTree::leaves() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

// ---------------------------------------------------------------------------

RandomForest RandomForest::fit(const Matrix& x, const Vector& y, const ForestConfig& cfg) {
  if (cfg.trees < 1) throw ConfigError("forest needs at least one tree");
  if (x.rows() == 0) throw DataError("cannot fit a forest on empty data");
  const Presorted sorted(x);
  const TreeConfig tc{cfg.max_depth, cfg.min_samples_split};
  const int n = static_cast<int>(x.rows());
  RandomForest rf;
  rf.trees_.reserve(static_cast<std::size_t>(cfg.trees));
  std::vector<int> sample(static_cast<std::size_t>(n));
  for (int t = 0; t < cfg.trees; ++t) {
    if (cfg.bootstrap) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
      std::uniform_int_distribution<int> pick(0, n - 1);
      for (auto& s : sample) s = pick(rng);
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    rf.trees_.push_back(fit_tree(sorted, y, sample, tc));
  }
  return rf;
}

Vector RandomForest::predict(const Matrix& x) const {
  Vector out = Vector::Zero(x.rows());
  for (const auto& t : trees_) out += t.predict(x);
  return out / static_cast<double>(trees_.size());
}

GradientBoosting GradientBoosting::fit(const Matrix& x, const Vector& y, const BoostConfig& cfg) {
  if (cfg.trees < 1) throw ConfigError("boosting needs at least one tree");
  if (!(cfg.shrinkage > 0.0)) throw ConfigError("boosting shrinkage must be positive");
  if (x.rows() == 0) throw DataError("cannot fit boosting on empty data");
  const Presorted sorted(x);
  const TreeConfig tc{cfg.max_depth, cfg.min_samples_split};
  std::vector<int> all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), 0);
  GradientBoosting gb;
  gb.shrinkage_ = cfg.shrinkage;
  gb.init_ = y.mean();
  Vector f = Vector::Constant(y.size(), gb.init_);
  gb.trees_.reserve(static_cast<std::size_t>(cfg.trees));
  for (int t = 0; t < cfg.trees; ++t) {
    const Vector r = y - f;
    gb.trees_.push_back(fit_tree(sorted, r, all, tc));
    f += cfg.shrinkage * gb.trees_.back().predict(x);
  }
  return gb;
}

Vector GradientBoosting::predict_prefix(const Matrix& x, int t) const {
  Vector out = Vector::Constant(x.rows(), init_);
  const int m = std::min<int>(t, static_cast<int>(trees_.size()));
  for (int i = 0; i < m; ++i) out += shrinkage_ * trees_[static_cast<std::size_t>(i)].predict(x);
  return out;
}

Vector GradientBoosting::predict(const Matrix& x) const { return predict_prefix(x, static_cast<int>(trees_.size())); }

}  // namespace hybrid::trees
