#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "hybrid/core/metrics.hpp"
#include "hybrid/problems/dynamic_problems.hpp"
#include "hybrid/problems/export.hpp"
#include "hybrid/problems/real.hpp"
#include "hybrid/problems/static_problems.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace hybrid;
using namespace hybrid::problems;
namespace ht = hybrid::testing;
namespace fs = std::filesystem;

namespace {

Matrix sample_cov(const Matrix& x) {
  const Matrix c = x.rowwise() - x.colwise().mean();
  return (c.transpose() * c) / static_cast<double>(x.rows());
}

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("hybrid_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// A CCPP-like table with shuffled column order, a BOM and CRLF line ends.
fs::path synthetic_ccpp(int rows, std::uint64_t seed) {
  const fs::path dir = temp_dir("ccpp_" + std::to_string(seed));
  const Matrix x = ht::random_matrix(rows, 4, seed, 0.0, 30.0);
  std::ofstream out(dir / "ccpp.csv");
  out << "\xEF\xBB\xBF" << "V,AT,RH,AP,PE\r\n";
  out.precision(17);
  for (int i = 0; i < rows; ++i) {
    const double pe = 450.0 - 2.0 * x(i, 1) + 0.1 * x(i, 0) + 0.05 * x(i, 2) + std::sin(x(i, 3));
    out << x(i, 0) << "," << x(i, 1) << "," << x(i, 2) << "," << x(i, 3) << "," << pe << "\r\n";
  }
  return dir / "ccpp.csv";
}

}  // namespace

TEST(Static, SplitSizes) {
  const auto f = gen_friedman(1);
  EXPECT_EQ(f.train.size(), 300);
  EXPECT_EQ(f.val.size(), 300);
  EXPECT_EQ(f.test.size(), 600);
  EXPECT_EQ(f.train.dim(), 10);
  EXPECT_EQ(f.train.known, (IndexSet{0, 1}));
  const auto l = gen_corr_linear(1);
  EXPECT_EQ(l.train.size(), 50);
  EXPECT_EQ(l.val.size(), 50);
  EXPECT_EQ(l.test.size(), 600);
  const auto custom = make_static_problem("corr_friedman", 1, {30, 300, 600});
  EXPECT_EQ(custom.train.size(), 30);
  EXPECT_THROW(make_static_problem("nope", 1, {}), ConfigError);
  EXPECT_THROW(gen_friedman(1, {{0, 1, 1}, std::nullopt, 1.0}), ConfigError);
}

TEST(Static, NoiselessTargetsMatchResponse) {
  for (const std::string name : {"friedman", "corr_friedman"}) {
    FriedmanOptions opt;
    opt.noise_sd = 0.0;
    const auto p = name == "friedman" ? gen_friedman(2, opt) : gen_corr_friedman(2, opt);
    EXPECT_EQ(mse(p.f_true(p.test.features), p.test.targets), 0.0) << name;
  }
  const auto l = gen_corr_linear(2, {{50, 50, 600}, 0.0});
  EXPECT_EQ(mse(l.f_true(l.test.features), l.test.targets), 0.0);
}

TEST(Static, NoiseVariance) {
  const auto p = gen_friedman(3, {{100000, 1, 1}, std::nullopt, 1.0});
  const Vector e = p.train.targets - p.f_true(p.train.features);
  EXPECT_NEAR((e.array() - e.mean()).square().mean(), 1.0, 0.02);
  EXPECT_NEAR(e.mean(), 0.0, 0.02);
}

TEST(Static, FriedmanDecomposition) {
  // f = f_k + f_a with f_a written out from the drawn coefficients.
  const auto p = gen_friedman(4);
  const auto t = p.meta["theta"].get<std::vector<double>>();
  const Matrix& x = p.test.features;
  const Vector fk = p.truth.predict(x);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    EXPECT_NEAR(fk(i), t[0] * std::sin(t[1] * x(i, 0) * x(i, 1)), 1e-12);
    const double fa = t[2] * std::pow(x(i, 2) - t[3], 2) + t[4] * x(i, 3) + t[5] * x(i, 4);
    EXPECT_NEAR(p.f_true(x.row(i))(0), fk(i) + fa, 1e-12);
  }
  const double base[6] = {10.0, std::acos(-1.0), 20.0, 0.5, 10.0, 5.0};
  for (int i = 0; i < 6; ++i) {
    EXPECT_GE(t[static_cast<std::size_t>(i)], 0.5 * base[i]);
    EXPECT_LE(t[static_cast<std::size_t>(i)], 1.5 * base[i]);
  }
}

TEST(Static, CorrelatedFriedmanCovarianceAndScaling) {
  const auto p = gen_corr_friedman(5, {{100000, 10, 10}, std::nullopt, 1.0});
  EXPECT_NEAR(p.train.features.cwiseAbs().maxCoeff(), 1.0, 1e-15);
  for (int j = 0; j < 10; ++j) EXPECT_NEAR(p.train.features.col(j).cwiseAbs().maxCoeff(), 1.0, 1e-15);
  const auto sc = p.meta["feature_scale"].get<std::vector<double>>();
  Matrix raw = p.train.features;
  for (int j = 0; j < 10; ++j) raw.col(j) *= sc[static_cast<std::size_t>(j)];
  const Matrix c = sample_cov(raw);
  for (int i = 0; i < 10; ++i) {
    EXPECT_NEAR(c(i, i), 0.75, 0.02);
    for (int j = i + 1; j < 10; ++j) EXPECT_NEAR(std::abs(c(i, j)), 0.3, 0.02);
  }
  EXPECT_NEAR(raw.col(0).mean(), 0.5, 0.02);
  // The known term on scaled inputs equals the raw-unit term.
  const auto t = p.meta["theta"].get<std::vector<double>>();
  const Vector fk = p.truth.predict(p.test.features);
  for (int i = 0; i < p.test.size(); ++i) {
    const double x0 = p.test.features(i, 0) * sc[0], x1 = p.test.features(i, 1) * sc[1];
    EXPECT_NEAR(fk(i), t[0] * std::sin(t[1] * x0 * x1), 1e-10);
  }
}

TEST(Static, CovarianceFallbackIsPositiveDefinite) {
  bool fact = false;
  const Matrix c = corr_friedman_covariance(6, 10, 0, &fact);
  EXPECT_TRUE(fact);
  EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(c)).info(), Eigen::Success);
  EXPECT_THROW(sample_mvn(Vector::Zero(2), Matrix::Identity(2, 2) * -1.0, 3, 1), DataError);
}

TEST(Static, CorrelatedLinearRegressions) {
  const auto p = gen_corr_linear(7, {{100000, 1, 1}, 0.5});
  const Matrix& x = p.train.features;
  const auto y = ht::to_std(p.train.targets);
  // Marginal slope -0.5 + 2.25 / 2 and the full-model coefficients.
  EXPECT_NEAR(ht::ols({ht::column(x, 0)}, y)[0], 0.625, 0.01);
  const auto full = ht::ols({ht::column(x, 0), ht::column(x, 1)}, y);
  EXPECT_NEAR(full[0], -0.5, 0.01);
  EXPECT_NEAR(full[1], 1.0, 0.01);
  const Matrix c = sample_cov(x);
  EXPECT_NEAR(c(0, 0), 2.0, 0.05);
  EXPECT_NEAR(c(0, 1), 2.25, 0.05);
  EXPECT_NEAR(c(1, 1), 3.0, 0.05);
  EXPECT_EQ(p.truth.theta()(0), -0.5);
}

TEST(Static, OverlappingInputs) {
  const auto p = gen_overlapping(8, {{100000, 1, 1}, 0.5});
  const Matrix c = sample_cov(p.train.features);
  EXPECT_NEAR(c(0, 0), 2.0, 0.05);
  EXPECT_EQ(p.truth.form_id(), "quadratic");
  const Matrix& x = p.test.features;
  const Vector want = (0.2 * x.col(0).array().square() + (1.5 * x.col(0).array()).sin() + x.col(1).array()).matrix();
  EXPECT_LE((p.f_true(x) - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Static, DeterministicAndSeedSensitive) {
  const auto a = gen_corr_friedman(9), b = gen_corr_friedman(9), c = gen_corr_friedman(10);
  EXPECT_EQ(a.train.features, b.train.features);
  EXPECT_EQ(a.test.targets, b.test.targets);
  EXPECT_NE(a.train.features, c.train.features);
}

TEST(Static, ValidationAndTestIndependentOfTrainSize) {
  const auto small = make_static_problem("corr_friedman", 11, {30, 300, 600});
  const auto big = make_static_problem("corr_friedman", 11, {300, 300, 600});
  EXPECT_EQ(gen_friedman(11, {{30, 300, 600}, std::nullopt, 1.0}).test.features,
            gen_friedman(11, {{300, 300, 600}, std::nullopt, 1.0}).test.features);
  EXPECT_EQ(small.val.size(), big.val.size());
}

TEST(Static, SplitsAreDisjoint) {
  const auto p = gen_friedman(12);
  std::set<double> train;
  for (Eigen::Index i = 0; i < p.train.size(); ++i) train.insert(p.train.features(i, 0));
  for (const Dataset* d : {&p.val, &p.test}) {
    for (Eigen::Index i = 0; i < d->size(); ++i) EXPECT_FALSE(train.count(d->features(i, 0)));
  }
}

TEST(Dynamic, WindowCountsAtFullScale) {
  const auto lv = sim_lotka_volterra(13, 1.0);
  EXPECT_EQ(lv.train.size(), 100);
  EXPECT_EQ(lv.val.size(), 50);
  EXPECT_EQ(lv.test.size(), 50);
  EXPECT_EQ(lv.train.horizon(), 400);
  EXPECT_EQ(extract_windows(lv.train, lv.window, lv.stride).size(), 18100);
  const auto pend = sim_pendulum(13, 1.0);
  EXPECT_EQ(pend.train.horizon(), 200);
  EXPECT_EQ(extract_windows(pend.train, pend.window, pend.stride).size(), 8100);
  EXPECT_EQ(train_trajectory_count("lotka_volterra", 1.0), 100);
  EXPECT_EQ(train_trajectory_count("reaction_diffusion", 1.0), 960);
  EXPECT_EQ(train_trajectory_count("pendulum", 0.001), 2);
}

TEST(Dynamic, DeterministicAndDisjoint) {
  const auto a = sim_pendulum(14, 0.1), b = sim_pendulum(14, 0.1), c = sim_pendulum(15, 0.1);
  EXPECT_EQ(a.train.trajectories[0], b.train.trajectories[0]);
  EXPECT_EQ(a.meta["omega0"], b.meta["omega0"]);
  EXPECT_NE(a.train.trajectories[0], c.train.trajectories[0]);
  std::set<double> starts;
  for (const auto* d : {&a.train, &a.val, &a.test}) {
    for (const auto& t : d->trajectories) EXPECT_TRUE(starts.insert(t(0, 0)).second);
  }
}

TEST(Dynamic, InitialStateRanges) {
  const auto lv = sim_lotka_volterra(16, 0.2);
  for (const auto& t : lv.train.trajectories) EXPECT_LE(t.row(0).maxCoeff(), 0.0);
  const auto p = sim_pendulum(16, 0.2);
  const double w = p.meta["omega0"].get<double>(), xi = p.meta["xi"].get<double>();
  EXPECT_GE(w, 0.785);
  EXPECT_LE(w, 3.14);
  EXPECT_GE(xi, 0.0);
  EXPECT_LE(xi, 0.8);
  EXPECT_NEAR(p.truth.theta()(0), w * w, 1e-12);
  for (const auto& t : p.train.trajectories) {
    EXPECT_LE(std::abs(t(0, 0)), std::acos(-1.0) / 2);
    EXPECT_GE(t(0, 1), 0.0);
    EXPECT_LE(t(0, 1), 0.1);
  }
}

TEST(Dynamic, FieldDecomposesIntoPriorAndRemainder) {
  // LV: f = h_k + (alpha, delta e^p - gamma); pendulum: f = h_k + (0, -xi w).
  const auto lv = sim_lotka_volterra(17, 0.05);
  const Matrix s = lv.train.pooled_states();
  Matrix f;
  lv.f_true(s, f);
  const Matrix fk = lv.truth.eval(s);
  EXPECT_LE((f.col(0) - fk.col(0) - Vector::Ones(s.rows())).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((f.col(1) - (s.col(0).array().exp() - 1.0).matrix()).cwiseAbs().maxCoeff(), 1e-12);
  const auto p = sim_pendulum(17, 0.05);
  const Matrix ps = p.train.pooled_states();
  p.f_true(ps, f);
  const Matrix pk = p.truth.eval(ps);
  EXPECT_LE((f.col(0) - pk.col(0)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((f.col(1) - pk.col(1) + p.meta["xi"].get<double>() * ps.col(1)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dynamic, ReactionDiffusionShapes) {
  const auto rd = sim_reaction_diffusion(18, 0.003);
  EXPECT_EQ(rd.train.state_dim(), 2048);
  EXPECT_EQ(rd.train.horizon(), 245);
  ASSERT_TRUE(rd.train.grid_shape.has_value());
  EXPECT_EQ(rd.train.grid_shape->first, 32);
  EXPECT_NEAR(rd.train.dt, 0.01, 1e-15);
}

TEST(Real, StandardizedSplits) {
  const auto path = synthetic_ccpp(400, 19);
  const auto p = load_real(path, "ccpp", RealMode::kInt, 3);
  EXPECT_EQ(p.train.size(), 100);
  EXPECT_EQ(p.val.size(), 100);
  EXPECT_EQ(p.test.size(), 200);
  EXPECT_LE(p.train.features.colwise().mean().cwiseAbs().maxCoeff(), 1e-6);
  const Matrix c = sample_cov(p.train.features);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(c(j, j), 1.0, 1e-6);
  EXPECT_NEAR(p.train.targets.mean(), 0.0, 1e-6);
  EXPECT_NEAR((p.train.targets.array() - p.train.targets.mean()).square().mean(), 1.0, 1e-6);
  EXPECT_EQ(p.meta["features"][0], "T");
  EXPECT_FALSE(p.meta["has_truth"].get<bool>());
  // Feature 0 is the temperature column: target falls with it.
  const auto beta = ht::ols({ht::column(p.train.features, 0)}, ht::to_std(p.train.targets));
  EXPECT_LT(beta[0], -0.5);
}

TEST(Real, ExtrapolationSplitHoldsLowestTargets) {
  const auto path = synthetic_ccpp(400, 20);
  const auto p = load_real(path, "ccpp", RealMode::kExt, 4);
  EXPECT_EQ(p.test.size(), 100);
  EXPECT_LT(p.test.targets.maxCoeff(), std::min(p.train.targets.minCoeff(), p.val.targets.minCoeff()));
  const auto q = load_real(path, "ccpp", RealMode::kExt, 4);
  EXPECT_EQ(p.train.features, q.train.features);
}

TEST(Real, ConcreteRatioFeature) {
  const fs::path dir = temp_dir("ccs");
  std::ofstream out(dir / "ccs.csv");
  out << "Cement (component 1)(kg in a m^3 mixture),Blast Furnace Slag,Fly Ash,Water,Superplasticizer,"
         "Coarse Aggregate,Fine Aggregate,Age (day),\"Concrete compressive strength(MPa, megapascals)\"\n";
  const Matrix x = ht::random_matrix(300, 8, 21, 1.0, 100.0);
  for (int i = 0; i < 300; ++i) {
    for (int j = 0; j < 8; ++j) out << x(i, j) << ",";
    out << 30.0 * x(i, 0) / x(i, 3) + 0.01 * x(i, 7) << "\n";
  }
  out.close();
  const auto p = load_real(dir / "ccs.csv", "ccs", RealMode::kInt, 5);
  EXPECT_EQ(p.train.dim(), 9);
  EXPECT_EQ(p.meta["features"][0], "Cement/Water");
  // Column 0 is the standardized ratio of columns 1 and 4 in raw units.
  const auto beta = ht::ols({ht::column(p.train.features, 0)}, ht::to_std(p.train.targets));
  EXPECT_GT(beta[0], 0.9);
}

TEST(Real, SchemaErrors) {
  const fs::path dir = temp_dir("bad");
  write_file(dir / "missing.csv", "AT,AP,RH,PE\n1,2,3,4\n");
  EXPECT_THROW(load_real(dir / "missing.csv", "ccpp", RealMode::kInt, 0), DataError);
  write_file(dir / "ragged.csv", "AT,V,AP,RH,PE\n1,2,3,4,5\n1,2,3\n");
  EXPECT_THROW(read_csv(dir / "ragged.csv"), DataError);
  write_file(dir / "text.csv", "AT,V,AP,RH,PE\n1,2,x,4,5\n");
  EXPECT_THROW(read_csv(dir / "text.csv"), DataError);
  write_file(dir / "short.csv", "AT,V,AP,RH,PE\n1,2,3,4,5\n");
  EXPECT_THROW(load_real(dir / "short.csv", "ccpp", RealMode::kInt, 0), DataError);
  EXPECT_THROW(load_real(dir / "nope.csv", "ccpp", RealMode::kInt, 0), DataError);
  EXPECT_THROW(load_real(dir / "short.csv", "boston", RealMode::kInt, 0), ConfigError);
  EXPECT_THROW(parse_real_mode("middle"), ConfigError);
}

TEST(Export, StaticRoundTrip) {
  const auto p = gen_corr_linear(22);
  const fs::path dir = temp_dir("export_static");
  export_static(p, dir);
  const CsvTable t = read_csv(dir / "train.csv");
  ASSERT_EQ(t.header, (std::vector<std::string>{"x0", "x1", "y"}));
  EXPECT_EQ(Matrix(t.rows.leftCols(2)), p.train.features);
  EXPECT_EQ(Vector(t.rows.col(2)), p.train.targets);
  std::ifstream in(dir / "manifest.json");
  const auto m = nlohmann::json::parse(in);
  EXPECT_EQ(m["known"], nlohmann::json::array({0}));
  EXPECT_EQ(m["truth"]["theta"][0].get<double>(), -0.5);
}

TEST(Export, DynamicRoundTrip) {
  const auto p = sim_lotka_volterra(23, 0.05);
  const fs::path dir = temp_dir("export_dyn");
  export_dynamic(p, dir);
  for (const auto& [name, data] : {std::pair{"train", &p.train}, {"val", &p.val}, {"test", &p.test}}) {
    const auto back = load_trajectories(dir, name);
    ASSERT_EQ(back.size(), data->size());
    EXPECT_DOUBLE_EQ(back.dt, data->dt);
    for (int i = 0; i < back.size(); ++i) {
      EXPECT_EQ(back.trajectories[static_cast<std::size_t>(i)], data->trajectories[static_cast<std::size_t>(i)]);
    }
  }
}
