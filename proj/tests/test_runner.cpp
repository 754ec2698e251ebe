#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hybrid/core/report.hpp"
#include "hybrid/core/types.hpp"
#include "hybrid/runner/config.hpp"
#include "hybrid/runner/runner.hpp"
#include "hybrid/runner/summary.hpp"

using namespace hybrid;
using namespace hybrid::runner;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

RunConfig tiny_static() {
  return parse(R"(
[problem]
name = corr_linear
[scheme]
names = sequential, pd, ha_only
[model]
kinds = gb
filtered = false, true
trees = 20
[training]
prior_epochs = 200
repeats = 1
[seeds]
master = 5
replicates = 2
)");
}

ExperimentReport record(const std::string& scheme, double d_hat, unsigned long long seed) {
  ExperimentReport r;
  r.problem = "friedman";
  r.scheme = scheme;
  r.model = "gb";
  r.n_train = 300;
  r.seed = seed;
  r.d_hat = d_hat;
  return r;
}

std::string summary_csv(const std::vector<ExperimentReport>& records) {
  std::ostringstream out;
  write_summary_csv(out, summarize(records));
  return out.str();
}

}  // namespace

TEST(Config, ParsesAllSections) {
  const RunConfig c = parse(R"(
desk_scale_factor = 0.5
[problem]
name = corr_friedman
n_train = 30, 120
[scheme]
names = sequential, alternate
[model]
kinds = mlp, gb
filtered = unfiltered, filtered
width = 12
[training]
epochs = 100
integrator = rk4
[evaluation]
points = test
[seeds]
master = 7
replicates = 3
[runner]
workers = 2
)");
  EXPECT_EQ(c.problem, "corr_friedman");
  EXPECT_EQ(c.n_train, (std::vector<int>{30, 120}));
  EXPECT_EQ(c.schemes, (std::vector<std::string>{"sequential", "alternate"}));
  EXPECT_EQ(c.filters, (std::vector<bool>{false, true}));
  EXPECT_EQ(*c.model.width, 12);
  EXPECT_EQ(*c.training.epochs, 100);
  EXPECT_EQ(*c.training.integrator, "rk4");
  EXPECT_DOUBLE_EQ(c.scale, 0.5);
  EXPECT_EQ(c.workers, 2);
  EXPECT_EQ(c.seeds(), (std::vector<std::uint64_t>{7, 8, 9}));
  EXPECT_EQ(c.to_json()["model"]["width"], 12);
}

TEST(Config, ScaleSectionForm) {
  const RunConfig c = parse("[problem]\nname = pendulum\n[scheme]\nnames = joint\n[model]\nkinds = mlp\n"
                            "[desk_scale_factor]\nvalue = 0.25\n");
  EXPECT_TRUE(c.dynamic());
  EXPECT_DOUBLE_EQ(c.scale, 0.25);
  EXPECT_EQ(scaled_epochs(500, 0.25), 125);
  EXPECT_EQ(scaled_epochs(3, 0.01), 1);
}

TEST(Config, Errors) {
  const std::string base = "[problem]\nname = friedman\n[scheme]\nnames = pd\n[model]\nkinds = gb\n";
  EXPECT_NO_THROW(parse(base));
  EXPECT_THROW(parse(base + "[training]\nepoch = 3\n"), ConfigError);
  EXPECT_THROW(parse(base + "[extras]\na = 1\n"), ConfigError);
  EXPECT_THROW(parse(base + "[training]\nepochs = many\n"), ConfigError);
  EXPECT_THROW(parse(base + "[evaluation]\npoints = grid\n"), ConfigError);
  EXPECT_THROW(parse(base + "[seeds]\nreplicates = 0\n"), ConfigError);
  EXPECT_THROW(parse("[problem]\nname = friedman\n[scheme]\nnames = joint\n[model]\nkinds = gb\n"), ConfigError);
  EXPECT_THROW(parse("[problem]\nname = friedman\n[scheme]\nnames = pd\n[model]\nkinds = cnn\n"), ConfigError);
  EXPECT_THROW(parse("[problem]\nname = mnist\n[scheme]\nnames = pd\n[model]\nkinds = gb\n"), ConfigError);
  EXPECT_THROW(parse("[problem]\nname = ccs\ndata_path = x.csv\n[scheme]\nnames = fk_ha\n[model]\nkinds = gb\n"),
               ConfigError);
  EXPECT_THROW(parse("[problem]\nname = ccs\n[scheme]\nnames = pd\n[model]\nkinds = gb\n"), ConfigError);
  EXPECT_THROW(parse("[problem]\nname = pendulum\nn_train = 5\n[scheme]\nnames = pd\n[model]\nkinds = mlp\n"),
               ConfigError);
  EXPECT_THROW(load_config("/nonexistent/run.ini"), ConfigError);
}

TEST(Config, RelativeDataPathFollowsConfigFile) {
  const fs::path dir = fs::temp_directory_path() / "hybrid_test_cfg";
  fs::create_directories(dir);
  std::ofstream(dir / "run.ini") << "[problem]\nname = ccpp\ndata_path = ../data/ccpp.csv\n"
                                    "[scheme]\nnames = pd\n[model]\nkinds = gb\n";
  const RunConfig c = load_config(dir / "run.ini");
  EXPECT_EQ(fs::path(c.data_path), (dir / "../data/ccpp.csv").lexically_normal());
}

TEST(Tasks, ExpansionOrderAndSkips) {
  const RunConfig c = tiny_static();
  const auto tasks = expand_tasks(c);
  // 2 seeds x (sequential, ha_only with both filters + pd unfiltered only).
  ASSERT_EQ(tasks.size(), 2u * 5u);
  for (const auto& t : tasks) EXPECT_FALSE(t.scheme == "pd" && t.filtered);
  EXPECT_EQ(tasks[0].seed, 5u);
  EXPECT_EQ(tasks[0].scheme, "sequential");
  EXPECT_FALSE(tasks[0].filtered);
  EXPECT_TRUE(tasks[1].filtered);
  EXPECT_EQ(tasks[2].scheme, "pd");
  EXPECT_EQ(tasks.back().seed, 6u);

  RunConfig sizes = c;
  sizes.n_train = {30, 60, 120};
  sizes.filters = {false};
  const auto st = expand_tasks(sizes);
  EXPECT_EQ(st.size(), 2u * 3u * 3u);
  EXPECT_EQ(st[0].n_train, 30);
  EXPECT_EQ(st[3].n_train, 60);
  EXPECT_EQ(train_size(sizes, st[3]), 60);
  EXPECT_EQ(train_size(c, tasks[0]), 50);

  RunConfig dyn = parse("[problem]\nname = lotka_volterra\n[scheme]\nnames = joint\n[model]\nkinds = mlp\n"
                        "filtered = false, true\n");
  EXPECT_EQ(expand_tasks(dyn).size(), 1u);
}

TEST(Runner, OneReplicateOneRecord) {
  RunConfig c = tiny_static();
  c.replicates = 1;
  c.schemes = {"sequential"};
  c.filters = {false};
  std::ostringstream jsonl;
  const auto records = run_experiment(c, &jsonl);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_TRUE(records[0].ok());
  EXPECT_TRUE(records[0].d_hat.has_value());
  EXPECT_TRUE(records[0].dk_hat.has_value());
  EXPECT_TRUE(records[0].rmae.has_value());
  EXPECT_EQ(records[0].n_train, 50);
  std::istringstream back(jsonl.str());
  const auto parsed = read_jsonl(back);
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0].d_hat, records[0].d_hat);
}

TEST(Runner, SummaryIdenticalAcrossRunsAndWorkers) {
  RunConfig c = tiny_static();
  c.workers = 1;
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  c.workers = 3;
  std::ostringstream jsonl;
  const auto par = run_experiment(c, &jsonl);
  EXPECT_EQ(summary_csv(a), summary_csv(b));
  EXPECT_EQ(summary_csv(a), summary_csv(par));
  // Records come back in task order whatever the completion order was.
  const auto tasks = expand_tasks(c);
  ASSERT_EQ(par.size(), tasks.size());
  std::istringstream in(jsonl.str());
  const auto written = read_jsonl(in);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    EXPECT_EQ(par[i].seed, tasks[i].seed);
    EXPECT_EQ(par[i].scheme, tasks[i].scheme);
    EXPECT_EQ(par[i].filtered, tasks[i].filtered);
    EXPECT_EQ(written[i].seed, tasks[i].seed);
    EXPECT_EQ(written[i].scheme, tasks[i].scheme);
  }
}

TEST(Runner, FailedReplicatesAreIsolated) {
  RunConfig c = parse("[problem]\nname = ccpp\ndata_path = /nonexistent/ccpp.csv\n[scheme]\nnames = pd, ha_only\n"
                      "[model]\nkinds = gb\n[seeds]\nreplicates = 2\n");
  const auto records = run_experiment(c);
  ASSERT_EQ(records.size(), 4u);
  for (const auto& r : records) {
    EXPECT_FALSE(r.ok());
    EXPECT_FALSE(r.d_hat.has_value());
  }
  const auto rows = summarize(records);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].all_failed());
  EXPECT_NE(summary_csv(records).find("all_failed"), std::string::npos);
}

TEST(Summary, MeanAndPopulationSd) {
  const auto rows = summarize({record("pd", 1.0, 0), record("pd", 3.0, 1)});
  ASSERT_EQ(rows.size(), 1u);
  ASSERT_TRUE(rows[0].d_hat.has_value());
  EXPECT_DOUBLE_EQ(rows[0].d_hat->mean, 2.0);
  EXPECT_DOUBLE_EQ(rows[0].d_hat->sd, 1.0);
  EXPECT_EQ(rows[0].d_hat->count, 2);
  EXPECT_FALSE(rows[0].dk_hat.has_value());

  const auto single = summarize({record("pd", 1.25, 0)});
  EXPECT_DOUBLE_EQ(single[0].d_hat->sd, 0.0);
  EXPECT_FALSE(stat_of({}).has_value());
}

TEST(Summary, PartialCellsAndOrdering) {
  ExperimentReport bad = record("alternate", 0.0, 2);
  bad.d_hat.reset();
  bad.error = "diverged";
  const auto rows = summarize({record("sequential", 1.0, 0), bad, record("alternate", 4.0, 1)});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].scheme, "alternate");
  EXPECT_EQ(rows[0].records, 2);
  EXPECT_EQ(rows[0].failed, 1);
  EXPECT_DOUBLE_EQ(rows[0].d_hat->mean, 4.0);
  const std::string csv = summary_csv({record("sequential", 1.0, 0), bad, record("alternate", 4.0, 1)});
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "problem,scheme,model,filtered,n_train,records,failed,status,d_hat_mean,d_hat_sd,dk_hat_mean,"
            "dk_hat_sd,rmae_mean,rmae_sd,log_d_hat_mean,log_d_hat_sd");
  EXPECT_NE(csv.find("partial"), std::string::npos);
}
