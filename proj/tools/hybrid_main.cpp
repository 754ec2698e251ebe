#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "hybrid/problems/dynamic_problems.hpp"
#include "hybrid/problems/export.hpp"
#include "hybrid/problems/real.hpp"
#include "hybrid/problems/static_problems.hpp"
#include "hybrid/runner/runner.hpp"
#include "hybrid/runner/summary.hpp"

namespace fs = std::filesystem;
using namespace hybrid;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

int cmd_run(const fs::path& config, std::optional<std::uint64_t> seed, std::optional<double> scale,
            std::optional<int> workers, const fs::path& out_dir) {
  runner::RunConfig cfg = runner::load_config(config);
  if (seed) cfg.master_seed = *seed;
  if (scale) cfg.scale = *scale;
  if (workers) cfg.workers = *workers;
  cfg.validate();
  fs::create_directories(out_dir);
  {
    auto snap = open_out(out_dir / "config.json");
    snap << cfg.to_json().dump(2) << '\n';
  }
  auto jsonl = open_out(out_dir / "records.jsonl");
  const auto records = runner::run_experiment(cfg, &jsonl, [](const ExperimentReport& r, std::size_t done,
                                                              std::size_t total) {
    std::cerr << '[' << done << '/' << total << "] " << r.cell() << " seed " << r.seed;
    if (r.ok()) {
      if (r.d_hat) std::cerr << " d_hat " << *r.d_hat;
      if (r.dk_hat) std::cerr << " dk_hat " << *r.dk_hat;
    } else {
      std::cerr << " FAILED: " << *r.error;
    }
    std::cerr << " (" << r.wall_time_s << " s)\n";
  });
  auto summary = open_out(out_dir / "summary.csv");
  runner::write_summary_csv(summary, runner::summarize(records));
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.ok() ? 0 : 1;
  std::cerr << records.size() << " records, " << failed << " failed; wrote " << (out_dir / "records.jsonl").string()
            << " and " << (out_dir / "summary.csv").string() << '\n';
  return failed == 0 ? 0 : 1;
}

int cmd_summarize(const fs::path& records_path, const std::optional<fs::path>& out) {
  std::ifstream in(records_path);
  if (!in) throw DataError("cannot open " + records_path.string());
  const auto records = read_jsonl(in);
  const auto rows = runner::summarize(records);
  if (out) {
    auto f = open_out(*out);
    runner::write_summary_csv(f, rows);
  } else {
    runner::write_summary_csv(std::cout, rows);
  }
  for (const auto& r : records) {
    if (!r.ok()) return 1;
  }
  return 0;
}

int cmd_export(const std::string& problem, std::uint64_t seed, const fs::path& dir, double scale,
               const std::string& data_path, const std::string& mode) {
  if (problem == "ccpp" || problem == "ccs") {
    if (data_path.empty()) throw ConfigError("--data is required for " + problem);
    problems::export_static(problems::load_real(data_path, problem, problems::parse_real_mode(mode), seed), dir);
  } else if (problem == "lotka_volterra" || problem == "pendulum" || problem == "reaction_diffusion") {
    problems::export_dynamic(problems::make_dynamic_problem(problem, seed, scale), dir);
  } else {
    problems::export_static(problems::make_static_problem(problem, seed, problems::default_sizes(problem)), dir);
  }
  std::cerr << "wrote " << problem << " (seed " << seed << ") to " << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid additive model experiments"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<double> scale;
  std::optional<int> workers;

  auto* run = app.add_subcommand("run", "Run every cell of an experiment config");
  fs::path config;
  fs::path run_out = "results";
  run->add_option("config", config, "INI experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Master seed (overrides [seeds] master)");
  run->add_option("--scale", scale, "Desk scale factor (overrides the config)");
  run->add_option("--workers", workers, "Worker threads");
  run->add_option("--out", run_out, "Output directory for records.jsonl and summary.csv");

  auto* summarize = app.add_subcommand("summarize", "Summarize a JSON-lines record file as CSV");
  fs::path records;
  std::optional<fs::path> summary_out;
  summarize->add_option("records", records, "records.jsonl")->required()->check(CLI::ExistingFile);
  summarize->add_option("--out", summary_out, "Summary CSV path (default: stdout)");

  auto* exporter = app.add_subcommand("export-data", "Write a generated data set as CSV");
  std::string problem;
  std::uint64_t export_seed = 0;
  fs::path export_dir;
  double export_scale = 1.0;
  std::string data_path;
  std::string mode = "int";
  exporter->add_option("problem", problem, "Problem id")->required();
  exporter->add_option("seed", export_seed, "Data seed")->required();
  exporter->add_option("dir", export_dir, "Output directory")->required();
  exporter->add_option("--scale", export_scale, "Trajectory count scale for dynamic problems");
  exporter->add_option("--data", data_path, "Source CSV for real data sets");
  exporter->add_option("--mode", mode, "Real-data split mode: int or ext");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, seed, scale, workers, run_out);
    if (*summarize) return cmd_summarize(records, summary_out);
    if (*exporter) return cmd_export(problem, export_seed, export_dir, export_scale, data_path, mode);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
