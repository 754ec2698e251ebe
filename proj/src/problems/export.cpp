#include "hybrid/problems/export.hpp"

#include <cstdio>
#include <fstream>

#include "hybrid/problems/real.hpp"

namespace hybrid::problems {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  return out;
}

void write_dataset(const Dataset& d, const fs::path& path) {
  auto out = open_out(path);
  for (int j = 0; j < d.dim(); ++j) out << 'x' << j << ',';
  out << "y\n";
  for (int i = 0; i < d.size(); ++i) {
    for (int j = 0; j < d.dim(); ++j) out << d.features(i, j) << ',';
    out << d.targets(i) << '\n';
  }
}

json prior_json(const ParametricPrior& p) {
  return {{"form", p.form_id()},
          {"theta", std::vector<double>(p.theta().data(), p.theta().data() + p.theta().size())},
          {"gamma", std::vector<double>(p.gamma().data(), p.gamma().data() + p.gamma().size())}};
}

void write_json(const json& j, const fs::path& path) { open_out(path) << j.dump(2) << '\n'; }

std::string traj_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "traj_%04d.csv", i);
  return buf;
}

}  // namespace

void export_static(const StaticProblem& p, const fs::path& dir) {
  fs::create_directories(dir);
  write_dataset(p.train, dir / "train.csv");
  write_dataset(p.val, dir / "val.csv");
  write_dataset(p.test, dir / "test.csv");
  write_json({{"problem", p.name},
              {"known", p.train.known},
              {"sizes", {{"train", p.train.size()}, {"val", p.val.size()}, {"test", p.test.size()}}},
              {"truth", prior_json(p.truth)},
              {"meta", p.meta}},
             dir / "manifest.json");
}

void export_dynamic(const DynamicProblem& p, const fs::path& dir) {
  fs::create_directories(dir);
  const std::pair<const char*, const TrajectoryDataset*> splits[] = {
      {"train", &p.train}, {"val", &p.val}, {"test", &p.test}};
  json sizes = json::object();
  for (const auto& [name, data] : splits) {
    fs::create_directories(dir / name);
    for (int i = 0; i < data->size(); ++i) {
      auto out = open_out(dir / name / traj_name(i));
      const Matrix& t = data->trajectories[static_cast<std::size_t>(i)];
      out << 't';
      for (Eigen::Index j = 0; j < t.cols(); ++j) out << ",s" << j;
      out << '\n';
      for (Eigen::Index r = 0; r < t.rows(); ++r) {
        out << static_cast<double>(r) * data->dt;
        for (Eigen::Index j = 0; j < t.cols(); ++j) out << ',' << t(r, j);
        out << '\n';
      }
    }
    sizes[name] = data->size();
  }
  json grid = nullptr;
  if (p.train.grid_shape) grid = {p.train.grid_shape->first, p.train.grid_shape->second};
  write_json({{"problem", p.name},
              {"dt", p.train.dt},
              {"horizon", p.train.horizon()},
              {"state_dim", p.train.state_dim()},
              {"grid_shape", grid},
              {"trajectories", sizes},
              {"truth", prior_json(p.truth)},
              {"meta", p.meta}},
             dir / "manifest.json");
}

TrajectoryDataset load_trajectories(const fs::path& dir, const std::string& split) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("missing manifest in " + dir.string());
  const json m = json::parse(in);
  TrajectoryDataset d;
  d.dt = m.at("dt").get<double>();
  if (!m.at("grid_shape").is_null()) d.grid_shape = std::make_pair(m["grid_shape"][0].get<int>(), m["grid_shape"][1].get<int>());
  const int n = m.at("trajectories").at(split).get<int>();
  for (int i = 0; i < n; ++i) {
    const CsvTable t = read_csv(dir / split / traj_name(i));
    d.trajectories.push_back(t.rows.rightCols(t.rows.cols() - 1));
  }
  d.validate();
  return d;
}

}  // namespace hybrid::problems
