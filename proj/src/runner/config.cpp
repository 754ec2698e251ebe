#include "hybrid/runner/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hybrid/core/types.hpp"

namespace hybrid::runner {

namespace pt = boost::property_tree;

namespace {

const std::set<std::string> kStaticProblems = {"friedman", "corr_friedman", "corr_linear", "overlapping"};
const std::set<std::string> kDynamicProblems = {"lotka_volterra", "pendulum", "reaction_diffusion"};
const std::set<std::string> kRealProblems = {"ccpp", "ccs"};
const std::set<std::string> kStaticSchemes = {"sequential", "alternate", "pd", "ha_only", "fk_ha"};
const std::set<std::string> kDynamicSchemes = {"joint",  "joint_init", "alternate", "alternate_init",
                                               "pd",     "ha_only",    "fk_ha"};
const std::set<std::string> kStaticModels = {"mlp", "gb", "rf"};
const std::set<std::string> kDynamicModels = {"mlp", "cnn"};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(","));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

template <class T>
T parse_value(const std::string& key, const std::string& s) {
  std::istringstream in(s);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("bad value '" + s + "' for '" + key + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  const std::string l = boost::to_lower_copy(s);
  if (l == "true" || l == "yes" || l == "1" || l == "filtered") return true;
  if (l == "false" || l == "no" || l == "0" || l == "unfiltered") return false;
  throw ConfigError("bad boolean '" + s + "' for '" + key + "'");
}

class Section {
 public:
  Section(const pt::ptree& tree, std::string name) : name_(std::move(name)) {
    if (const auto child = tree.get_child_optional(name_)) node_ = &*child;
  }

  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(key);
    if (!node_) return std::nullopt;
    const auto v = node_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return boost::trim_copy(*v);
  }

  template <class T>
  void read(const std::string& key, std::optional<T>& out) {
    if (auto v = raw(key)) out = parse_value<T>(name_ + "." + key, *v);
  }
  template <class T>
  void read(const std::string& key, T& out) {
    if (auto v = raw(key)) out = parse_value<T>(name_ + "." + key, *v);
  }
  void read(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }
  void read(const std::string& key, std::optional<std::string>& out) {
    if (auto v = raw(key)) out = *v;
  }
  void read_list(const std::string& key, std::vector<std::string>& out) {
    if (auto v = raw(key)) out = split_list(*v);
  }

  // Unknown keys are almost always typos; refuse them.
  void finish() const {
    if (!node_) return;
    for (const auto& [key, child] : *node_) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + key + "' in section [" + name_ + "]");
    }
  }

 private:
  std::string name_;
  const pt::ptree* node_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

int scaled_epochs(int n, double scale) { return std::max(1, static_cast<int>(std::lround(n * scale))); }

bool RunConfig::dynamic() const { return kDynamicProblems.count(problem) > 0; }
bool RunConfig::real() const { return kRealProblems.count(problem) > 0; }

std::vector<std::uint64_t> RunConfig::seeds() const {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < replicates; ++i) out.push_back(master_seed + static_cast<std::uint64_t>(i));
  return out;
}

void RunConfig::validate() const {
  if (!kStaticProblems.count(problem) && !dynamic() && !real()) throw ConfigError("unknown problem '" + problem + "'");
  if (real() && data_path.empty()) throw ConfigError("problem '" + problem + "' needs problem.data_path");
  if (real() && split_mode != "int" && split_mode != "ext") throw ConfigError("split_mode must be int or ext");
  if (schemes.empty()) throw ConfigError("no schemes configured");
  if (models.empty()) throw ConfigError("no models configured");
  if (filters.empty()) throw ConfigError("no filter flags configured");
  const auto& known_schemes = dynamic() ? kDynamicSchemes : kStaticSchemes;
  const auto& known_models = dynamic() ? kDynamicModels : kStaticModels;
  for (const auto& s : schemes) {
    if (!known_schemes.count(s)) throw ConfigError("unknown scheme '" + s + "' for problem '" + problem + "'");
    if (s == "fk_ha" && real()) throw ConfigError("fk_ha needs a known true prior");
  }
  for (const auto& m : models) {
    if (!known_models.count(m)) throw ConfigError("unknown model '" + m + "' for problem '" + problem + "'");
  }
  for (int n : n_train) {
    if (n < 1) throw ConfigError("n_train entries must be >= 1");
  }
  if (!n_train.empty() && (dynamic() || real())) throw ConfigError("n_train applies to synthetic static problems only");
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (!(scale > 0.0)) throw ConfigError("desk_scale_factor must be positive");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["problem"] = problem;
  if (!data_path.empty()) j["data_path"] = data_path;
  if (real()) j["split_mode"] = split_mode;
  j["n_train"] = n_train;
  j["schemes"] = schemes;
  j["models"] = models;
  j["filters"] = filters;
  j["master_seed"] = master_seed;
  j["replicates"] = replicates;
  j["desk_scale_factor"] = scale;
  auto put = [](nlohmann::json& dst, const char* k, const auto& v) {
    if (v) dst[k] = *v;
  };
  nlohmann::json m;
  put(m, "hidden_layers", model.hidden_layers);
  put(m, "width", model.width);
  put(m, "trees", model.trees);
  put(m, "max_depth", model.max_depth);
  put(m, "min_samples_split", model.min_samples_split);
  put(m, "shrinkage", model.shrinkage);
  put(m, "hidden_channels", model.hidden_channels);
  put(m, "conv_layers", model.conv_layers);
  m["activation"] = model.activation;
  j["model"] = m;
  nlohmann::json t = nlohmann::json::object();
  put(t, "epochs", training.epochs);
  put(t, "learning_rate", training.learning_rate);
  put(t, "prior_learning_rate", training.prior_learning_rate);
  put(t, "prior_epochs", training.prior_epochs);
  put(t, "alternate_epochs", training.alternate_epochs);
  put(t, "repeats", training.repeats);
  put(t, "init_epochs", training.init_epochs);
  put(t, "pd_block_epochs", training.pd_block_epochs);
  put(t, "pd_final_epochs", training.pd_final_epochs);
  put(t, "batch_size", training.batch_size);
  put(t, "integrator", training.integrator);
  put(t, "substeps", training.substeps);
  put(t, "pd_queries", training.pd_queries);
  put(t, "pd_background", training.pd_background);
  j["training"] = t;
  return j;
}

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const std::set<std::string> sections = {"problem",    "scheme", "model",      "training",
                                          "evaluation", "seeds",  "desk_scale_factor", "runner"};
  RunConfig c;
  for (const auto& [key, child] : tree) {
    if (child.empty()) {
      if (key != "desk_scale_factor") throw ConfigError("unknown top-level key '" + key + "'");
      c.scale = parse_value<double>(key, child.data());
    } else if (!sections.count(key)) {
      throw ConfigError("unknown section [" + key + "]");
    }
  }

  Section problem(tree, "problem");
  problem.read("name", c.problem);
  problem.read("data_path", c.data_path);
  problem.read("split_mode", c.split_mode);
  std::vector<std::string> sizes;
  problem.read_list("n_train", sizes);
  for (const auto& s : sizes) c.n_train.push_back(parse_value<int>("problem.n_train", s));
  problem.finish();

  Section scheme(tree, "scheme");
  scheme.read_list("names", c.schemes);
  scheme.finish();

  Section model(tree, "model");
  model.read_list("kinds", c.models);
  std::vector<std::string> filters;
  model.read_list("filtered", filters);
  if (!filters.empty()) {
    c.filters.clear();
    for (const auto& f : filters) c.filters.push_back(parse_bool("model.filtered", f));
  }
  model.read("hidden_layers", c.model.hidden_layers);
  model.read("width", c.model.width);
  model.read("trees", c.model.trees);
  model.read("max_depth", c.model.max_depth);
  model.read("min_samples_split", c.model.min_samples_split);
  model.read("shrinkage", c.model.shrinkage);
  model.read("hidden_channels", c.model.hidden_channels);
  model.read("conv_layers", c.model.conv_layers);
  model.read("activation", c.model.activation);
  model.finish();

  Section training(tree, "training");
  auto& t = c.training;
  training.read("epochs", t.epochs);
  training.read("learning_rate", t.learning_rate);
  training.read("prior_learning_rate", t.prior_learning_rate);
  training.read("prior_epochs", t.prior_epochs);
  training.read("alternate_epochs", t.alternate_epochs);
  training.read("repeats", t.repeats);
  training.read("init_epochs", t.init_epochs);
  training.read("pd_block_epochs", t.pd_block_epochs);
  training.read("pd_final_epochs", t.pd_final_epochs);
  training.read("batch_size", t.batch_size);
  training.read("integrator", t.integrator);
  training.read("substeps", t.substeps);
  training.read("pd_queries", t.pd_queries);
  training.read("pd_background", t.pd_background);
  training.finish();

  // Test-set metrics are the only evaluation mode; the section is accepted so
  // configs can state it.
  Section evaluation(tree, "evaluation");
  std::string points = "test";
  evaluation.read("points", points);
  if (points != "test") throw ConfigError("evaluation.points supports only 'test'");
  evaluation.finish();

  Section seeds(tree, "seeds");
  seeds.read("master", c.master_seed);
  seeds.read("replicates", c.replicates);
  seeds.finish();

  Section scale(tree, "desk_scale_factor");
  scale.read("value", c.scale);
  scale.finish();

  Section runner(tree, "runner");
  runner.read("workers", c.workers);
  runner.finish();

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  RunConfig c = parse_config(in);
  if (!c.data_path.empty() && std::filesystem::path(c.data_path).is_relative()) {
    c.data_path = (path.parent_path() / c.data_path).lexically_normal().string();
  }
  return c;
}

}  // namespace hybrid::runner
