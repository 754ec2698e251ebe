#include "hybrid/runner/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "hybrid/core/metrics.hpp"
#include "hybrid/core/random.hpp"
#include "hybrid/dyn/schemes.hpp"
#include "hybrid/nets/train.hpp"
#include "hybrid/problems/dynamic_problems.hpp"
#include "hybrid/problems/real.hpp"
#include "hybrid/problems/static_problems.hpp"
#include "hybrid/schemes/static.hpp"
#include "hybrid/trees/tree.hpp"

namespace hybrid::runner {

namespace {

// Child-seed counters for the streams a replicate consumes.
enum SeedStream : std::uint64_t { kModelSeed = 1, kPriorSeed = 2, kBatchSeed = 3, kPdSeed = 4 };

enum class Family { kFriedman, kLinear, kReal };

Family family_of(const std::string& problem) {
  if (problem == "friedman" || problem == "corr_friedman") return Family::kFriedman;
  if (problem == "ccpp" || problem == "ccs") return Family::kReal;
  return Family::kLinear;
}

bool reports_rmae(const std::string& problem) { return problem == "corr_linear" || problem == "overlapping"; }

void check_finite(const char* name, double v) {
  if (!std::isfinite(v)) throw DivergenceError(std::string("non-finite ") + name, -1);
}

std::unique_ptr<ResidualModel> make_static_residual(const RunConfig& cfg, const Task& task, const IndexSet& known,
                                                    nlohmann::json& snap) {
  const Family fam = family_of(cfg.problem);
  const ModelParams& m = cfg.model;
  IndexSet filter = task.filtered ? known : IndexSet{};
  if (task.model == "mlp") {
    nets::RegressorConfig rc;
    rc.net.hidden_layers = m.hidden_layers.value_or(2);
    rc.net.width = m.width.value_or(fam == Family::kFriedman ? 15 : fam == Family::kLinear ? 10 : 30);
    rc.net.activation = nets::parse_activation(m.activation);
    rc.epochs = scaled_epochs(cfg.training.epochs.value_or(2000), cfg.scale);
    rc.learning_rate = cfg.training.learning_rate.value_or(0.005);
    rc.seed = derive_seed(task.seed, kModelSeed);
    snap["residual"] = {{"kind", "mlp"},       {"hidden_layers", rc.net.hidden_layers}, {"width", rc.net.width},
                        {"epochs", rc.epochs}, {"learning_rate", rc.learning_rate},     {"activation", m.activation}};
    return std::make_unique<nets::MlpRegressor>(rc, filter);
  }
  if (task.model == "gb") {
    trees::BoostConfig bc;
    bc.trees = m.trees.value_or(fam == Family::kFriedman ? 700 : fam == Family::kLinear ? 400 : 300);
    bc.max_depth = m.max_depth.value_or(2);
    bc.min_samples_split = m.min_samples_split.value_or(2);
    bc.shrinkage = m.shrinkage.value_or(0.1);
    snap["residual"] = {{"kind", "gb"},
                        {"trees", bc.trees},
                        {"max_depth", bc.max_depth},
                        {"min_samples_split", bc.min_samples_split},
                        {"shrinkage", bc.shrinkage}};
    return std::make_unique<trees::BoostingRegressor>(bc, filter);
  }
  trees::ForestConfig fc;
  fc.trees = m.trees.value_or(fam == Family::kReal ? 200 : 500);
  fc.max_depth = m.max_depth.value_or(-1);
  fc.min_samples_split = m.min_samples_split.value_or(5);
  fc.seed = derive_seed(task.seed, kModelSeed);
  snap["residual"] = {{"kind", "rf"},
                      {"trees", fc.trees},
                      {"max_depth", fc.max_depth},
                      {"min_samples_split", fc.min_samples_split}};
  return std::make_unique<trees::ForestRegressor>(fc, filter);
}

void run_static(const RunConfig& cfg, const Task& task, ExperimentReport& rep) {
  problems::StaticProblem p;
  if (cfg.real()) {
    p = problems::load_real(cfg.data_path, cfg.problem, problems::parse_real_mode(cfg.split_mode), task.seed);
  } else {
    problems::Sizes sizes = problems::default_sizes(cfg.problem);
    if (task.n_train > 0) sizes.train = task.n_train;
    p = problems::make_static_problem(cfg.problem, task.seed, sizes);
  }
  nlohmann::json& snap = rep.config;
  auto proto = make_static_residual(cfg, task, p.train.known, snap);

  schemes::StaticConfig sc;
  sc.prior.epochs = cfg.training.prior_epochs.value_or(sc.prior.epochs);
  sc.prior.learning_rate = cfg.training.prior_learning_rate.value_or(sc.prior.learning_rate);
  const int alt_default = task.model == "mlp" ? cfg.training.epochs.value_or(2000) : 100;
  sc.alternate_epochs = scaled_epochs(cfg.training.alternate_epochs.value_or(alt_default), cfg.scale);
  sc.repeats = cfg.training.repeats.value_or(sc.repeats);
  snap["prior_fit"] = {{"epochs", sc.prior.epochs}, {"learning_rate", sc.prior.learning_rate}};
  snap["alternate_epochs"] = sc.alternate_epochs;
  snap["repeats"] = sc.repeats;
  snap["data"] = p.meta;

  const ParametricPrior init = p.random_prior(derive_seed(task.seed, kPriorSeed));
  schemes::StaticResult r;
  if (task.scheme == "sequential") {
    r = schemes::sequential_fit(init, *proto, p.train, &p.val, sc);
  } else if (task.scheme == "alternate") {
    r = schemes::alternate_fit(init, *proto, p.train, &p.val, sc);
  } else if (task.scheme == "pd") {
    r = schemes::pd_fit(init, *proto, p.train, &p.val, sc);
  } else if (task.scheme == "ha_only") {
    r = schemes::ha_only_fit(*proto, p.train, &p.val);
  } else {
    r = schemes::fk_ha_fit(p.truth, *proto, p.train, &p.val);
  }

  rep.d_hat = eval_d_hat(r.model, p.test);
  check_finite("d_hat", *rep.d_hat);
  rep.extra["val_loss"] = r.val_loss;
  if (r.model.has_prior()) {
    const ParametricPrior& prior = r.model.prior();
    for (Eigen::Index i = 0; i < prior.theta().size(); ++i) rep.extra["theta" + std::to_string(i)] = prior.theta()(i);
    rep.extra["gamma"] = prior.gamma()(0);
    if (!cfg.real()) {
      rep.dk_hat = eval_dk_hat(prior, p.truth, p.test);
      check_finite("dk_hat", *rep.dk_hat);
      if (reports_rmae(cfg.problem)) rep.rmae = eval_rmae(prior.theta(), p.truth.theta());
    }
  }
}

void run_dynamic(const RunConfig& cfg, const Task& task, ExperimentReport& rep) {
  // The data set is fixed by the master seed; replicates vary the model init.
  const problems::DynamicProblem p = problems::make_dynamic_problem(cfg.problem, cfg.master_seed, cfg.scale);
  const bool rd = cfg.problem == "reaction_diffusion";
  const TrainingParams& t = cfg.training;
  const ModelParams& m = cfg.model;
  nlohmann::json& snap = rep.config;

  nlohmann::json net_spec;
  if (task.model == "cnn") {
    if (!p.train.grid_shape) throw ConfigError("cnn needs a gridded problem");
    net_spec = {{"kind", "convnet"},
                {"rows", p.train.grid_shape->first},
                {"cols", p.train.grid_shape->second},
                {"in_channels", 2},
                {"out_channels", 2},
                {"hidden_channels", m.hidden_channels.value_or(8)},
                {"layers", m.conv_layers.value_or(3)},
                {"activation", m.activation}};
  } else {
    net_spec = {{"kind", "mlp"},
                {"input_dim", p.train.state_dim()},
                {"output_dim", p.train.state_dim()},
                {"hidden_layers", m.hidden_layers.value_or(2)},
                {"width", m.width.value_or(64)},
                {"activation", m.activation}};
  }
  auto net = nets::make_net(net_spec, derive_seed(task.seed, kModelSeed));

  dyn::DynConfig dc;
  dc.node.integrator = p.train_integrator;
  if (t.integrator) dc.node.integrator.method = dyn::parse_method(*t.integrator);
  if (t.substeps) dc.node.integrator.substeps = *t.substeps;
  dc.node.integrator.validate();
  dc.node.batch_size = t.batch_size.value_or(32);
  dc.node.learning_rate = t.learning_rate.value_or(rd ? 1e-4 : 5e-4);
  dc.node.prior_learning_rate = t.prior_learning_rate.value_or(dc.node.learning_rate);
  dc.node.seed = derive_seed(task.seed, kBatchSeed);
  dc.epochs = scaled_epochs(t.epochs.value_or(rd ? 1000 : 500), cfg.scale);
  dc.init_epochs = scaled_epochs(t.init_epochs.value_or(rd ? 1000 : 500), cfg.scale);
  dc.pd_block_epochs = scaled_epochs(t.pd_block_epochs.value_or(rd ? 100 : 50), cfg.scale);
  dc.pd_final_epochs = scaled_epochs(t.pd_final_epochs.value_or(rd ? 1000 : 150), cfg.scale);
  dc.pd_repeats = t.repeats.value_or(9);
  if (t.prior_epochs) dc.pd_prior.epochs = *t.prior_epochs;
  dc.pd_queries = t.pd_queries.value_or(dc.pd_queries);
  dc.pd_background = t.pd_background.value_or(dc.pd_background);
  dc.pd_seed = derive_seed(task.seed, kPdSeed);
  snap["network"] = net_spec;
  snap["integrator"] = {{"method", dyn::to_string(dc.node.integrator.method)},
                        {"dt", dc.node.integrator.dt},
                        {"substeps", dc.node.integrator.substeps}};
  snap["training"] = {{"batch_size", dc.node.batch_size},
                      {"learning_rate", dc.node.learning_rate},
                      {"prior_learning_rate", dc.node.prior_learning_rate},
                      {"epochs", dc.epochs},
                      {"init_epochs", dc.init_epochs},
                      {"pd_block_epochs", dc.pd_block_epochs},
                      {"pd_repeats", dc.pd_repeats},
                      {"pd_final_epochs", dc.pd_final_epochs},
                      {"pd_prior_epochs", dc.pd_prior.epochs},
                      {"pd_queries", dc.pd_queries},
                      {"pd_background", dc.pd_background}};
  snap["data"] = p.meta;
  snap["windows"] = {{"length", p.window}, {"stride", p.stride}};

  // Reaction-diffusion coefficients are O(1e-3); a unit-normal draw would
  // start far outside the stable range of the explicit integrator.
  Rng rng(derive_seed(task.seed, kPriorSeed));
  Vector theta(p.truth.theta().size());
  if (rd) {
    std::uniform_real_distribution<double> u(0.0, 0.01);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = u(rng);
  } else {
    std::normal_distribution<double> g(0.0, 1.0);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = g(rng);
  }
  const ParametricPrior init(p.truth.form_ptr(), theta);
  snap["prior_init"] = std::vector<double>(theta.data(), theta.data() + theta.size());

  const WindowSet windows = extract_windows(p.train, p.window, p.stride);
  dyn::DynResult r;
  if (task.scheme == "ha_only") {
    r = dyn::fit_node(dyn::HybridDynamics(std::nullopt, std::move(net)), windows, &p.val, dc, false, true, dc.epochs);
  } else if (task.scheme == "fk_ha") {
    r = dyn::fit_node(dyn::HybridDynamics(p.truth, std::move(net)), windows, &p.val, dc, false, true, dc.epochs);
  } else if (task.scheme == "joint" || task.scheme == "joint_init") {
    dyn::HybridDynamics model(init, std::move(net));
    if (task.scheme == "joint_init") {
      dyn::DynResult warm = dyn::fit_node(dyn::HybridDynamics(init, nullptr), windows, &p.val, dc, true, false,
                                          dc.init_epochs);
      model.set_prior(warm.model.prior());
    }
    r = dyn::joint_fit(std::move(model), windows, &p.val, dc);
  } else if (task.scheme == "alternate" || task.scheme == "alternate_init") {
    r = dyn::alternate_fit_dyn(dyn::HybridDynamics(init, std::move(net)), windows, &p.val, dc,
                               task.scheme == "alternate_init");
  } else {
    r = dyn::pd_fit_dyn(dyn::HybridDynamics(init, std::move(net)), windows, &p.val, dc);
  }

  const dyn::TrajMse test = dyn::eval_traj_mse(r.model, p.test, dc.node.integrator);
  rep.d_hat = test.mse;
  rep.log_d_hat = test.log_mse;
  check_finite("log_d_hat", test.log_mse);
  rep.extra["val_loss"] = r.val_loss;
  if (r.model.has_prior()) {
    const ParametricPrior& prior = r.model.prior();
    for (Eigen::Index i = 0; i < prior.theta().size(); ++i) rep.extra["theta" + std::to_string(i)] = prior.theta()(i);
    rep.dk_hat = dyn::eval_dk_hat(prior, p.truth, p.test);
    check_finite("dk_hat", *rep.dk_hat);
  }
}

}  // namespace

int train_size(const RunConfig& cfg, const Task& task) {
  if (task.n_train > 0) return task.n_train;
  if (cfg.dynamic()) return problems::train_trajectory_count(cfg.problem, cfg.scale);
  if (cfg.real()) return 100;
  return problems::default_sizes(cfg.problem).train;
}

std::vector<Task> expand_tasks(const RunConfig& cfg) {
  std::vector<Task> out;
  const std::vector<int> sizes = cfg.n_train.empty() ? std::vector<int>{0} : cfg.n_train;
  for (std::uint64_t seed : cfg.seeds()) {
    for (int n : sizes) {
      for (const auto& scheme : cfg.schemes) {
        for (const auto& model : cfg.models) {
          for (bool filtered : cfg.filters) {
            if (filtered && (cfg.dynamic() || scheme == "pd")) continue;
            out.push_back({seed, n, scheme, model, filtered});
          }
        }
      }
    }
  }
  return out;
}

ExperimentReport run_task(const RunConfig& cfg, const Task& task) {
  ExperimentReport rep;
  rep.problem = cfg.problem;
  rep.scheme = task.scheme;
  rep.model = task.model;
  rep.filtered = task.filtered;
  rep.n_train = train_size(cfg, task);
  rep.seed = task.seed;
  rep.config["desk_scale_factor"] = cfg.scale;
  if (cfg.real()) rep.config["split_mode"] = cfg.split_mode;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (cfg.dynamic()) {
      run_dynamic(cfg, task, rep);
    } else {
      run_static(cfg, task, rep);
    }
  } catch (const std::exception& e) {
    rep.error = e.what();
    rep.d_hat.reset();
    rep.dk_hat.reset();
    rep.rmae.reset();
    rep.log_d_hat.reset();
  }
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::vector<ExperimentReport> run_experiment(const RunConfig& cfg, std::ostream* jsonl, const Progress& progress) {
  cfg.validate();
  const std::vector<Task> tasks = expand_tasks(cfg);
  std::vector<std::optional<ExperimentReport>> slots(tasks.size());
  std::mutex mu;
  std::size_t flushed = 0;
  std::size_t done = 0;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      ExperimentReport rep = run_task(cfg, tasks[i]);
      std::lock_guard<std::mutex> lock(mu);
      slots[i] = std::move(rep);
      ++done;
      if (progress) progress(*slots[i], done, tasks.size());
      while (flushed < slots.size() && slots[flushed]) {
        if (jsonl) {
          write_jsonl(*jsonl, *slots[flushed]);
          jsonl->flush();
        }
        ++flushed;
      }
    }
  };
  const int n_threads = std::min<int>(cfg.workers, static_cast<int>(std::max<std::size_t>(1, tasks.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<ExperimentReport> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace hybrid::runner
