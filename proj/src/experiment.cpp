#include "sdre/experiment.hpp"

#include "sdre/mdp_io.hpp"
#include "sdre/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sdre {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(x)) {
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" + text + "'");
  }
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("config key '" + key + "': expected a nonnegative integer, got '" +
                                text + "'");
  }
  return x;
}

std::size_t to_size(const std::string& key, const std::string& text) {
  return static_cast<std::size_t>(to_u64(key, text));
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split_list(text)) out.push_back(to_double(key, item));
  return out;
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return format_exact(x);
}

std::string join_doubles(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + fmt(xs[i]);
  return out;
}

bool is_integer(double x) { return x == std::floor(x); }

std::string optimizer_name(Optimizer o) { return o == Optimizer::kAdam ? "adam" : "sgd"; }

Optimizer parse_optimizer(const std::string& name) {
  if (name == "sgd") return Optimizer::kSgd;
  if (name == "adam") return Optimizer::kAdam;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "one_hot") return FeatureKind::kOneHot;
  if (name == "random_fourier") return FeatureKind::kRandomFourier;
  throw std::invalid_argument("unknown feature map '" + name + "'");
}

}  // namespace

const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> names{
      "traj_is", "traj_wis", "step_is", "step_wis", "stationary_sgd",
      "stationary_exact", "naive", "model_based", "on_policy"};
  return names;
}

void ExperimentConfig::validate() const {
  if (environment != "circle" && environment != "gridworld" && environment != "random") {
    throw std::invalid_argument("environment must be circle, gridworld or random");
  }
  if (sweep_values.empty()) throw std::invalid_argument("sweep grid is empty");
  if (replicates == 0) throw std::invalid_argument("replicates must be at least 1");
  if (estimators.empty()) throw std::invalid_argument("no estimators configured");
  const auto& known = known_estimators();
  std::set<std::string> seen;
  for (const std::string& e : estimators) {
    if (std::find(known.begin(), known.end(), e) == known.end()) {
      throw std::invalid_argument("unknown estimator '" + e + "'");
    }
    if (!seen.insert(e).second) throw std::invalid_argument("estimator '" + e + "' listed twice");
  }
  if (sweep_var != "n" && sweep_var != "T" && sweep_var != "gamma" && sweep_var != "alpha") {
    throw std::invalid_argument("sweep.var must be n, T, gamma or alpha");
  }
  for (double v : sweep_values) {
    if ((sweep_var == "n" || sweep_var == "T") && !(v >= 1.0 && is_integer(v))) {
      throw std::invalid_argument("sweep values for " + sweep_var + " must be positive integers");
    }
    if (sweep_var == "gamma" && !(v > 0.0 && v <= 1.0)) {
      throw std::invalid_argument("gamma sweep values must lie in (0, 1]");
    }
    if (sweep_var == "alpha" && !(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("alpha sweep values must lie in [0, 1]");
    }
  }
  if (n_trajectories == 0 || horizon == 0) {
    throw std::invalid_argument("n and T must be positive");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1]");
  }
  if (threads < 0) throw std::invalid_argument("threads must be nonnegative");
  if (ratio.sgd.batch_size == 0 || ratio.rff_dim == 0) {
    throw std::invalid_argument("ratio.batch_size and ratio.rff_dim must be positive");
  }
  if (!(ratio.sgd.step_size > 0.0) || !(ratio.sgd.decay > 0.0) || !(ratio.sgd.clip_floor > 0.0)) {
    throw std::invalid_argument("ratio.step_size, ratio.decay and ratio.clip_floor must be positive");
  }
  if (ratio.bandwidth < 0.0 || ratio.rff_bandwidth < 0.0) {
    throw std::invalid_argument("bandwidths must be nonnegative (0 selects the median heuristic)");
  }
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "schema_version") {
    if (to_u64(key, v) != static_cast<std::uint64_t>(kConfigSchemaVersion)) {
      throw std::invalid_argument("unsupported schema_version " + v);
    }
  } else if (key == "environment") {
    c.environment = v;
  } else if (key == "circle.n") {
    c.circle.n = to_size(key, v);
  } else if (key == "circle.rho") {
    c.circle.rho = to_double(key, v);
  } else if (key == "gridworld.width") {
    c.gridworld.width = to_size(key, v);
  } else if (key == "gridworld.height") {
    c.gridworld.height = to_size(key, v);
  } else if (key == "gridworld.passenger_rate") {
    c.gridworld.passenger_rate = to_double(key, v);
  } else if (key == "gridworld.pickup_reward") {
    c.gridworld.pickup_reward = to_double(key, v);
  } else if (key == "gridworld.step_penalty") {
    c.gridworld.step_penalty = to_double(key, v);
  } else if (key == "gridworld.greedy_epsilon") {
    c.gridworld.greedy_epsilon = to_double(key, v);
  } else if (key == "gridworld.seed") {
    c.gridworld.seed = to_u64(key, v);
  } else if (key == "random.n_states") {
    c.random.n_states = to_size(key, v);
  } else if (key == "random.n_actions") {
    c.random.n_actions = to_size(key, v);
  } else if (key == "random.sparsity") {
    c.random.sparsity = to_double(key, v);
  } else if (key == "random.seed") {
    c.random.seed = to_u64(key, v);
  } else if (key == "n") {
    c.n_trajectories = to_size(key, v);
  } else if (key == "T") {
    c.horizon = to_size(key, v);
  } else if (key == "gamma") {
    c.gamma = to_double(key, v);
  } else if (key == "alpha") {
    if (v == "none") {
      c.alpha.reset();
    } else {
      c.alpha = to_double(key, v);
    }
  } else if (key == "sweep.var") {
    c.sweep_var = v;
  } else if (key == "sweep.values") {
    c.sweep_values = to_doubles(key, v);
  } else if (key == "estimators") {
    c.estimators = split_list(v);
  } else if (key == "replicates") {
    c.replicates = to_size(key, v);
  } else if (key == "seed") {
    c.base_seed = to_u64(key, v);
  } else if (key == "output") {
    c.output = v;
  } else if (key == "threads") {
    c.threads = static_cast<int>(to_size(key, v));
  } else if (key == "ratio.features") {
    c.ratio.features = parse_feature_kind(v);
  } else if (key == "ratio.rff_dim") {
    c.ratio.rff_dim = to_size(key, v);
  } else if (key == "ratio.rff_bandwidth") {
    c.ratio.rff_bandwidth = to_double(key, v);
  } else if (key == "ratio.kernel") {
    c.ratio.kernel = parse_kernel_kind(v);
  } else if (key == "ratio.bandwidth") {
    c.ratio.bandwidth = to_double(key, v);
  } else if (key == "ratio.link") {
    c.ratio.sgd.link = parse_link(v);
  } else if (key == "ratio.optimizer") {
    c.ratio.sgd.optimizer = parse_optimizer(v);
  } else if (key == "ratio.step_size") {
    c.ratio.sgd.step_size = to_double(key, v);
  } else if (key == "ratio.decay") {
    c.ratio.sgd.decay = to_double(key, v);
  } else if (key == "ratio.batch_size") {
    c.ratio.sgd.batch_size = to_size(key, v);
  } else if (key == "ratio.iterations") {
    c.ratio.sgd.iterations = to_size(key, v);
  } else if (key == "ratio.clip_floor") {
    c.ratio.sgd.clip_floor = to_double(key, v);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (seen.empty() && key != "schema_version") {
      throw std::invalid_argument("config must start with schema_version = " +
                                  std::to_string(kConfigSchemaVersion));
    }
    if (!seen.insert(key).second) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" +
                                  key + "'");
    }
    try {
      apply_setting(config, key, line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (seen.empty()) throw std::invalid_argument("config is empty");
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in);
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "schema_version = " << kConfigSchemaVersion << "\n";
  out << "environment = " << c.environment << "\n";
  out << "circle.n = " << c.circle.n << "\n";
  out << "circle.rho = " << fmt(c.circle.rho) << "\n";
  out << "gridworld.width = " << c.gridworld.width << "\n";
  out << "gridworld.height = " << c.gridworld.height << "\n";
  out << "gridworld.passenger_rate = " << fmt(c.gridworld.passenger_rate) << "\n";
  out << "gridworld.pickup_reward = " << fmt(c.gridworld.pickup_reward) << "\n";
  out << "gridworld.step_penalty = " << fmt(c.gridworld.step_penalty) << "\n";
  out << "gridworld.greedy_epsilon = " << fmt(c.gridworld.greedy_epsilon) << "\n";
  out << "gridworld.seed = " << c.gridworld.seed << "\n";
  out << "random.n_states = " << c.random.n_states << "\n";
  out << "random.n_actions = " << c.random.n_actions << "\n";
  out << "random.sparsity = " << fmt(c.random.sparsity) << "\n";
  out << "random.seed = " << c.random.seed << "\n";
  out << "n = " << c.n_trajectories << "\n";
  out << "T = " << c.horizon << "\n";
  out << "gamma = " << fmt(c.gamma) << "\n";
  out << "alpha = " << (c.alpha ? fmt(*c.alpha) : std::string("none")) << "\n";
  out << "sweep.var = " << c.sweep_var << "\n";
  out << "sweep.values = " << join_doubles(c.sweep_values) << "\n";
  out << "estimators = ";
  for (std::size_t i = 0; i < c.estimators.size(); ++i) out << (i ? "," : "") << c.estimators[i];
  out << "\n";
  out << "replicates = " << c.replicates << "\n";
  out << "seed = " << c.base_seed << "\n";
  out << "output = " << c.output << "\n";
  out << "threads = " << c.threads << "\n";
  out << "ratio.features = " << to_string(c.ratio.features) << "\n";
  out << "ratio.rff_dim = " << c.ratio.rff_dim << "\n";
  out << "ratio.rff_bandwidth = " << fmt(c.ratio.rff_bandwidth) << "\n";
  out << "ratio.kernel = " << to_string(c.ratio.kernel) << "\n";
  out << "ratio.bandwidth = " << fmt(c.ratio.bandwidth) << "\n";
  out << "ratio.link = " << to_string(c.ratio.sgd.link) << "\n";
  out << "ratio.optimizer = " << optimizer_name(c.ratio.sgd.optimizer) << "\n";
  out << "ratio.step_size = " << fmt(c.ratio.sgd.step_size) << "\n";
  out << "ratio.decay = " << fmt(c.ratio.sgd.decay) << "\n";
  out << "ratio.batch_size = " << c.ratio.sgd.batch_size << "\n";
  out << "ratio.iterations = " << c.ratio.sgd.iterations << "\n";
  out << "ratio.clip_floor = " << fmt(c.ratio.sgd.clip_floor) << "\n";
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  // Thread count and output path do not change results.
  ExperimentConfig c = config;
  c.threads = 0;
  c.output.clear();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

ExperimentConfig config_at(const ExperimentConfig& config, double value) {
  ExperimentConfig c = config;
  if (config.sweep_var == "n") {
    c.n_trajectories = static_cast<std::size_t>(value);
  } else if (config.sweep_var == "T") {
    c.horizon = static_cast<std::size_t>(value);
  } else if (config.sweep_var == "gamma") {
    c.gamma = value;
  } else if (config.sweep_var == "alpha") {
    c.alpha = value;
  } else {
    throw std::invalid_argument("unknown sweep variable '" + config.sweep_var + "'");
  }
  return c;
}

Environment build_environment(const ExperimentConfig& config) {
  if (config.environment == "gridworld") {
    GridworldSpec spec = config.gridworld;
    if (config.alpha) spec.alpha = *config.alpha;
    return build_gridworld(spec);
  }
  if (config.environment != "circle" && config.environment != "random") {
    throw std::invalid_argument("unknown environment '" + config.environment + "'");
  }
  Environment env = config.environment == "circle" ? build_circle(config.circle)
                                                   : build_random(config.random);
  if (config.alpha) env.behavior = StochasticPolicy::mixture(env.target, env.behavior, *config.alpha);
  return env;
}

std::uint64_t replicate_seed(const ExperimentConfig& config, std::size_t grid_index,
                             std::size_t replicate) {
  return config.base_seed + static_cast<std::uint64_t>(grid_index) * config.replicates +
         replicate;
}

FitResult fit_ratio(const ExperimentConfig& config, const Environment& env,
                    const std::vector<Trajectory>& data, std::uint64_t seed) {
  const std::size_t n = env.mdp.num_states();
  FeatureMap features = FeatureMap::one_hot(n);
  if (config.ratio.features == FeatureKind::kRandomFourier) {
    const double bw = config.ratio.rff_bandwidth > 0.0
                          ? config.ratio.rff_bandwidth
                          : median_bandwidth(env.embedding, seed).bandwidth;
    features = FeatureMap::random_fourier(env.embedding, config.ratio.rff_dim, bw,
                                          derive_seed(seed, 3));
  }
  KernelSpec kernel{config.ratio.kernel, std::nullopt};
  if (config.ratio.bandwidth > 0.0) kernel.bandwidth = config.ratio.bandwidth;
  SgdHyper hyper = config.ratio.sgd;
  hyper.seed = derive_seed(seed, 2);
  return sgd_fit(data, env.behavior, env.target, config.gamma, features, kernel, env.embedding,
                 hyper);
}

std::vector<EstimateReport> run_estimators(const ExperimentConfig& config, const Environment& env,
                                           const std::vector<Trajectory>& data,
                                           std::uint64_t seed, std::vector<std::string>* errors,
                                           const RatioModel* fitted) {
  const EstimatorInput input{data, env.behavior, env.target, config.gamma};
  const std::uint64_t hash = config_hash(config);
  std::vector<EstimateReport> reports;
  if (errors) errors->clear();
  for (const std::string& name : config.estimators) {
    EstimateReport report;
    std::string error;
    try {
      if (name == "traj_is") {
        report = trajectory_wise(input, Normalization::kUnnormalized);
      } else if (name == "traj_wis") {
        report = trajectory_wise(input, Normalization::kSelfNormalized);
      } else if (name == "step_is") {
        report = step_wise(input, Normalization::kUnnormalized);
      } else if (name == "step_wis") {
        report = step_wise(input, Normalization::kSelfNormalized);
      } else if (name == "stationary_sgd") {
        const RatioModel model = fitted ? *fitted : fit_ratio(config, env, data, seed).model;
        report = stationary_ratio_estimator(input, [&](StateId s) { return model(s); });
      } else if (name == "stationary_exact") {
        const ExactSolution exact =
            tabular_exact_solve(env.mdp, env.behavior, env.target, config.gamma);
        report = stationary_ratio_estimator(input, [&](StateId s) { return exact.w(static_cast<Eigen::Index>(s)); });
      } else if (name == "naive") {
        report = naive_average(input);
      } else if (name == "model_based") {
        report = model_based(input, env.mdp.num_states(), config.horizon);
      } else if (name == "on_policy") {
        report = on_policy_oracle(env.mdp, env.target, config.gamma, config.n_trajectories,
                                  config.horizon, derive_seed(seed, 1));
      } else {
        throw std::invalid_argument("unknown estimator '" + name + "'");
      }
    } catch (const std::exception& e) {
      report = EstimateReport{};
      report.estimate = std::numeric_limits<double>::quiet_NaN();
      error = e.what();
    }
    report.estimator_name = name;
    report.seed = seed;
    report.config_hash = hash;
    reports.push_back(std::move(report));
    if (errors) errors->push_back(std::move(error));
  }
  return reports;
}

std::vector<SummaryRow> SweepResult::summary() const {
  std::vector<SummaryRow> out;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const SweepRow& row : rows) {
    const auto key = std::make_pair(fmt(row.sweep_value), row.estimator);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, out.size()).first;
      out.push_back({row.sweep_var, row.sweep_value, row.estimator, 0, 0, 0.0, 0.0});
    }
    SummaryRow& s = out[it->second];
    s.replicates += 1;
    if (std::isfinite(row.sq_error)) {
      s.mse += row.sq_error;
    } else {
      s.failures += 1;
    }
  }
  for (SummaryRow& s : out) {
    const std::size_t ok = s.replicates - s.failures;
    s.mse = ok ? s.mse / static_cast<double>(ok) : std::numeric_limits<double>::quiet_NaN();
    s.log10_mse = std::log10(s.mse);
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  const std::size_t grid = config.sweep_values.size();
  const std::size_t reps = config.replicates;
  const std::size_t n_est = config.estimators.size();

  std::vector<ExperimentConfig> configs;
  std::vector<Environment> envs;
  std::vector<double> truths;
  for (double value : config.sweep_values) {
    configs.push_back(config_at(config, value));
    envs.push_back(build_environment(configs.back()));
    truths.push_back(finite_horizon_reward(envs.back().mdp, envs.back().target,
                                           configs.back().gamma, configs.back().horizon));
  }

  SweepResult result;
  result.rows.resize(grid * reps * n_est);
  const auto tasks = static_cast<std::ptrdiff_t>(grid * reps);
#ifdef _OPENMP
  const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (std::ptrdiff_t task = 0; task < tasks; ++task) {
    const std::size_t g = static_cast<std::size_t>(task) / reps;
    const std::size_t r = static_cast<std::size_t>(task) % reps;
    const ExperimentConfig& c = configs[g];
    const std::uint64_t seed = replicate_seed(config, g, r);
    std::vector<EstimateReport> reports;
    std::vector<std::string> errors;
    try {
      const std::vector<Trajectory> data =
          sample_trajectories(envs[g].mdp, envs[g].behavior, c.n_trajectories, c.horizon, seed);
      reports = run_estimators(c, envs[g], data, seed, &errors);
    } catch (const std::exception& e) {
      reports.assign(n_est, EstimateReport{});
      errors.assign(n_est, e.what());
      for (auto& rep : reports) rep.estimate = std::numeric_limits<double>::quiet_NaN();
    }
    for (std::size_t e = 0; e < n_est; ++e) {
      SweepRow& row = result.rows[(static_cast<std::size_t>(task)) * n_est + e];
      row.sweep_var = config.sweep_var;
      row.sweep_value = config.sweep_values[g];
      row.estimator = config.estimators[e];
      row.replicate = r;
      row.seed = seed;
      row.estimate = reports[e].estimate;
      row.truth = truths[g];
      const double err = row.estimate - row.truth;
      row.sq_error = err * err;
      row.error = errors[e];
    }
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "sweep_var,sweep_value,estimator,replicate,seed,estimate,truth,sq_error\n";
  for (const SweepRow& row : result.rows) {
    out << row.sweep_var << ',' << fmt(row.sweep_value) << ',' << row.estimator << ','
        << row.replicate << ',' << row.seed << ',' << fmt(row.estimate) << ',' << fmt(row.truth)
        << ',' << fmt(row.sq_error) << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void emit_csv(const SweepResult& result, const std::filesystem::path& path) {
  std::ostringstream out;
  write_sweep_csv(out, result);
  write_text_file(path, out.str());
}

void write_summary_csv(std::ostream& out, const SweepResult& result) {
  out << "sweep_var,sweep_value,estimator,replicates,failures,mse,log10_mse\n";
  for (const SummaryRow& s : result.summary()) {
    out << s.sweep_var << ',' << fmt(s.sweep_value) << ',' << s.estimator << ',' << s.replicates
        << ',' << s.failures << ',' << fmt(s.mse) << ',' << fmt(s.log10_mse) << '\n';
  }
}

void write_reports_csv(std::ostream& out, const std::vector<EstimateReport>& reports,
                       double truth) {
  out << "estimator,normalization,estimate,truth,sq_error,seed,config_hash,diagnostics\n";
  for (const EstimateReport& r : reports) {
    const double err = r.estimate - truth;
    out << r.estimator_name << ',' << to_string(r.normalization) << ',' << fmt(r.estimate) << ','
        << fmt(truth) << ',' << fmt(err * err) << ',' << r.seed << ',' << r.config_hash << ',';
    bool first = true;
    for (const auto& [key, value] : r.diagnostics) {
      out << (first ? "" : ";") << key << '=' << fmt(value);
      first = false;
    }
    out << '\n';
  }
}

std::vector<VarianceDemoRow> run_variance_demo(const std::vector<double>& rhos,
                                               const std::vector<std::size_t>& horizons,
                                               std::size_t replicates, std::uint64_t seed) {
  if (rhos.empty() || horizons.empty()) throw std::invalid_argument("variance demo: empty grid");
  std::vector<VarianceDemoRow> rows;
  std::uint64_t cell = 0;
  for (double rho : rhos) {
    for (std::size_t t : horizons) {
      VarianceDemoRow row;
      row.seed = derive_seed(seed, cell++);
      row.closed = circle_variance_closed_form(rho, t);
      row.empirical = circle_variance_empirical(rho, t, replicates, row.seed);
      rows.push_back(row);
    }
  }
  return rows;
}

void write_variance_csv(std::ostream& out, const std::vector<VarianceDemoRow>& rows) {
  const auto rel = [](double est, double ref) {
    return ref != 0.0 ? std::abs(est - ref) / std::abs(ref) : std::abs(est - ref);
  };
  out << "rho,T,A_rho,B_rho_T,D_rho_T,var_weight_closed,var_weight_empirical,var_wR_closed,"
         "var_wR_empirical,rel_err_weight,rel_err_wR,mean_weight,replicates,seed\n";
  for (const VarianceDemoRow& r : rows) {
    out << fmt(r.closed.rho) << ',' << r.closed.horizon << ',' << fmt(r.closed.a_rho) << ','
        << fmt(r.closed.b_rho_t) << ',' << fmt(r.closed.d_rho_t) << ','
        << fmt(r.closed.var_weight) << ',' << fmt(r.empirical.var_weight) << ','
        << fmt(r.closed.var_weighted_reward) << ',' << fmt(r.empirical.var_weighted_reward) << ','
        << fmt(rel(r.empirical.var_weight, r.closed.var_weight)) << ','
        << fmt(rel(r.empirical.var_weighted_reward, r.closed.var_weighted_reward)) << ','
        << fmt(r.empirical.mean_weight) << ',' << r.empirical.replicates << ',' << r.seed
        << '\n';
  }
}

}  // namespace sdre
