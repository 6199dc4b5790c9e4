// Command-line front end: sweeps, the circle variance demo, ratio fitting and
// one-shot evaluation. Run `sdre_cli --help` for the flags.

#include "sdre/experiment.hpp"
#include "sdre/mdp_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#ifdef _OPENMP
#include <omp.h>
#endif
#include <iostream>
#include <sstream>

namespace {

using namespace sdre;

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> settings;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("-c,--config", flags.config_path, "Experiment config (key = value file)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", flags.settings, "Override a config key, e.g. --set T=50");
  cmd->add_option("-s,--seed", flags.seed, "Override the base seed");
  cmd->add_option("-j,--threads", flags.threads, "OpenMP threads (0 = default)");
}

ExperimentConfig resolve_config(const CommonFlags& flags) {
  ExperimentConfig config = flags.config_path.empty() ? ExperimentConfig{}
                                                      : load_config(flags.config_path);
  for (const std::string& kv : flags.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + kv);
    apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.seed) config.base_seed = *flags.seed;
  if (flags.threads) config.threads = *flags.threads;
  config.validate();
  return config;
}

/// "-" writes to stdout.
void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

std::vector<Trajectory> load_or_sample(const ExperimentConfig& config, const Environment& env,
                                       const std::string& data_path) {
  if (!data_path.empty()) {
    std::vector<Trajectory> data = load_trajectories(data_path);
    if (data.empty()) throw std::runtime_error("data file " + data_path + " has no trajectories");
    return data;
  }
  return sample_trajectories(env.mdp, env.behavior, config.n_trajectories, config.horizon,
                             config.base_seed);
}

int run_sweep_cmd(const CommonFlags& flags, const std::string& out_path,
                  const std::string& summary_path) {
  const ExperimentConfig config = resolve_config(flags);
  const SweepResult result = run_sweep(config);
  const std::string out = out_path.empty() ? config.output : out_path;
  std::ostringstream rows;
  write_sweep_csv(rows, result);
  write_output(out, rows.str());
  if (!summary_path.empty()) {
    std::ostringstream summary;
    write_summary_csv(summary, result);
    write_output(summary_path, summary.str());
  }
  std::size_t failures = 0;
  for (const SweepRow& row : result.rows) {
    if (!row.error.empty()) {
      if (failures++ == 0) std::cerr << "warning: " << row.estimator << ": " << row.error << "\n";
    }
  }
  if (failures) std::cerr << "warning: " << failures << " estimator runs failed (NaN rows)\n";
  return 0;
}

int run_variance_cmd(const std::vector<double>& rhos, const std::vector<std::size_t>& horizons,
                     std::size_t replicates, std::uint64_t seed, const std::string& out) {
  std::ostringstream text;
  write_variance_csv(text, run_variance_demo(rhos, horizons, replicates, seed));
  write_output(out, text.str());
  return 0;
}

int run_fit_cmd(const CommonFlags& flags, const std::string& mode, const std::string& data_path,
                const std::string& model_path, const std::string& trace_path,
                const std::string& values_path) {
  const ExperimentConfig config = resolve_config(flags);
  const Environment env = build_environment(config);
  RatioModel model;
  std::ostringstream trace;
  trace << "iteration,loss\n";
  if (mode == "exact") {
    const ExactSolution exact =
        tabular_exact_solve(env.mdp, env.behavior, env.target, config.gamma,
                            config.ratio.sgd.clip_floor);
    model = exact.model;
    if (exact.clipped) std::cerr << "warning: exact solution clipped at the floor\n";
  } else {
    const std::vector<Trajectory> data = load_or_sample(config, env, data_path);
    const FitResult fit = fit_ratio(config, env, data, config.base_seed);
    model = fit.model;
    for (std::size_t i = 0; i < fit.loss_trace.size(); ++i) {
      trace << i << ',' << format_exact(fit.loss_trace[i]) << '\n';
    }
  }
  write_output(model_path, ratio_model_to_json(model));
  if (!trace_path.empty()) write_output(trace_path, trace.str());
  if (!values_path.empty()) {
    const Eigen::VectorXd w = model.values();
    std::ostringstream values;
    values << "state,w\n";
    for (Eigen::Index s = 0; s < w.size(); ++s) values << s << ',' << format_exact(w(s)) << '\n';
    write_output(values_path, values.str());
  }
  return 0;
}

int run_eval_cmd(const CommonFlags& flags, const std::string& data_path,
                 const std::string& model_path, const std::string& out) {
  const ExperimentConfig config = resolve_config(flags);
  const Environment env = build_environment(config);
  const std::vector<Trajectory> data = load_or_sample(config, env, data_path);
  std::optional<RatioModel> model;
  if (!model_path.empty()) {
    model = load_ratio_model(model_path);
    if (model->features.num_states() != env.mdp.num_states()) {
      throw std::runtime_error("ratio model does not match the environment's state count");
    }
  }
  const std::size_t horizon = data.front().horizon();
  ExperimentConfig effective = config;
  effective.horizon = horizon;
  effective.n_trajectories = data.size();
  std::vector<std::string> errors;
  const std::vector<EstimateReport> reports = run_estimators(
      effective, env, data, config.base_seed, &errors, model ? &*model : nullptr);
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) std::cerr << "warning: " << reports[i].estimator_name << ": " << errors[i] << "\n";
  }
  const double truth = finite_horizon_reward(env.mdp, env.target, config.gamma, horizon);
  std::ostringstream text;
  write_reports_csv(text, reports, truth);
  write_output(out, text.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary density-ratio off-policy evaluation toolkit"};
  app.require_subcommand(1);

  CommonFlags sweep_flags;
  std::string sweep_out, sweep_summary;
  auto* sweep = app.add_subcommand("sweep", "Run an estimator sweep and write per-replicate CSV");
  add_common(sweep, sweep_flags);
  sweep->add_option("-o,--out", sweep_out, "Output CSV ('-' for stdout; default: config output)");
  sweep->add_option("--summary", sweep_summary, "Also write per-point log10-MSE CSV here");

  std::vector<double> rhos{0.3, 0.4, 0.45, 0.5};
  std::vector<std::size_t> horizons{5, 10, 20};
  std::size_t replicates = 1000000;
  std::uint64_t variance_seed = 0;
  std::string variance_out = "-";
  std::optional<int> variance_threads;
  auto* variance = app.add_subcommand("variance-demo",
                                      "Closed-form vs simulated circle weight variances");
  variance->add_option("--rho", rhos, "Behavior probabilities of the right move")->delimiter(',');
  variance->add_option("--T", horizons, "Horizons T (trajectories have T + 1 steps)")
      ->delimiter(',');
  variance->add_option("-n,--replicates", replicates, "Monte Carlo replicates per cell");
  variance->add_option("-s,--seed", variance_seed, "Base seed");
  variance->add_option("-o,--out", variance_out, "Output CSV ('-' for stdout)");
  variance->add_option("-j,--threads", variance_threads, "OpenMP threads (0 = default)");

  CommonFlags fit_flags;
  std::string fit_mode = "sgd", fit_data, fit_model = "ratio_model.json", fit_trace, fit_values;
  auto* fit = app.add_subcommand("fit-ratio", "Fit a density-ratio model and save it as JSON");
  add_common(fit, fit_flags);
  fit->add_option("--mode", fit_mode, "exact (population tabular solve) or sgd")
      ->check(CLI::IsMember({"exact", "sgd"}));
  fit->add_option("--data", fit_data, "Trajectory CSV (default: simulate from the config)");
  fit->add_option("-o,--out", fit_model, "Model JSON path ('-' for stdout)");
  fit->add_option("--trace", fit_trace, "Loss-trace CSV path");
  fit->add_option("--values", fit_values, "Per-state ratio CSV path");

  CommonFlags eval_flags;
  std::string eval_data, eval_model, eval_out = "-";
  auto* eval = app.add_subcommand("eval", "Run the configured estimators on one dataset");
  add_common(eval, eval_flags);
  eval->add_option("--data", eval_data, "Trajectory CSV (default: simulate from the config)");
  eval->add_option("--model", eval_model, "Ratio model JSON for stationary_sgd");
  eval->add_option("-o,--out", eval_out, "Output CSV ('-' for stdout)");

  CommonFlags sim_flags;
  std::string sim_out = "-";
  auto* simulate = app.add_subcommand("simulate", "Write behavior-policy trajectories as CSV");
  add_common(simulate, sim_flags);
  simulate->add_option("-o,--out", sim_out, "Output CSV ('-' for stdout)");

  CommonFlags export_flags;
  std::string export_out = "-";
  auto* export_mdp = app.add_subcommand("export-mdp", "Write the configured MDP and policies");
  add_common(export_mdp, export_flags);
  export_mdp->add_option("-o,--out", export_out, "Output path ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) return run_sweep_cmd(sweep_flags, sweep_out, sweep_summary);
    if (*variance) {
#ifdef _OPENMP
      if (variance_threads && *variance_threads > 0) omp_set_num_threads(*variance_threads);
#endif
      return run_variance_cmd(rhos, horizons, replicates, variance_seed, variance_out);
    }
    if (*fit) return run_fit_cmd(fit_flags, fit_mode, fit_data, fit_model, fit_trace, fit_values);
    if (*eval) return run_eval_cmd(eval_flags, eval_data, eval_model, eval_out);
    if (*simulate) {
      const ExperimentConfig config = resolve_config(sim_flags);
      const Environment env = build_environment(config);
      std::ostringstream text;
      write_trajectories(text, load_or_sample(config, env, ""));
      write_output(sim_out, text.str());
      return 0;
    }
    if (*export_mdp) {
      const ExperimentConfig config = resolve_config(export_flags);
      const Environment env = build_environment(config);
      std::ostringstream text;
      write_mdp(text, env.mdp);
      text << "# behavior\n";
      write_policy(text, env.behavior);
      text << "# target\n";
      write_policy(text, env.target);
      write_output(export_out, text.str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
