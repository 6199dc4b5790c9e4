// Acceptance checks. Each run evaluates one criterion (criterion 3 one cell
// at a time) and prints a single line:
//
//   criterion <N>: PASS|FAIL <details>
//
// Exit status is 0 on PASS and 1 on FAIL.

#include "sdre/analysis.hpp"
#include "sdre/density_ratio.hpp"
#include "sdre/environments.hpp"
#include "sdre/experiment.hpp"
#include "sdre/rng.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace {

using namespace sdre;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

Eigen::VectorXd uniform_vector(std::size_t n, Rng& rng, double lo, double hi) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = lo + (hi - lo) * rng.uniform();
  return v;
}

/// The 25 seeded test MDPs shared by criteria 1 and 2.
Environment test_mdp(std::uint64_t k) {
  RandomMdpSpec spec;
  spec.n_states = 3 + k % 8;
  spec.n_actions = 2 + k % 3;
  spec.sparsity = k % 2 ? 0.5 : 1.0;
  spec.seed = 1000 + k;
  return build_random(spec);
}

constexpr std::size_t kTestMdps = 25;

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto start = Clock::now();
  double worst_disc = 0.0, worst_avg = 0.0;
  std::size_t clipped = 0;
  for (std::uint64_t k = 0; k < kTestMdps; ++k) {
    const Environment env = test_mdp(k);
    for (double gamma : {0.8, 0.95}) {
      const ExactSolution sol = tabular_exact_solve(env.mdp, env.behavior, env.target, gamma);
      clipped += sol.clipped;
      const Eigen::VectorXd truth = exact_ratio(env.mdp, env.behavior, env.target, gamma);
      worst_disc = std::max(worst_disc, (sol.w - truth).lpNorm<Eigen::Infinity>());
    }
    const ExactSolution sol = tabular_exact_solve(env.mdp, env.behavior, env.target, 1.0);
    clipped += sol.clipped;
    const Eigen::VectorXd d0 = visitation_distribution(env.mdp, env.behavior, 1.0);
    const Eigen::VectorXd truth = exact_ratio(env.mdp, env.behavior, env.target, 1.0);
    const Eigen::VectorXd w = sol.w / d0.dot(sol.w);
    worst_avg = std::max(worst_avg, (w - truth / d0.dot(truth)).lpNorm<Eigen::Infinity>());
  }
  const double elapsed = seconds_since(start);
  return {worst_disc <= 1e-8 && worst_avg <= 1e-8 && clipped == 0 && elapsed < 10.0,
          "exact ratio recovery on 25 MDPs: max sup error discounted=" + sci(worst_disc) +
              " average=" + sci(worst_avg) + " clipped=" + std::to_string(clipped) +
              " time=" + sci(elapsed) + "s (tol 1e-8, <10s)"};
}

Outcome criterion2() {
  double worst_zero = 0.0;
  double min_perturbed = std::numeric_limits<double>::infinity();
  std::size_t perturbed = 0;
  Rng rng(7);
  for (std::uint64_t k = 0; k < kTestMdps; ++k) {
    const Environment env = test_mdp(k);
    const double h = median_bandwidth(env.embedding).bandwidth;
    for (double gamma : {1.0, 0.8, 0.95}) {
      const Eigen::VectorXd ws = exact_ratio(env.mdp, env.behavior, env.target, gamma);
      const auto pop = population_samples(env.mdp, env.behavior, env.target, gamma);
      for (const KernelSpec& kernel : {KernelSpec::delta(), KernelSpec::rbf(h)}) {
        worst_zero = std::max(worst_zero, rkhs_loss(view(ws), pop, kernel, env.embedding));
      }
    }
    // Four perturbations per MDP, alternating the case and kernel.
    for (int j = 0; j < 4; ++j) {
      const double gamma = j % 2 ? 0.9 : 1.0;
      const Eigen::VectorXd ws = exact_ratio(env.mdp, env.behavior, env.target, gamma);
      const Eigen::VectorXd noise = uniform_vector(static_cast<std::size_t>(ws.size()), rng, -0.1, 0.1);
      const Eigen::VectorXd w = ws.cwiseProduct((1.0 + noise.array()).matrix());
      const auto pop = population_samples(env.mdp, env.behavior, env.target, gamma);
      const KernelSpec kernel = j < 2 ? KernelSpec::delta() : KernelSpec::rbf(h);
      min_perturbed = std::min(min_perturbed, rkhs_loss(view(w), pop, kernel, env.embedding));
      ++perturbed;
    }
  }
  return {worst_zero <= 1e-16 && min_perturbed > 0.0 && perturbed == 100,
          "loss at exact ratio max=" + sci(worst_zero) + " (tol 1e-16); min loss over " +
              std::to_string(perturbed) + " perturbed w=" + sci(min_perturbed) + " (must be > 0)"};
}

Outcome criterion3(double rho, std::size_t horizon) {
  // Same per-cell seeds as `sdre_cli variance-demo` with its default grid and seed 0.
  const std::vector<double> rhos{0.3, 0.4, 0.45, 0.5};
  const std::vector<std::size_t> horizons{5, 10, 20};
  std::uint64_t cell = 0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    for (std::size_t j = 0; j < horizons.size(); ++j) {
      if (std::abs(rhos[i] - rho) < 1e-12 && horizons[j] == horizon) {
        cell = i * horizons.size() + j;
      }
    }
  }
  const auto start = Clock::now();
  const CircleVarianceReport closed = circle_variance_closed_form(rho, horizon);
  const CircleVarianceSample emp =
      circle_variance_empirical(rho, horizon, 1'000'000, derive_seed(0, cell));
  const double elapsed = seconds_since(start);
  std::ostringstream label;
  label << "rho=" << rho << " T=" << horizon << ": ";
  if (rho == 0.5) {
    const double target = 1.0 / (4.0 * static_cast<double>(horizon + 1));
    const double rel = std::abs(emp.var_weighted_reward - target) / target;
    return {emp.var_weight == 0.0 && rel <= 0.03 && elapsed < 30.0,
            label.str() + "var_w=" + sci(emp.var_weight) + " (must be 0), Var[wR]=" +
                sci(emp.var_weighted_reward) + " vs 1/(4(T+1))=" + sci(target) +
                " rel err=" + sci(rel) + " (tol 0.03)"};
  }
  const double rel = std::abs(emp.var_weight - closed.var_weight) / closed.var_weight;
  return {rel <= 0.03 && elapsed < 30.0,
          label.str() + "empirical var_w=" + sci(emp.var_weight) + " closed A^(T+1)-1=" +
              sci(closed.var_weight) + " rel err=" + sci(rel) + " (tol 0.03), 1e6 replicates, " +
              sci(elapsed) + "s"};
}

Outcome criterion4() {
  const std::vector<double> gammas{1.0, 0.5, 0.9, 0.95, 0.99};
  double worst_lemma = 0.0, worst_thm = 0.0, worst_bellman = 0.0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    RandomMdpSpec spec;
    spec.n_states = 3 + k % 5;
    spec.n_actions = 2 + k % 2;
    spec.seed = 5000 + k;
    const Environment env = build_random(spec);
    const double gamma = gammas[k % gammas.size()];
    Rng rng(derive_seed(k, 4));
    const Eigen::VectorXd w = uniform_vector(spec.n_states, rng, 0.1, 3.0);
    const Eigen::VectorXd f = uniform_vector(spec.n_states, rng, -5.0, 5.0);
    const IdentityCheck lemma =
        check_lemma6(view(w), view(f), env.mdp, env.behavior, env.target, gamma);
    const IdentityCheck thm = check_theorem8(view(w), env.mdp, env.behavior, env.target, gamma);
    worst_lemma = std::max(worst_lemma, std::abs(lemma.lhs - lemma.rhs));
    worst_thm = std::max(worst_thm, std::abs(thm.lhs - thm.rhs));

    const ValueSolution v = value_function(env.mdp, env.target, gamma);
    Eigen::VectorXd expected = policy_reward_vector(env.mdp, env.target);
    if (gamma == 1.0) expected.array() -= v.average_reward;
    worst_bellman = std::max(
        worst_bellman,
        (apply_Pi(view(v.values), env.mdp, env.target, gamma) - expected).lpNorm<Eigen::Infinity>());
  }
  return {worst_lemma <= 1e-8 && worst_thm <= 1e-8 && worst_bellman <= 1e-10,
          "50 tuples: max |lhs-rhs| lemma=" + sci(worst_lemma) + " theorem=" + sci(worst_thm) +
              " (tol 1e-8); Bellman residual of Pi V=" + sci(worst_bellman) + " (tol 1e-10)"};
}

Outcome criterion5() {
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::size_t n = 2; n <= 4; ++n) {
    for (std::size_t m = 2; m <= 3; ++m) {
      for (std::size_t horizon = 1; horizon <= 4; ++horizon) {
        for (double gamma : {1.0, 0.9}) {
          RandomMdpSpec spec;
          spec.n_states = n;
          spec.n_actions = m;
          spec.seed = 100 * n + 10 * m + horizon;
          const Environment env = build_random(spec);
          const RaoBlackwellReport r =
              rao_blackwell_enumeration(env.mdp, env.behavior, env.target, gamma, horizon);
          for (double x : {r.trajectory_wise, r.step_wise, r.stationary}) {
            worst = std::max(worst, std::abs(x - r.exact));
          }
          worst = std::max({worst, std::abs(r.trajectory_wise - r.step_wise),
                            std::abs(r.step_wise - r.stationary)});
          ++cases;
        }
      }
    }
  }
  return {worst <= 1e-10, "exact enumeration over " + std::to_string(cases) +
                              " (MDP, T, gamma) cases with <=4 states, T<=4: max disagreement=" +
                              sci(worst) + " (tol 1e-10)"};
}

Outcome criterion6() {
  const auto start = Clock::now();
  ExperimentConfig c;
  c.environment = "circle";
  c.circle = {5, 0.4};
  c.n_trajectories = 100;
  c.replicates = 200;
  c.sweep_var = "T";
  c.sweep_values = {20, 200};
  c.estimators = {"traj_wis", "step_wis", "stationary_sgd"};
  c.ratio.features = FeatureKind::kOneHot;
  const std::vector<SummaryRow> s = run_sweep(c).summary();
  const double elapsed = seconds_since(start);
  auto find = [&](double t, const std::string& e) {
    for (const SummaryRow& row : s) {
      if (row.sweep_value == t && row.estimator == e) return row;
    }
    throw std::runtime_error("missing summary row");
  };
  const SummaryRow st20 = find(20, "stationary_sgd"), st200 = find(200, "stationary_sgd");
  const SummaryRow tw200 = find(200, "traj_wis"), sw200 = find(200, "step_wis");
  const std::size_t failures = st20.failures + st200.failures + tw200.failures + sw200.failures;
  const bool pass = failures == 0 && st200.log10_mse < tw200.log10_mse &&
                    st200.log10_mse < sw200.log10_mse &&
                    st200.log10_mse <= st20.log10_mse + 0.1 && elapsed < 300.0;
  return {pass, "log10 MSE at T=200: stationary_sgd=" + sci(st200.log10_mse) +
                    " traj_wis=" + sci(tw200.log10_mse) + " step_wis=" + sci(sw200.log10_mse) +
                    "; stationary_sgd at T=20=" + sci(st20.log10_mse) + "; failures=" +
                    std::to_string(failures) + " time=" + sci(elapsed) + "s"};
}

double fd_relative_error(RatioModel model, const std::vector<WeightedSample>& batch,
                         const Eigen::MatrixXd& gram) {
  const Eigen::VectorXd analytic = normalized_loss_gradient(model, batch, gram).gradient;
  const Eigen::VectorXd theta = model.theta;
  const double h = 1e-5;
  Eigen::VectorXd numeric(theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    model.theta = theta;
    model.theta(k) += h;
    const double up = normalized_loss_gradient(model, batch, gram).loss;
    model.theta(k) = theta(k) - h;
    const double down = normalized_loss_gradient(model, batch, gram).loss;
    numeric(k) = (up - down) / (2.0 * h);
  }
  return (analytic - numeric).norm() /
         std::max({analytic.norm(), numeric.norm(), std::numeric_limits<double>::min()});
}

Outcome criterion7() {
  double worst_exp = 0.0, worst_lin = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    RandomMdpSpec spec;
    spec.n_states = 4 + k % 5;
    spec.seed = 7000 + k;
    const Environment env = build_random(spec);
    const double gamma = k % 2 ? 0.9 : 1.0;
    const auto data = sample_trajectories(env.mdp, env.behavior, 8, 20, k);
    std::vector<TransitionSample> flat;
    for (const auto& traj : data) flat.insert(flat.end(), traj.steps.begin(), traj.steps.end());
    const auto pool = empirical_samples(flat, env.behavior, env.target);

    // A minibatch of 64 draws; discounted batches include dummy transitions.
    Rng rng(derive_seed(k, 9));
    std::vector<WeightedSample> batch(64);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (gamma < 1.0 && i % 8 == 0) {
        const StateId s0 = data[rng.index(data.size())].steps.front().s;
        batch[i] = {s0, s0, 1.0, 0.0, true};
      } else {
        batch[i] = pool[rng.index(pool.size())];
      }
      batch[i].weight = 1.0 / 64.0;
    }
    const KernelKind kind = k % 4 < 2 ? KernelKind::kDelta : KernelKind::kGaussianRbf;
    const Eigen::MatrixXd gram =
        state_gram(kind, median_bandwidth(env.embedding).bandwidth, env.embedding);

    RatioModel exp_model;
    exp_model.features = FeatureMap::random_fourier(env.embedding, 16, 1.0, k);
    exp_model.theta = uniform_vector(16, rng, -0.5, 0.5);
    exp_model.link = Link::kExponential;
    worst_exp = std::max(worst_exp, fd_relative_error(exp_model, batch, gram));

    RatioModel lin_model = tabular_model(uniform_vector(spec.n_states, rng, 0.3, 2.0));
    worst_lin = std::max(worst_lin, fd_relative_error(lin_model, batch, gram));
  }
  return {worst_exp <= 1e-4 && worst_lin <= 1e-4,
          "20 minibatches: max relative gradient error exponential=" + sci(worst_exp) +
              " linear_clipped=" + sci(worst_lin) + " (central differences h=1e-5, tol 1e-4)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion8() {
  const fs::path dir = SDRE_SCRATCH_DIR;
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = SDRE_CLI_PATH;
  const std::string common =
      " --set n=30 --set T=40 --set replicates=3 --set sweep.var=T --set sweep.values=20,40"
      " --set estimators=traj_wis,step_wis,stationary_sgd,model_based --set ratio.iterations=300"
      " --seed 11";

  struct Command {
    std::string name;
    std::string args;  // {out} is replaced by the run directory
    std::vector<std::string> files;
  };
  const std::vector<Command> commands{
      {"sweep", "sweep" + common + " -o {out}/sweep.csv --summary {out}/summary.csv",
       {"sweep.csv", "summary.csv"}},
      {"variance-demo", "variance-demo --rho 0.4,0.5 --T 5,10 -n 200000 --seed 3 -o {out}/variance.csv",
       {"variance.csv"}},
      {"fit-ratio",
       "fit-ratio --mode sgd" + common + " -o {out}/model.json --trace {out}/trace.csv --values {out}/values.csv",
       {"model.json", "trace.csv", "values.csv"}},
      {"eval", "eval" + common + " --model " + (dir / "fit-ratio_0" / "model.json").string() + " -o {out}/eval.csv", {"eval.csv"}},
  };

  std::vector<std::string> mismatched;
  for (const Command& cmd : commands) {
    for (int run = 0; run < 2; ++run) {
      const fs::path out = dir / (cmd.name + "_" + std::to_string(run));
      fs::create_directories(out);
      std::string args = cmd.args;
      for (std::size_t pos; (pos = args.find("{out}")) != std::string::npos;) {
        args.replace(pos, 5, out.string());
      }
      // Different thread counts on the two runs.
      const std::string threads = run == 0 ? " -j 1" : " -j 4";
      const std::string line = "\"" + cli + "\" " + args + threads + " 2>/dev/null";
      if (std::system(line.c_str()) != 0) {
        return {false, "command failed: " + line};
      }
    }
    for (const std::string& file : cmd.files) {
      const std::string a = slurp(dir / (cmd.name + "_0") / file);
      const std::string b = slurp(dir / (cmd.name + "_1") / file);
      if (a.empty() || a != b) mismatched.push_back(cmd.name + "/" + file);
    }
  }
  std::string detail = "byte comparison of sweep, variance-demo, fit-ratio and eval outputs "
                       "across two runs (-j 1 vs -j 4): ";
  if (mismatched.empty()) return {true, detail + "all identical"};
  for (const auto& m : mismatched) detail += m + " ";
  return {false, detail + "differ"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int criterion = 0;
  double rho = 0.3;
  std::size_t horizon = 5;
  app.add_option("--criterion", criterion, "Criterion number (1-8)")->required()->check(
      CLI::Range(1, 8));
  app.add_option("--rho", rho, "Criterion 3 cell: rho");
  app.add_option("--T", horizon, "Criterion 3 cell: horizon");
  CLI11_PARSE(app, argc, argv);

  Outcome outcome;
  try {
    switch (criterion) {
      case 1: outcome = criterion1(); break;
      case 2: outcome = criterion2(); break;
      case 3: outcome = criterion3(rho, horizon); break;
      case 4: outcome = criterion4(); break;
      case 5: outcome = criterion5(); break;
      case 6: outcome = criterion6(); break;
      case 7: outcome = criterion7(); break;
      case 8: outcome = criterion8(); break;
    }
  } catch (const std::exception& e) {
    outcome = {false, std::string("exception: ") + e.what()};
  }
  std::cout << "criterion " << criterion << ": " << (outcome.pass ? "PASS " : "FAIL ")
            << outcome.detail << std::endl;
  return outcome.pass ? 0 : 1;
}
