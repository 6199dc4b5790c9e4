#include "sdre/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sdre {

std::string to_string(Normalization n) {
  return n == Normalization::kUnnormalized ? "unnormalized" : "self_normalized";
}

void EstimatorInput::validate() const {
  if (trajectories.empty()) throw std::invalid_argument("EstimatorInput: no trajectories");
  if (behavior.num_states() != target.num_states() ||
      behavior.num_actions() != target.num_actions()) {
    throw std::invalid_argument("EstimatorInput: behavior and target shapes differ");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("EstimatorInput: gamma must lie in (0, 1]");
  }
  const std::size_t horizon = trajectories.front().horizon();
  if (horizon == 0) throw std::invalid_argument("EstimatorInput: empty trajectory");
  for (const Trajectory& traj : trajectories) {
    if (traj.horizon() != horizon) {
      throw std::invalid_argument("EstimatorInput: trajectories have different horizons");
    }
    for (const TransitionSample& step : traj.steps) {
      if (step.s >= behavior.num_states() || step.s_next >= behavior.num_states() ||
          step.a >= behavior.num_actions()) {
        throw std::invalid_argument("EstimatorInput: sample index out of range");
      }
      if (!(behavior.prob(step.s, step.a) > 0.0)) {
        throw std::invalid_argument("EstimatorInput: logged action has zero behavior probability");
      }
    }
  }
}

std::size_t EstimatorInput::horizon() const {
  return trajectories.empty() ? 0 : trajectories.front().horizon();
}

double policy_ratio(const StochasticPolicy& target, const StochasticPolicy& behavior, StateId s,
                    ActionId a) {
  const double b = behavior.prob(s, a);
  if (!(b > 0.0)) throw std::domain_error("policy_ratio: zero behavior probability");
  return target.prob(s, a) / b;
}

std::vector<double> log_prefix_weights(const Trajectory& traj, const StochasticPolicy& target,
                                       const StochasticPolicy& behavior) {
  std::vector<double> out(traj.horizon());
  double acc = 0.0;
  for (std::size_t t = 0; t < traj.horizon(); ++t) {
    const TransitionSample& step = traj.steps[t];
    acc += std::log(target.prob(step.s, step.a)) - std::log(behavior.prob(step.s, step.a));
    out[t] = acc;
  }
  return out;
}

double effective_sample_size(std::span<const double> weights) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double w : weights) {
    sum += w;
    sum_sq += w * w;
  }
  return sum_sq > 0.0 ? sum * sum / sum_sq : 0.0;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// exp(log_w - max), with the shift returned through `shift`.
std::vector<double> shifted_exp(std::span<const double> log_w, double& shift) {
  shift = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> out(log_w.size(), 0.0);
  if (shift == kNegInf) return out;
  for (std::size_t i = 0; i < log_w.size(); ++i) out[i] = std::exp(log_w[i] - shift);
  return out;
}

double max_normalized(std::span<const double> w) {
  double total = 0.0;
  double best = 0.0;
  for (double x : w) {
    total += x;
    best = std::max(best, x);
  }
  return total > 0.0 ? best / total : 0.0;
}

void require_finite(const EstimateReport& report) {
  if (!std::isfinite(report.estimate)) {
    throw std::overflow_error(report.estimator_name + ": estimate is not finite");
  }
}

}  // namespace

EstimateReport trajectory_wise(const EstimatorInput& input, Normalization normalization) {
  input.validate();
  const std::size_t m = input.trajectories.size();
  const std::vector<double> gt = discount_weights(input.gamma, input.horizon());

  std::vector<double> log_w(m);
  std::vector<double> returns(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const Trajectory& traj = input.trajectories[i];
    log_w[i] = log_prefix_weights(traj, input.target, input.behavior).back();
    for (std::size_t t = 0; t < traj.horizon(); ++t) returns[i] += gt[t] * traj.steps[t].r;
  }

  double shift = 0.0;
  const std::vector<double> w = shifted_exp(log_w, shift);
  if (shift == kNegInf && normalization == Normalization::kSelfNormalized) {
    throw std::domain_error("trajectory_wise WIS: every trajectory weight is zero");
  }

  EstimateReport report;
  report.normalization = normalization;
  double numerator = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    numerator += w[i] * returns[i];
    total += w[i];
  }
  if (normalization == Normalization::kSelfNormalized) {
    report.estimator_name = "traj_wis";
    report.estimate = numerator / total;
  } else {
    report.estimator_name = "traj_is";
    report.estimate = shift == kNegInf ? 0.0 : std::exp(shift) * numerator / static_cast<double>(m);
  }
  report.diagnostics["ess"] = effective_sample_size(w);
  report.diagnostics["max_weight"] = max_normalized(w);
  report.diagnostics["log_max_weight"] = shift;
  require_finite(report);
  return report;
}

EstimateReport step_wise(const EstimatorInput& input, Normalization normalization) {
  input.validate();
  const std::size_t m = input.trajectories.size();
  const std::size_t horizon = input.horizon();
  const std::vector<double> gt = discount_weights(input.gamma, horizon);

  std::vector<std::vector<double>> log_w(m);
  for (std::size_t i = 0; i < m; ++i) {
    log_w[i] = log_prefix_weights(input.trajectories[i], input.target, input.behavior);
  }

  EstimateReport report;
  report.normalization = normalization;
  report.estimator_name =
      normalization == Normalization::kSelfNormalized ? "step_wis" : "step_is";
  std::vector<double> column(m);
  std::vector<double> last;
  double estimate = 0.0;
  double min_ess = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < m; ++i) column[i] = log_w[i][t];
    double shift = 0.0;
    const std::vector<double> w = shifted_exp(column, shift);
    double numerator = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      numerator += w[i] * input.trajectories[i].steps[t].r;
      total += w[i];
    }
    if (normalization == Normalization::kSelfNormalized) {
      if (shift == kNegInf) {
        throw std::domain_error("step_wise WIS: every prefix weight is zero at some step");
      }
      estimate += gt[t] * numerator / total;
    } else if (shift != kNegInf) {
      estimate += gt[t] * std::exp(shift) * numerator / static_cast<double>(m);
    }
    min_ess = std::min(min_ess, effective_sample_size(w));
    if (t + 1 == horizon) last = w;
  }
  report.estimate = estimate;
  report.diagnostics["ess"] = effective_sample_size(last);
  report.diagnostics["min_ess"] = min_ess;
  report.diagnostics["max_weight"] = max_normalized(last);
  require_finite(report);
  return report;
}

EstimateReport stationary_ratio_estimator(const EstimatorInput& input,
                                          const std::function<double(StateId)>& ratio) {
  input.validate();
  std::vector<double> weights;
  std::vector<double> rewards;
  weights.reserve(input.trajectories.size() * input.horizon());
  rewards.reserve(weights.capacity());
  for (const Trajectory& traj : input.trajectories) {
    double g = 1.0;
    for (const TransitionSample& step : traj.steps) {
      const double w = ratio(step.s);
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw std::domain_error("stationary_ratio_estimator: ratio must be finite and >= 0");
      }
      weights.push_back(g * w * policy_ratio(input.target, input.behavior, step.s, step.a));
      rewards.push_back(step.r);
      g *= input.gamma;
    }
  }
  double numerator = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    numerator += weights[k] * rewards[k];
    total += weights[k];
  }
  if (!(total > 0.0)) throw std::domain_error("stationary_ratio_estimator: all weights are zero");

  EstimateReport report;
  report.estimator_name = "stationary_ratio";
  report.normalization = Normalization::kSelfNormalized;
  report.estimate = numerator / total;
  report.diagnostics["ess"] = effective_sample_size(weights);
  report.diagnostics["max_weight"] = max_normalized(weights);
  require_finite(report);
  return report;
}

EstimateReport naive_average(const EstimatorInput& input) {
  input.validate();
  const std::vector<double> gt = discount_weights(input.gamma, input.horizon());
  double total = 0.0;
  for (const Trajectory& traj : input.trajectories) {
    for (std::size_t t = 0; t < traj.horizon(); ++t) total += gt[t] * traj.steps[t].r;
  }
  EstimateReport report;
  report.estimator_name = "naive";
  report.normalization = Normalization::kUnnormalized;
  report.estimate = total / static_cast<double>(input.trajectories.size());
  return report;
}

EstimateReport model_based(const EstimatorInput& input, std::size_t n_states,
                           std::size_t horizon_for_eval) {
  input.validate();
  if (n_states != input.behavior.num_states()) {
    throw std::invalid_argument("model_based: state count does not match the policies");
  }
  const std::size_t n = n_states;
  const std::size_t m = input.behavior.num_actions();
  std::vector<double> counts(n * m * n, 0.0);
  std::vector<double> visits(n * m, 0.0);
  std::vector<double> reward_sum(n * m, 0.0);
  std::vector<double> d0(n, 0.0);
  for (const Trajectory& traj : input.trajectories) {
    d0[traj.steps.front().s] += 1.0;
    for (const TransitionSample& step : traj.steps) {
      const std::size_t pair = step.s * m + step.a;
      counts[pair * n + step.s_next] += 1.0;
      visits[pair] += 1.0;
      reward_sum[pair] += step.r;
    }
  }
  for (auto& x : d0) x /= static_cast<double>(input.trajectories.size());

  std::vector<double> t(n * m * n);
  std::vector<double> r(n * m, 0.0);
  std::size_t unvisited = 0;
  for (std::size_t pair = 0; pair < n * m; ++pair) {
    if (visits[pair] == 0.0) {
      ++unvisited;
      std::fill_n(t.begin() + static_cast<std::ptrdiff_t>(pair * n), n,
                  1.0 / static_cast<double>(n));
      continue;
    }
    for (StateId s2 = 0; s2 < n; ++s2) t[pair * n + s2] = counts[pair * n + s2] / visits[pair];
    r[pair] = reward_sum[pair] / visits[pair];
  }
  const TabularMdp model(n, m, std::move(t), std::move(r), std::move(d0));

  EstimateReport report;
  report.estimator_name = "model_based";
  report.normalization = Normalization::kUnnormalized;
  report.estimate = finite_horizon_reward(model, input.target, input.gamma, horizon_for_eval);
  report.diagnostics["unvisited_pairs"] = static_cast<double>(unvisited);
  require_finite(report);
  return report;
}

EstimateReport on_policy_oracle(const TabularMdp& mdp, const StochasticPolicy& target,
                                double gamma, std::size_t n, std::size_t horizon,
                                std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("on_policy_oracle: need at least one trajectory");
  const std::vector<double> gt = discount_weights(gamma, horizon);
  const std::vector<Trajectory> trajs = sample_trajectories(mdp, target, n, horizon, seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const Trajectory& traj : trajs) {
    double ret = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) ret += gt[t] * traj.steps[t].r;
    sum += ret;
    sum_sq += ret * ret;
  }
  const double mean = sum / static_cast<double>(n);
  EstimateReport report;
  report.estimator_name = "on_policy";
  report.normalization = Normalization::kUnnormalized;
  report.estimate = mean;
  report.seed = seed;
  if (n > 1) {
    const double var = std::max(0.0, (sum_sq - sum * mean) / static_cast<double>(n - 1));
    report.diagnostics["std_error"] = std::sqrt(var / static_cast<double>(n));
  }
  return report;
}

}  // namespace sdre
