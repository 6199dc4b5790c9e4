#pragma once

#include "sdre/mdp.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace sdre {

enum class Normalization { kUnnormalized, kSelfNormalized };

std::string to_string(Normalization n);

/// Behavior-policy trajectories plus the two policies. All trajectories share
/// one horizon and every logged (s, a) has positive behavior probability.
struct EstimatorInput {
  std::vector<Trajectory> trajectories;
  StochasticPolicy behavior;
  StochasticPolicy target;
  double gamma = 1.0;

  /// Throws std::invalid_argument when the invariants above do not hold.
  void validate() const;
  std::size_t horizon() const;
};

struct EstimateReport {
  std::string estimator_name;
  double estimate = 0.0;
  Normalization normalization = Normalization::kSelfNormalized;
  /// e.g. "ess", "max_weight", "unvisited_pairs".
  std::map<std::string, double> diagnostics;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

/// Single-step ratio pi(a|s) / pi0(a|s).
double policy_ratio(const StochasticPolicy& target, const StochasticPolicy& behavior, StateId s,
                    ActionId a);

/// log w_{0:t} for every prefix of a trajectory (entry t covers steps 0..t).
std::vector<double> log_prefix_weights(const Trajectory& traj, const StochasticPolicy& target,
                                       const StochasticPolicy& behavior);

/// Effective sample size (sum w)^2 / sum w^2.
double effective_sample_size(std::span<const double> weights);

/// Whole-trajectory weight w_{0:T} on each trajectory's gamma-normalized
/// return. Z = m (IS) or sum_i w^i (WIS).
EstimateReport trajectory_wise(const EstimatorInput& input, Normalization normalization);

/// Prefix weight w_{0:t} on r_t. Z_t = m or sum_i w^i_{0:t}, separately for
/// every t (not one global normalizer).
EstimateReport step_wise(const EstimatorInput& input, Normalization normalization);

/// Self-normalized estimator over all (i, t) jointly with weights
/// gamma^t w(s_t) beta(a_t|s_t). `ratio(s)` must be finite and nonnegative
/// on every logged state.
EstimateReport stationary_ratio_estimator(const EstimatorInput& input,
                                          const std::function<double(StateId)>& ratio);

/// Gamma-weighted average reward of the behavior data, no correction.
EstimateReport naive_average(const EstimatorInput& input);

/// Count-based model of T and r from the logged transitions (unvisited (s, a)
/// fall back to a uniform next state and zero reward; d0 is the empirical
/// distribution of s_0), then the exact finite-horizon value of the target
/// policy on that model.
EstimateReport model_based(const EstimatorInput& input, std::size_t n_states,
                           std::size_t horizon_for_eval);

/// Monte Carlo average of R^T over fresh target-policy trajectories.
EstimateReport on_policy_oracle(const TabularMdp& mdp, const StochasticPolicy& target,
                                double gamma, std::size_t n, std::size_t horizon,
                                std::uint64_t seed);

}  // namespace sdre
