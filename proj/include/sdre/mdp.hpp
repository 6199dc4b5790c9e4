#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdre {

using StateId = std::size_t;
using ActionId = std::size_t;

/// Raised when a chain needed for an average-reward quantity is reducible or
/// periodic.
class NonErgodicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite MDP with dense transition tensor T(s'|s,a), reward table r(s,a) and
/// initial distribution d0. Immutable after construction.
class TabularMdp {
 public:
  /// `transition` is laid out as [(s * n_actions + a) * n_states + s'];
  /// `reward` as [s * n_actions + a]. Throws std::invalid_argument when any
  /// row is not a probability vector within 1e-12.
  TabularMdp(std::size_t n_states, std::size_t n_actions, std::vector<double> transition,
             std::vector<double> reward, std::vector<double> initial);

  std::size_t num_states() const { return n_states_; }
  std::size_t num_actions() const { return n_actions_; }

  double transition(StateId s, ActionId a, StateId next) const {
    return transition_[(s * n_actions_ + a) * n_states_ + next];
  }
  std::span<const double> transition_row(StateId s, ActionId a) const {
    return {transition_.data() + (s * n_actions_ + a) * n_states_, n_states_};
  }
  double reward(StateId s, ActionId a) const { return reward_[s * n_actions_ + a]; }
  std::span<const double> initial_distribution() const { return initial_; }

  const std::vector<double>& transition_data() const { return transition_; }
  const std::vector<double>& reward_data() const { return reward_; }

  Eigen::VectorXd initial_vector() const;

  /// Same MDP with states relabeled: new state `perm[s]` plays the role of old `s`.
  TabularMdp permuted(std::span<const std::size_t> perm) const;

  /// Same dynamics with rewards replaced.
  TabularMdp with_rewards(std::vector<double> reward) const;

  bool operator==(const TabularMdp&) const = default;

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<double> transition_;
  std::vector<double> reward_;
  std::vector<double> initial_;
};

/// State-conditional action distribution pi(a|s).
class StochasticPolicy {
 public:
  StochasticPolicy(std::size_t n_states, std::size_t n_actions, std::vector<double> probs);

  static StochasticPolicy uniform(std::size_t n_states, std::size_t n_actions);

  /// (1 - alpha) * base + alpha * other.
  static StochasticPolicy mixture(const StochasticPolicy& base, const StochasticPolicy& other,
                                  double alpha);

  std::size_t num_states() const { return n_states_; }
  std::size_t num_actions() const { return n_actions_; }
  double prob(StateId s, ActionId a) const { return probs_[s * n_actions_ + a]; }
  std::span<const double> row(StateId s) const {
    return {probs_.data() + s * n_actions_, n_actions_};
  }
  const std::vector<double>& data() const { return probs_; }

  StochasticPolicy permuted(std::span<const std::size_t> perm) const;

  bool operator==(const StochasticPolicy&) const = default;

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<double> probs_;
};

struct TransitionSample {
  StateId s = 0;
  ActionId a = 0;
  StateId s_next = 0;
  double r = 0.0;
  std::size_t t = 0;

  bool operator==(const TransitionSample&) const = default;
};

struct Trajectory {
  std::vector<TransitionSample> steps;

  std::size_t horizon() const { return steps.size(); }
  bool operator==(const Trajectory&) const = default;
};

/// Throws std::invalid_argument unless the policy has the MDP's shape.
void check_compatible(const TabularMdp& mdp, const StochasticPolicy& policy);

/// Roll out `horizon` steps from s0 ~ d0. Identical seeds give identical
/// trajectories; no state is shared between calls.
Trajectory sample_trajectory(const TabularMdp& mdp, const StochasticPolicy& policy,
                             std::size_t horizon, std::uint64_t seed);

/// `count` trajectories with per-trajectory seeds derived from `seed`.
std::vector<Trajectory> sample_trajectories(const TabularMdp& mdp,
                                            const StochasticPolicy& policy, std::size_t count,
                                            std::size_t horizon, std::uint64_t seed);

/// P_pi(s, s') = sum_a T(s'|s,a) pi(a|s), row-stochastic.
Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp, const StochasticPolicy& policy);

/// r_pi(s) = sum_a pi(a|s) r(s,a).
Eigen::VectorXd policy_reward_vector(const TabularMdp& mdp, const StochasticPolicy& policy);

struct ChainStructure {
  bool irreducible = false;
  std::size_t period = 0;  ///< 0 when not irreducible

  bool ergodic() const { return irreducible && period == 1; }
};

/// Strong connectivity of the support graph plus the period of state 0
/// (gcd of level(u) + 1 - level(v) over support edges of a BFS tree).
ChainStructure analyze_chain(const Eigen::MatrixXd& transition);

inline constexpr std::size_t kDenseStationaryLimit = 2000;

/// Stationary distribution d = d P. Dense linear solve up to
/// kDenseStationaryLimit states, power iteration above. Throws
/// NonErgodicError for reducible or periodic chains and std::runtime_error
/// if the residual ||d P - d||_inf exceeds `tol`.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition, double tol = 1e-12);

/// d = (1 - gamma) d0^T (I - gamma P)^{-1}, gamma in (0, 1).
Eigen::VectorXd discounted_visitation(const Eigen::MatrixXd& transition,
                                      const Eigen::VectorXd& initial, double gamma);

/// Normalized state visitation of `policy`: stationary for gamma == 1,
/// discounted otherwise.
Eigen::VectorXd visitation_distribution(const TabularMdp& mdp, const StochasticPolicy& policy,
                                        double gamma);

struct ValueSolution {
  Eigen::VectorXd values;
  /// R_pi. For gamma < 1 this is (1 - gamma) d0^T V.
  double average_reward = 0.0;
};

/// Discounted (gamma < 1): V = (I - gamma P)^{-1} r_pi.
/// Average (gamma == 1): (V, R_pi) solving V - P V = r_pi - R_pi with
/// E_{d_pi}[V] = 0.
ValueSolution value_function(const TabularMdp& mdp, const StochasticPolicy& policy, double gamma);

/// R_pi = sum_{s,a} d_pi(s) pi(a|s) r(s,a).
double expected_reward_exact(const TabularMdp& mdp, const StochasticPolicy& policy, double gamma);

/// Distribution of s_t for t = 0..horizon-1 under `policy`, one column per t.
Eigen::MatrixXd state_marginals(const TabularMdp& mdp, const StochasticPolicy& policy,
                                std::size_t horizon);

/// Exact R^T_pi = sum_{t<T} gamma_t E[r_t] with gamma_t = gamma^t / sum_{t'<T} gamma^t'.
double finite_horizon_reward(const TabularMdp& mdp, const StochasticPolicy& policy, double gamma,
                             std::size_t horizon);

/// gamma_t for t = 0..horizon-1.
std::vector<double> discount_weights(double gamma, std::size_t horizon);

}  // namespace sdre
