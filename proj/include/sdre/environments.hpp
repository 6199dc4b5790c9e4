#pragma once

#include "sdre/mdp.hpp"

#include <cstdint>

namespace sdre {

/// An MDP together with the behavior policy that logs data and the target
/// policy being evaluated. `embedding` gives each state coordinates in R^k
/// (one row per state) for kernels and random features.
struct Environment {
  TabularMdp mdp;
  StochasticPolicy behavior;
  StochasticPolicy target;
  Eigen::MatrixXd embedding;
};

/// n states on a circle; action 0 (L) moves to s-1 mod n, action 1 (R) to
/// s+1 mod n; reward 1[a == R]; uniform d0. Behavior picks R with
/// probability rho, target with probability 1 - rho.
struct CircleSpec {
  std::size_t n = 5;
  double rho = 0.4;
};

inline constexpr ActionId kCircleLeft = 0;
inline constexpr ActionId kCircleRight = 1;

/// Throws std::invalid_argument for even n or rho outside (0, 1).
Environment build_circle(const CircleSpec& spec);

/// Scaled-down infinite-horizon taxi. A taxi drives on a width x height grid
/// with actions N, E, S, W and `interact`. A passenger waits at the pickup
/// corner (0, 0); the drop-off corner is (width-1, height-1). State is
/// (cell, waiting flag, carrying flag), so there are 4 * width * height states.
/// Picking up a waiting passenger or dropping off a carried one pays
/// `pickup_reward`; every other step pays `step_penalty`. After each step the
/// waiting flag is redrawn as Bernoulli(passenger_rate), i.e. passengers
/// appear and disappear at random.
///
/// The target is an epsilon-greedy driver pi* that heads to the pickup or
/// drop-off corner; the behavior is (1 - alpha) pi* + alpha pi+, with pi+ the
/// uniform policy. Ergodic for passenger_rate in (0, 1).
struct GridworldSpec {
  std::size_t width = 3;
  std::size_t height = 3;
  double passenger_rate = 0.3;
  double pickup_reward = 20.0;
  double step_penalty = -1.0;
  double alpha = 0.5;
  double greedy_epsilon = 0.2;
  std::uint64_t seed = 0;
  std::size_t max_states = 512;
};

inline constexpr std::size_t kGridActions = 5;
inline constexpr std::size_t kGridPassengerStatuses = 4;

/// State index of (x, y, waiting, carrying).
std::size_t gridworld_state(const GridworldSpec& spec, std::size_t x, std::size_t y, bool waiting,
                            bool carrying);

/// Throws std::invalid_argument when the state count exceeds spec.max_states.
Environment build_gridworld(const GridworldSpec& spec);

/// Random MDP with Dirichlet rows restricted to a sparsity mask, uniform
/// [0, 1) rewards, and two independent random policies whose entries are at
/// least kPolicySupportFloor. Regenerates until the chain is ergodic under the
/// uniform, behavior and target policies.
struct RandomMdpSpec {
  std::size_t n_states = 6;
  std::size_t n_actions = 2;
  double sparsity = 1.0;
  std::uint64_t seed = 0;
  std::size_t max_attempts = 1000;
};

inline constexpr double kPolicySupportFloor = 0.01;

/// Throws std::runtime_error after spec.max_attempts non-ergodic draws.
Environment build_random(const RandomMdpSpec& spec);

/// Random policy with every entry >= floor.
StochasticPolicy random_policy(std::size_t n_states, std::size_t n_actions, double floor,
                               std::uint64_t seed);

}  // namespace sdre
