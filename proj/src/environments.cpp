#include "sdre/environments.hpp"

#include "sdre/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sdre {

Environment build_circle(const CircleSpec& spec) {
  if (spec.n == 0 || spec.n % 2 == 0) {
    throw std::invalid_argument("build_circle: n must be odd (the chain is periodic otherwise)");
  }
  if (!(spec.rho > 0.0 && spec.rho < 1.0)) {
    throw std::invalid_argument("build_circle: rho must lie in (0, 1)");
  }
  const std::size_t n = spec.n;
  std::vector<double> t(n * 2 * n, 0.0);
  std::vector<double> r(n * 2, 0.0);
  for (StateId s = 0; s < n; ++s) {
    t[(s * 2 + kCircleLeft) * n + (s + n - 1) % n] = 1.0;
    t[(s * 2 + kCircleRight) * n + (s + 1) % n] = 1.0;
    r[s * 2 + kCircleRight] = 1.0;
  }
  std::vector<double> d0(n, 1.0 / static_cast<double>(n));

  std::vector<double> behavior(n * 2);
  std::vector<double> target(n * 2);
  for (StateId s = 0; s < n; ++s) {
    behavior[s * 2 + kCircleLeft] = 1.0 - spec.rho;
    behavior[s * 2 + kCircleRight] = spec.rho;
    target[s * 2 + kCircleLeft] = spec.rho;
    target[s * 2 + kCircleRight] = 1.0 - spec.rho;
  }

  Eigen::MatrixXd embedding(static_cast<Eigen::Index>(n), 2);
  for (StateId s = 0; s < n; ++s) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(n);
    embedding(static_cast<Eigen::Index>(s), 0) = std::cos(angle);
    embedding(static_cast<Eigen::Index>(s), 1) = std::sin(angle);
  }

  return Environment{TabularMdp(n, 2, std::move(t), std::move(r), std::move(d0)),
                     StochasticPolicy(n, 2, std::move(behavior)),
                     StochasticPolicy(n, 2, std::move(target)), std::move(embedding)};
}

std::size_t gridworld_state(const GridworldSpec& spec, std::size_t x, std::size_t y, bool waiting,
                            bool carrying) {
  const std::size_t cell = y * spec.width + x;
  return cell * kGridPassengerStatuses + (waiting ? 1 : 0) + (carrying ? 2 : 0);
}

namespace {

enum GridAction : ActionId { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3, kInteract = 4 };

struct GridMove {
  std::size_t x;
  std::size_t y;
};

GridMove apply_move(const GridworldSpec& spec, std::size_t x, std::size_t y, ActionId a) {
  switch (a) {
    case kNorth: return {x, y > 0 ? y - 1 : y};
    case kEast: return {x + 1 < spec.width ? x + 1 : x, y};
    case kSouth: return {x, y + 1 < spec.height ? y + 1 : y};
    case kWest: return {x > 0 ? x - 1 : x, y};
    default: return {x, y};
  }
}

}  // namespace

Environment build_gridworld(const GridworldSpec& spec) {
  if (spec.width == 0 || spec.height == 0) {
    throw std::invalid_argument("build_gridworld: grid dimensions must be positive");
  }
  if (!(spec.passenger_rate >= 0.0 && spec.passenger_rate <= 1.0)) {
    throw std::invalid_argument("build_gridworld: passenger_rate must lie in [0, 1]");
  }
  if (!(spec.alpha >= 0.0 && spec.alpha <= 1.0) ||
      !(spec.greedy_epsilon >= 0.0 && spec.greedy_epsilon <= 1.0)) {
    throw std::invalid_argument("build_gridworld: alpha and greedy_epsilon must lie in [0, 1]");
  }
  const std::size_t n = spec.width * spec.height * kGridPassengerStatuses;
  if (n > spec.max_states) {
    throw std::invalid_argument("build_gridworld: " + std::to_string(n) +
                                " states exceed the bound of " + std::to_string(spec.max_states));
  }
  const std::size_t m = kGridActions;
  const std::size_t pick_x = 0, pick_y = 0;
  const std::size_t drop_x = spec.width - 1, drop_y = spec.height - 1;
  const double q = spec.passenger_rate;

  std::vector<double> t(n * m * n, 0.0);
  std::vector<double> r(n * m, spec.step_penalty);
  std::vector<double> d0(n, 0.0);
  std::vector<double> greedy(n * m, 0.0);
  Eigen::MatrixXd embedding(static_cast<Eigen::Index>(n), 4);
  Rng tie_break(spec.seed);

  for (std::size_t y = 0; y < spec.height; ++y) {
    for (std::size_t x = 0; x < spec.width; ++x) {
      for (int waiting = 0; waiting < 2; ++waiting) {
        for (int carrying = 0; carrying < 2; ++carrying) {
          const std::size_t s = gridworld_state(spec, x, y, waiting, carrying);
          const auto row = static_cast<Eigen::Index>(s);
          embedding(row, 0) = static_cast<double>(x);
          embedding(row, 1) = static_cast<double>(y);
          embedding(row, 2) = waiting;
          embedding(row, 3) = carrying;
          if (!carrying) {
            d0[s] = (waiting ? q : 1.0 - q) / static_cast<double>(spec.width * spec.height);
          }

          for (ActionId a = 0; a < m; ++a) {
            GridMove to = apply_move(spec, x, y, a);
            bool now_carrying = carrying;
            if (a == kInteract) {
              if (carrying && x == drop_x && y == drop_y) {
                now_carrying = false;
                r[s * m + a] = spec.pickup_reward;
              } else if (!carrying && waiting && x == pick_x && y == pick_y) {
                now_carrying = true;
                r[s * m + a] = spec.pickup_reward;
              }
            }
            for (int next_waiting = 0; next_waiting < 2; ++next_waiting) {
              const double p = next_waiting ? q : 1.0 - q;
              if (p == 0.0) continue;
              t[(s * m + a) * n + gridworld_state(spec, to.x, to.y, next_waiting, now_carrying)] +=
                  p;
            }
          }

          // Greedy driver: interact at an active goal, otherwise step toward it.
          const std::size_t gx = carrying ? drop_x : pick_x;
          const std::size_t gy = carrying ? drop_y : pick_y;
          ActionId best = kInteract;
          if (x != gx || y != gy) {
            std::vector<ActionId> closer;
            if (y > gy) closer.push_back(kNorth);
            if (x < gx) closer.push_back(kEast);
            if (y < gy) closer.push_back(kSouth);
            if (x > gx) closer.push_back(kWest);
            best = closer[tie_break.index(closer.size())];
          }
          for (ActionId a = 0; a < m; ++a) {
            greedy[s * m + a] = spec.greedy_epsilon / static_cast<double>(m) +
                                (a == best ? 1.0 - spec.greedy_epsilon : 0.0);
          }
        }
      }
    }
  }

  StochasticPolicy target(n, m, std::move(greedy));
  StochasticPolicy behavior =
      StochasticPolicy::mixture(target, StochasticPolicy::uniform(n, m), spec.alpha);
  return Environment{TabularMdp(n, m, std::move(t), std::move(r), std::move(d0)),
                     std::move(behavior), std::move(target), std::move(embedding)};
}

StochasticPolicy random_policy(std::size_t n_states, std::size_t n_actions, double floor,
                               std::uint64_t seed) {
  if (!(floor >= 0.0) || floor * static_cast<double>(n_actions) >= 1.0) {
    throw std::invalid_argument("random_policy: support floor too large for the action count");
  }
  Rng rng(seed);
  std::vector<double> p(n_states * n_actions);
  const double free_mass = 1.0 - floor * static_cast<double>(n_actions);
  for (StateId s = 0; s < n_states; ++s) {
    const std::vector<double> row = rng.dirichlet(n_actions);
    for (ActionId a = 0; a < n_actions; ++a) p[s * n_actions + a] = floor + free_mass * row[a];
  }
  return StochasticPolicy(n_states, n_actions, std::move(p));
}

Environment build_random(const RandomMdpSpec& spec) {
  if (spec.n_states == 0 || spec.n_actions == 0) {
    throw std::invalid_argument("build_random: state and action counts must be positive");
  }
  if (!(spec.sparsity > 0.0 && spec.sparsity <= 1.0)) {
    throw std::invalid_argument("build_random: sparsity must lie in (0, 1]");
  }
  const std::size_t n = spec.n_states;
  const std::size_t m = spec.n_actions;

  for (std::size_t attempt = 0; attempt < spec.max_attempts; ++attempt) {
    Rng rng(derive_seed(spec.seed, attempt));
    std::vector<double> t(n * m * n, 0.0);
    for (std::size_t row = 0; row < n * m; ++row) {
      std::vector<std::size_t> support;
      for (StateId s2 = 0; s2 < n; ++s2) {
        if (spec.sparsity >= 1.0 || rng.bernoulli(spec.sparsity)) support.push_back(s2);
      }
      if (support.empty()) support.push_back(rng.index(n));
      const std::vector<double> w = rng.dirichlet(support.size());
      double total = 0.0;
      for (std::size_t k = 0; k < support.size(); ++k) total += w[k];
      for (std::size_t k = 0; k < support.size(); ++k) t[row * n + support[k]] = w[k] / total;
    }
    std::vector<double> r(n * m);
    for (auto& x : r) x = rng.uniform();
    std::vector<double> d0 = rng.dirichlet(n);

    TabularMdp mdp(n, m, std::move(t), std::move(r), std::move(d0));
    StochasticPolicy behavior = random_policy(n, m, kPolicySupportFloor, rng.next());
    StochasticPolicy target = random_policy(n, m, kPolicySupportFloor, rng.next());

    const bool ergodic =
        analyze_chain(policy_transition_matrix(mdp, StochasticPolicy::uniform(n, m))).ergodic() &&
        analyze_chain(policy_transition_matrix(mdp, behavior)).ergodic() &&
        analyze_chain(policy_transition_matrix(mdp, target)).ergodic();
    if (!ergodic) continue;

    Eigen::MatrixXd embedding = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                          static_cast<Eigen::Index>(n));
    return Environment{std::move(mdp), std::move(behavior), std::move(target),
                       std::move(embedding)};
  }
  throw std::runtime_error("build_random: no ergodic MDP after " +
                           std::to_string(spec.max_attempts) + " attempts");
}

}  // namespace sdre
