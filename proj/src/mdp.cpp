#include "sdre/mdp.hpp"

#include "sdre/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

namespace sdre {

namespace {

constexpr double kProbabilityTol = 1e-12;

void check_probability_vector(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + ": negative or non-finite entry");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > kProbabilityTol) {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << ": entries sum to " << total;
    throw std::invalid_argument(msg.str());
  }
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("discount factor must lie in (0, 1]");
  }
}

}  // namespace

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions, std::vector<double> transition,
                       std::vector<double> reward, std::vector<double> initial)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      initial_(std::move(initial)) {
  if (n_states_ == 0 || n_actions_ == 0) {
    throw std::invalid_argument("TabularMdp: state and action counts must be positive");
  }
  if (transition_.size() != n_states_ * n_actions_ * n_states_) {
    throw std::invalid_argument("TabularMdp: transition tensor has wrong size");
  }
  if (reward_.size() != n_states_ * n_actions_) {
    throw std::invalid_argument("TabularMdp: reward table has wrong size");
  }
  if (initial_.size() != n_states_) {
    throw std::invalid_argument("TabularMdp: initial distribution has wrong size");
  }
  for (StateId s = 0; s < n_states_; ++s) {
    for (ActionId a = 0; a < n_actions_; ++a) {
      check_probability_vector(transition_row(s, a), "TabularMdp transition row");
    }
  }
  for (double r : reward_) {
    if (!std::isfinite(r)) throw std::invalid_argument("TabularMdp: non-finite reward");
  }
  check_probability_vector(initial_, "TabularMdp initial distribution");
}

Eigen::VectorXd TabularMdp::initial_vector() const {
  return Eigen::Map<const Eigen::VectorXd>(initial_.data(), static_cast<Eigen::Index>(n_states_));
}

TabularMdp TabularMdp::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != n_states_) throw std::invalid_argument("permuted: wrong permutation size");
  std::vector<double> t(transition_.size());
  std::vector<double> r(reward_.size());
  std::vector<double> d0(n_states_);
  for (StateId s = 0; s < n_states_; ++s) {
    d0[perm[s]] = initial_[s];
    for (ActionId a = 0; a < n_actions_; ++a) {
      r[perm[s] * n_actions_ + a] = reward(s, a);
      for (StateId s2 = 0; s2 < n_states_; ++s2) {
        t[(perm[s] * n_actions_ + a) * n_states_ + perm[s2]] = transition(s, a, s2);
      }
    }
  }
  return TabularMdp(n_states_, n_actions_, std::move(t), std::move(r), std::move(d0));
}

TabularMdp TabularMdp::with_rewards(std::vector<double> reward) const {
  return TabularMdp(n_states_, n_actions_, transition_, std::move(reward), initial_);
}

StochasticPolicy::StochasticPolicy(std::size_t n_states, std::size_t n_actions,
                                   std::vector<double> probs)
    : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
  if (n_states_ == 0 || n_actions_ == 0) {
    throw std::invalid_argument("StochasticPolicy: empty shape");
  }
  if (probs_.size() != n_states_ * n_actions_) {
    throw std::invalid_argument("StochasticPolicy: table has wrong size");
  }
  for (StateId s = 0; s < n_states_; ++s) check_probability_vector(row(s), "StochasticPolicy row");
}

StochasticPolicy StochasticPolicy::uniform(std::size_t n_states, std::size_t n_actions) {
  return StochasticPolicy(n_states, n_actions,
                          std::vector<double>(n_states * n_actions, 1.0 / n_actions));
}

StochasticPolicy StochasticPolicy::mixture(const StochasticPolicy& base,
                                           const StochasticPolicy& other, double alpha) {
  if (base.n_states_ != other.n_states_ || base.n_actions_ != other.n_actions_) {
    throw std::invalid_argument("StochasticPolicy::mixture: shape mismatch");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("StochasticPolicy::mixture: alpha outside [0, 1]");
  }
  std::vector<double> p(base.probs_.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = (1.0 - alpha) * base.probs_[i] + alpha * other.probs_[i];
  }
  return StochasticPolicy(base.n_states_, base.n_actions_, std::move(p));
}

StochasticPolicy StochasticPolicy::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != n_states_) throw std::invalid_argument("permuted: wrong permutation size");
  std::vector<double> p(probs_.size());
  for (StateId s = 0; s < n_states_; ++s) {
    for (ActionId a = 0; a < n_actions_; ++a) p[perm[s] * n_actions_ + a] = prob(s, a);
  }
  return StochasticPolicy(n_states_, n_actions_, std::move(p));
}

void check_compatible(const TabularMdp& mdp, const StochasticPolicy& policy) {
  if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions()) {
    throw std::invalid_argument("policy shape does not match MDP");
  }
}

Trajectory sample_trajectory(const TabularMdp& mdp, const StochasticPolicy& policy,
                             std::size_t horizon, std::uint64_t seed) {
  check_compatible(mdp, policy);
  if (horizon == 0) throw std::invalid_argument("sample_trajectory: horizon must be >= 1");
  Rng rng(seed);
  Trajectory traj;
  traj.steps.reserve(horizon);
  StateId s = rng.categorical(mdp.initial_distribution());
  for (std::size_t t = 0; t < horizon; ++t) {
    const ActionId a = rng.categorical(policy.row(s));
    const StateId next = rng.categorical(mdp.transition_row(s, a));
    traj.steps.push_back({s, a, next, mdp.reward(s, a), t});
    s = next;
  }
  return traj;
}

std::vector<Trajectory> sample_trajectories(const TabularMdp& mdp,
                                            const StochasticPolicy& policy, std::size_t count,
                                            std::size_t horizon, std::uint64_t seed) {
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(sample_trajectory(mdp, policy, horizon, derive_seed(seed, i)));
  }
  return out;
}

Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp, const StochasticPolicy& policy) {
  check_compatible(mdp, policy);
  const auto n = static_cast<Eigen::Index>(mdp.num_states());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      const double pa = policy.prob(s, a);
      if (pa == 0.0) continue;
      const auto row = mdp.transition_row(s, a);
      for (StateId s2 = 0; s2 < mdp.num_states(); ++s2) p(s, s2) += pa * row[s2];
    }
  }
  return p;
}

Eigen::VectorXd policy_reward_vector(const TabularMdp& mdp, const StochasticPolicy& policy) {
  check_compatible(mdp, policy);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mdp.num_states()));
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    for (ActionId a = 0; a < mdp.num_actions(); ++a) r(s) += policy.prob(s, a) * mdp.reward(s, a);
  }
  return r;
}

ChainStructure analyze_chain(const Eigen::MatrixXd& transition) {
  const auto n = static_cast<std::size_t>(transition.rows());
  ChainStructure out;
  if (n == 0) return out;

  auto reach = [&](bool reverse, std::vector<long>& level) {
    level.assign(n, -1);
    std::queue<std::size_t> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v = 0; v < n; ++v) {
        const double p = reverse ? transition(v, u) : transition(u, v);
        if (p > 0.0 && level[v] < 0) {
          level[v] = level[u] + 1;
          q.push(v);
        }
      }
    }
    return std::all_of(level.begin(), level.end(), [](long l) { return l >= 0; });
  };

  std::vector<long> forward;
  std::vector<long> backward;
  if (!reach(false, forward) || !reach(true, backward)) return out;
  out.irreducible = true;

  long g = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (transition(u, v) > 0.0) g = std::gcd(g, std::abs(forward[u] + 1 - forward[v]));
    }
  }
  out.period = static_cast<std::size_t>(g);
  return out;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition, double tol) {
  const Eigen::Index n = transition.rows();
  if (n == 0 || transition.cols() != n) {
    throw std::invalid_argument("stationary_distribution: matrix must be square and nonempty");
  }
  const ChainStructure chain = analyze_chain(transition);
  if (!chain.irreducible) throw NonErgodicError("stationary_distribution: chain is reducible");
  if (chain.period != 1) {
    throw NonErgodicError("stationary_distribution: chain is periodic with period " +
                          std::to_string(chain.period));
  }

  Eigen::VectorXd d;
  if (static_cast<std::size_t>(n) <= kDenseStationaryLimit) {
    // (P^T - I) d = 0 with the last equation replaced by sum(d) = 1.
    Eigen::MatrixXd a = transition.transpose() - Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    d = a.partialPivLu().solve(b);
  } else {
    d = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    constexpr int kMaxIterations = 1000000;
    for (int it = 0; it < kMaxIterations; ++it) {
      Eigen::VectorXd next = transition.transpose() * d;
      next /= next.sum();
      const double change = (next - d).cwiseAbs().maxCoeff();
      d = std::move(next);
      if (change <= tol * 0.1) break;
    }
  }
  d = d.cwiseMax(0.0);
  d /= d.sum();
  const double residual = (transition.transpose() * d - d).cwiseAbs().maxCoeff();
  if (residual > tol) {
    throw std::runtime_error("stationary_distribution: residual " + std::to_string(residual) +
                             " exceeds tolerance");
  }
  return d;
}

Eigen::VectorXd discounted_visitation(const Eigen::MatrixXd& transition,
                                      const Eigen::VectorXd& initial, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("discounted_visitation: gamma must lie in (0, 1)");
  }
  const Eigen::Index n = transition.rows();
  if (transition.cols() != n || initial.size() != n) {
    throw std::invalid_argument("discounted_visitation: shape mismatch");
  }
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - gamma * transition.transpose();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!std::isfinite(lu.rcond()) || lu.rcond() < 1e-14) {
    throw std::runtime_error("discounted_visitation: singular system");
  }
  Eigen::VectorXd d = lu.solve((1.0 - gamma) * initial);
  d /= d.sum();
  return d;
}

Eigen::VectorXd visitation_distribution(const TabularMdp& mdp, const StochasticPolicy& policy,
                                        double gamma) {
  check_gamma(gamma);
  const Eigen::MatrixXd p = policy_transition_matrix(mdp, policy);
  if (gamma == 1.0) return stationary_distribution(p);
  return discounted_visitation(p, mdp.initial_vector(), gamma);
}

ValueSolution value_function(const TabularMdp& mdp, const StochasticPolicy& policy, double gamma) {
  check_gamma(gamma);
  const Eigen::MatrixXd p = policy_transition_matrix(mdp, policy);
  const Eigen::VectorXd r = policy_reward_vector(mdp, policy);
  const Eigen::Index n = p.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  ValueSolution out;
  if (gamma < 1.0) {
    out.values = (id - gamma * p).partialPivLu().solve(r);
    out.average_reward = (1.0 - gamma) * mdp.initial_vector().dot(out.values);
    return out;
  }
  const Eigen::VectorXd d = stationary_distribution(p);
  out.average_reward = d.dot(r);
  // (I - P + 1 d^T) is invertible for an ergodic chain; its solution has d^T V = 0.
  const Eigen::MatrixXd m = id - p + Eigen::VectorXd::Ones(n) * d.transpose();
  out.values = m.partialPivLu().solve(r - Eigen::VectorXd::Constant(n, out.average_reward));
  return out;
}

double expected_reward_exact(const TabularMdp& mdp, const StochasticPolicy& policy,
                             double gamma) {
  const Eigen::VectorXd d = visitation_distribution(mdp, policy, gamma);
  double total = 0.0;
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      total += d(static_cast<Eigen::Index>(s)) * policy.prob(s, a) * mdp.reward(s, a);
    }
  }
  return total;
}

Eigen::MatrixXd state_marginals(const TabularMdp& mdp, const StochasticPolicy& policy,
                                std::size_t horizon) {
  const Eigen::MatrixXd pt = policy_transition_matrix(mdp, policy).transpose();
  const auto n = static_cast<Eigen::Index>(mdp.num_states());
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(horizon));
  Eigen::VectorXd d = mdp.initial_vector();
  for (std::size_t t = 0; t < horizon; ++t) {
    out.col(static_cast<Eigen::Index>(t)) = d;
    d = pt * d;
  }
  return out;
}

std::vector<double> discount_weights(double gamma, std::size_t horizon) {
  check_gamma(gamma);
  std::vector<double> w(horizon);
  double g = 1.0;
  double total = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    w[t] = g;
    total += g;
    g *= gamma;
  }
  for (auto& x : w) x /= total;
  return w;
}

double finite_horizon_reward(const TabularMdp& mdp, const StochasticPolicy& policy, double gamma,
                             std::size_t horizon) {
  if (horizon == 0) throw std::invalid_argument("finite_horizon_reward: horizon must be >= 1");
  const std::vector<double> gt = discount_weights(gamma, horizon);
  const Eigen::MatrixXd marginals = state_marginals(mdp, policy, horizon);
  const Eigen::VectorXd r = policy_reward_vector(mdp, policy);
  double total = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    total += gt[t] * marginals.col(static_cast<Eigen::Index>(t)).dot(r);
  }
  return total;
}

}  // namespace sdre
