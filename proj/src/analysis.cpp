#include "sdre/analysis.hpp"

#include "sdre/density_ratio.hpp"
#include "sdre/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sdre {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x) {
  return {x.data(), idx(x.size())};
}

void check_rho(double rho, std::size_t horizon) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
  if (horizon == 0) throw std::invalid_argument("horizon T must be at least 1");
}

void check_table(std::span<const double> x, const TabularMdp& mdp, const char* what) {
  if (x.size() != mdp.num_states()) {
    throw std::invalid_argument(std::string(what) + " must have one entry per state");
  }
}

/// Count, mean and centered second moment of a stream (merged with Chan's rule).
struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    const double total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * o.count / total;
    m2 += o.m2 + delta * delta * count * o.count / total;
    count = total;
  }

  double variance() const { return count > 1.0 ? m2 / (count - 1.0) : 0.0; }
};

struct BlockMoments {
  Moments weight;
  Moments weighted_reward;
};

BlockMoments simulate_block(double rho, std::size_t horizon, std::size_t count,
                            std::uint64_t seed, const std::vector<double>& weight_of,
                            const std::vector<double>& reward_of) {
  Rng rng(seed);
  BlockMoments out;
  for (std::size_t r = 0; r < count; ++r) {
    std::size_t f = 0;
    for (std::size_t t = 0; t <= horizon; ++t) f += rng.uniform() < rho ? 1 : 0;
    out.weight.add(weight_of[f]);
    out.weighted_reward.add(weight_of[f] * reward_of[f]);
  }
  return out;
}

template <bool Parallel>
CircleVarianceSample circle_variance_impl(double rho, std::size_t horizon,
                                          std::size_t replicates, std::uint64_t seed) {
  check_rho(rho, horizon);
  if (replicates < 2) throw std::invalid_argument("need at least two replicates");
  const double c = (1.0 - rho) / rho;
  const auto steps = static_cast<double>(horizon + 1);
  std::vector<double> weight_of(horizon + 2);
  std::vector<double> reward_of(horizon + 2);
  for (std::size_t f = 0; f <= horizon + 1; ++f) {
    weight_of[f] = std::pow(c, 2.0 * static_cast<double>(f) - steps);
    reward_of[f] = static_cast<double>(f) / steps;
  }

  const std::size_t blocks = (replicates + kVarianceBlock - 1) / kVarianceBlock;
  std::vector<BlockMoments> parts(blocks);
  const auto run = [&](std::size_t b) {
    const std::size_t begin = b * kVarianceBlock;
    const std::size_t count = std::min(kVarianceBlock, replicates - begin);
    parts[b] = simulate_block(rho, horizon, count, derive_seed(seed, b), weight_of, reward_of);
  };
  if constexpr (Parallel) {
    const auto nb = static_cast<std::ptrdiff_t>(blocks);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::ptrdiff_t b = 0; b < nb; ++b) run(static_cast<std::size_t>(b));
  } else {
    for (std::size_t b = 0; b < blocks; ++b) run(b);
  }

  BlockMoments total;
  for (const BlockMoments& part : parts) {
    total.weight.merge(part.weight);
    total.weighted_reward.merge(part.weighted_reward);
  }
  CircleVarianceSample out;
  out.replicates = replicates;
  out.mean_weight = total.weight.mean;
  out.var_weight = total.weight.variance();
  out.mean_weight_se = std::sqrt(out.var_weight / static_cast<double>(replicates));
  out.var_weighted_reward = total.weighted_reward.variance();
  return out;
}

}  // namespace

CircleVarianceReport circle_variance_closed_form(double rho, std::size_t horizon) {
  check_rho(rho, horizon);
  const double q = 1.0 - rho;
  const auto t = static_cast<double>(horizon);
  CircleVarianceReport out;
  out.rho = rho;
  out.horizon = horizon;
  out.a_rho = (rho * rho * rho + q * q * q) / (rho * q);
  out.b_rho_t = rho * q / (t + 1.0) + q * q * q * q / (rho * rho);
  out.d_rho_t = out.b_rho_t / out.a_rho - 2.0 * q * q * q / rho + q * q * out.a_rho;
  out.var_weight = std::pow(out.a_rho, t + 1.0) - 1.0;
  out.var_weighted_reward = out.b_rho_t * std::pow(out.a_rho, t - 1.0) - q * q;
  out.wis_asymptotic_mse_coeff = out.d_rho_t * std::pow(out.a_rho, t);
  return out;
}

CircleVarianceSample circle_variance_empirical_serial(double rho, std::size_t horizon,
                                                      std::size_t replicates,
                                                      std::uint64_t seed) {
  return circle_variance_impl<false>(rho, horizon, replicates, seed);
}

CircleVarianceSample circle_variance_empirical_parallel(double rho, std::size_t horizon,
                                                        std::size_t replicates,
                                                        std::uint64_t seed) {
  return circle_variance_impl<true>(rho, horizon, replicates, seed);
}

Eigen::VectorXd apply_Pi(std::span<const double> f, const TabularMdp& mdp,
                         const StochasticPolicy& target, double gamma) {
  check_table(f, mdp, "apply_Pi: f");
  const Eigen::MatrixXd p = policy_transition_matrix(mdp, target);
  const Eigen::VectorXd fv = as_vector(f);
  return fv - gamma * (p * fv);
}

Eigen::VectorXd inverse_bellman(std::span<const double> g, const TabularMdp& mdp,
                                const StochasticPolicy& target, double gamma) {
  check_table(g, mdp, "inverse_bellman: g");
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("inverse_bellman: gamma must lie in (0, 1]");
  }
  const Eigen::MatrixXd p = policy_transition_matrix(mdp, target);
  const Index n = p.rows();
  const Eigen::VectorXd gv = as_vector(g);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  if (gamma < 1.0) return (eye - gamma * p).partialPivLu().solve(gv);
  // (I - P + 1 d^T) f = g - gbar forces d^T f = 0 and then (I - P) f = g - gbar.
  const Eigen::VectorXd d = stationary_distribution(p);
  const Eigen::MatrixXd system = eye - p + Eigen::VectorXd::Ones(n) * d.transpose();
  return system.partialPivLu().solve(gv - Eigen::VectorXd::Constant(n, d.dot(gv)));
}

IdentityCheck check_theorem8(std::span<const double> w, const TabularMdp& mdp,
                             const StochasticPolicy& behavior, const StochasticPolicy& target,
                             double gamma) {
  check_table(w, mdp, "check_theorem8: w");
  const Eigen::VectorXd d = visitation_distribution(mdp, behavior, gamma);
  const Eigen::VectorXd wn = as_vector(w) / d.dot(as_vector(w));
  const Eigen::VectorXd v = value_function(mdp, target, gamma).values;

  IdentityCheck out;
  out.lhs = minimax_loss_functional(std::span<const double>(wn.data(), w.size()),
                                    std::span<const double>(v.data(), w.size()), mdp, behavior,
                                    target, gamma);
  double weighted = 0.0;
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      const double pa = behavior.prob(s, a);
      if (pa > 0.0) {
        weighted += d(idx(s)) * wn(idx(s)) * pa * (target.prob(s, a) / pa) * mdp.reward(s, a);
      }
    }
  }
  out.rhs = expected_reward_exact(mdp, target, gamma) - weighted;
  return out;
}

IdentityCheck check_lemma6(std::span<const double> w, std::span<const double> f,
                           const TabularMdp& mdp, const StochasticPolicy& behavior,
                           const StochasticPolicy& target, double gamma) {
  check_table(w, mdp, "check_lemma6: w");
  check_table(f, mdp, "check_lemma6: f");
  const Eigen::VectorXd d = visitation_distribution(mdp, behavior, gamma);
  Eigen::VectorXd wn = as_vector(w);
  if (gamma == 1.0) wn /= d.dot(wn);
  const Eigen::VectorXd w_star = exact_ratio(mdp, behavior, target, gamma);

  IdentityCheck out;
  out.lhs = minimax_loss_functional(std::span<const double>(wn.data(), w.size()), f, mdp,
                                    behavior, target, gamma);
  const Eigen::VectorXd pi_f = apply_Pi(f, mdp, target, gamma);
  out.rhs = (d.array() * (w_star - wn).array() * pi_f.array()).sum();
  return out;
}

SupNormWitness sup_norm_witness(std::span<const double> w, const TabularMdp& mdp,
                                const StochasticPolicy& behavior, const StochasticPolicy& target,
                                double gamma) {
  check_table(w, mdp, "sup_norm_witness: w");
  const std::size_t n = mdp.num_states();
  const Eigen::VectorXd d0 = visitation_distribution(mdp, behavior, gamma);
  const Eigen::VectorXd d = visitation_distribution(mdp, target, gamma);
  Eigen::VectorXd wn = as_vector(w);
  if (gamma == 1.0) wn /= d0.dot(wn);
  const std::span<const double> wspan(wn.data(), n);

  SupNormWitness out;
  const Eigen::VectorXd density_gap = d - wn.cwiseProduct(d0);
  out.density_error = density_gap.cwiseAbs().maxCoeff();
  out.ratio_error = (d.cwiseQuotient(d0) - wn).cwiseAbs().maxCoeff();
  std::vector<double> indicator(n, 0.0);
  for (StateId s = 0; s < n; ++s) {
    indicator[s] = 1.0;
    const Eigen::VectorXd f = inverse_bellman(indicator, mdp, target, gamma);
    indicator[s] = 0.0;
    const double l = std::abs(
        minimax_loss_functional(wspan, std::span<const double>(f.data(), n), mdp, behavior,
                                target, gamma));
    if (l > out.density_witness) {
      out.density_witness = l;
      out.density_argmax = s;
    }
    out.ratio_witness = std::max(out.ratio_witness, l / d0(idx(s)));
  }
  return out;
}

RaoBlackwellReport rao_blackwell_enumeration(const TabularMdp& mdp,
                                             const StochasticPolicy& behavior,
                                             const StochasticPolicy& target, double gamma,
                                             std::size_t horizon) {
  check_compatible(mdp, behavior);
  check_compatible(mdp, target);
  if (horizon == 0) throw std::invalid_argument("rao_blackwell_enumeration: horizon must be >= 1");
  const std::size_t n = mdp.num_states();
  const std::size_t m = mdp.num_actions();
  const double paths_bound = static_cast<double>(n) *
                             std::pow(static_cast<double>(n * m), static_cast<double>(horizon));
  if (paths_bound > static_cast<double>(kMaxEnumeratedPaths)) {
    throw std::invalid_argument("rao_blackwell_enumeration: too many trajectories to enumerate");
  }

  const std::vector<double> gt = discount_weights(gamma, horizon);
  const Eigen::MatrixXd dt = state_marginals(mdp, target, horizon);
  const Eigen::MatrixXd db = state_marginals(mdp, behavior, horizon);
  RaoBlackwellReport out;
  out.exact = finite_horizon_reward(mdp, target, gamma, horizon);

  // Depth-first walk; the running tuple is (path prob, prefix weight,
  // discounted return, step-wise sum, stationary sum).
  struct Frame {
    double prob, weight, ret, step, stat;
  };
  const auto walk = [&](const auto& self, StateId s, std::size_t t, Frame f) -> void {
    for (ActionId a = 0; a < m; ++a) {
      const double pa = behavior.prob(s, a);
      if (!(pa > 0.0)) continue;
      const double beta = target.prob(s, a) / pa;
      const double r = mdp.reward(s, a);
      const double ratio_t = dt(idx(s), idx(t)) / db(idx(s), idx(t));
      Frame g{f.prob * pa, f.weight * beta, f.ret + gt[t] * r, 0.0, 0.0};
      g.step = f.step + gt[t] * g.weight * r;
      g.stat = f.stat + gt[t] * ratio_t * beta * r;
      if (t + 1 == horizon) {
        out.trajectory_wise += g.prob * g.weight * g.ret;
        out.step_wise += g.prob * g.step;
        out.stationary += g.prob * g.stat;
        ++out.paths;
        continue;
      }
      for (StateId s2 = 0; s2 < n; ++s2) {
        const double p = mdp.transition(s, a, s2);
        if (p > 0.0) self(self, s2, t + 1, Frame{g.prob * p, g.weight, g.ret, g.step, g.stat});
      }
    }
  };
  const auto d0 = mdp.initial_distribution();
  for (StateId s = 0; s < n; ++s) {
    if (d0[s] > 0.0) walk(walk, s, 0, Frame{d0[s], 1.0, 0.0, 0.0, 0.0});
  }
  return out;
}

}  // namespace sdre
