#pragma once

#include "sdre/mdp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace sdre {

/// Closed-form moments of the circle example, where the whole-trajectory
/// weight depends only on F ~ Binomial(T + 1, rho), the number of right moves.
struct CircleVarianceReport {
  double rho = 0.0;
  std::size_t horizon = 0;  ///< T; trajectories have T + 1 steps
  double a_rho = 0.0;
  double b_rho_t = 0.0;
  double d_rho_t = 0.0;
  double var_weight = 0.0;           ///< Var[w_{0:T}]
  double var_weighted_reward = 0.0;  ///< Var[w_{0:T} R^T]
  double wis_asymptotic_mse_coeff = 0.0;  ///< n * MSE of trajectory-wise WIS, leading order
};

/// Throws std::invalid_argument for rho outside (0, 1) or T == 0.
CircleVarianceReport circle_variance_closed_form(double rho, std::size_t horizon);

struct CircleVarianceSample {
  std::size_t replicates = 0;
  double mean_weight = 0.0;
  double mean_weight_se = 0.0;
  double var_weight = 0.0;
  double var_weighted_reward = 0.0;
};

inline constexpr std::size_t kVarianceBlock = 1 << 16;

/// Monte Carlo over F with w = C^(2F - (T+1)), C = (1 - rho) / rho, and
/// R = F / (T + 1). Replicates run in fixed blocks of kVarianceBlock with
/// per-block seeds; block statistics merge in block order, so both variants
/// return identical results for any thread count.
CircleVarianceSample circle_variance_empirical_serial(double rho, std::size_t horizon,
                                                      std::size_t replicates,
                                                      std::uint64_t seed);
CircleVarianceSample circle_variance_empirical_parallel(double rho, std::size_t horizon,
                                                        std::size_t replicates,
                                                        std::uint64_t seed);
inline CircleVarianceSample circle_variance_empirical(double rho, std::size_t horizon,
                                                      std::size_t replicates,
                                                      std::uint64_t seed) {
  return circle_variance_empirical_parallel(rho, horizon, replicates, seed);
}

/// (Pi f)(s) = f(s) - gamma E[f(s') | s] under the target policy.
Eigen::VectorXd apply_Pi(std::span<const double> f, const TabularMdp& mdp,
                         const StochasticPolicy& target, double gamma);

/// f_g solving Pi f = g (gamma < 1) or Pi f = g - E_{d_pi}[g] with
/// E_{d_pi}[f] = 0 (gamma == 1, throws NonErgodicError on bad chains).
Eigen::VectorXd inverse_bellman(std::span<const double> g, const TabularMdp& mdp,
                                const StochasticPolicy& target, double gamma);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = L(w, V^pi), rhs = R_pi - R_pi[w], with w rescaled to
/// E_{d_pi0}[w] = 1 and R_pi[w] = E_{d_pi0}[w(s) beta(a|s) r(s,a)].
IdentityCheck check_theorem8(std::span<const double> w, const TabularMdp& mdp,
                             const StochasticPolicy& behavior, const StochasticPolicy& target,
                             double gamma);

/// lhs = L(w, f), rhs = E_{d_pi0}[(w*(s) - w(s)) (Pi f)(s)]. In the
/// average-reward case w is first rescaled to E_{d_pi0}[w] = 1.
IdentityCheck check_lemma6(std::span<const double> w, std::span<const double> f,
                           const TabularMdp& mdp, const StochasticPolicy& behavior,
                           const StochasticPolicy& target, double gamma);

/// The sup-norm errors and the largest |L(w, f)| over the witness functions
/// f_s = inverse_bellman(1[. == s]) and f_s / d_pi0(s).
struct SupNormWitness {
  double density_error = 0.0;  ///< ||d_pi - w d_pi0||_inf
  double density_witness = 0.0;
  StateId density_argmax = 0;
  double ratio_error = 0.0;  ///< ||w* - w||_inf
  double ratio_witness = 0.0;
};

SupNormWitness sup_norm_witness(std::span<const double> w, const TabularMdp& mdp,
                                const StochasticPolicy& behavior, const StochasticPolicy& target,
                                double gamma);

/// Population expectations of the three finite-horizon estimators, computed
/// by enumerating every behavior trajectory of length `horizon`. The
/// stationary variant uses the time-indexed ratio d_{pi,t} / d_{pi0,t}.
struct RaoBlackwellReport {
  double trajectory_wise = 0.0;
  double step_wise = 0.0;
  double stationary = 0.0;
  double exact = 0.0;
  std::size_t paths = 0;
};

inline constexpr std::size_t kMaxEnumeratedPaths = 50'000'000;

RaoBlackwellReport rao_blackwell_enumeration(const TabularMdp& mdp,
                                             const StochasticPolicy& behavior,
                                             const StochasticPolicy& target, double gamma,
                                             std::size_t horizon);

}  // namespace sdre
