#include "sdre/analysis.hpp"
#include "sdre/density_ratio.hpp"
#include "sdre/environments.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace sdre {
namespace {

using testing::random_env;
using testing::view;

// Moments of the circle weight from the Binomial(T + 1, rho) law of F.
struct BinomialMoments {
  double mean_w = 0.0, var_w = 0.0, var_wr = 0.0, wis_coeff = 0.0;
};

BinomialMoments enumerate_binomial(double rho, std::size_t horizon) {
  const std::size_t k = horizon + 1;
  const double c = (1.0 - rho) / rho;
  double ew = 0.0, ew2 = 0.0, ewr = 0.0, ewr2 = 0.0, coeff = 0.0;
  const double target = 1.0 - rho;
  for (std::size_t f = 0; f <= k; ++f) {
    const double log_pmf = std::lgamma(k + 1.0) - std::lgamma(f + 1.0) - std::lgamma(k - f + 1.0) +
                           f * std::log(rho) + (k - f) * std::log(1.0 - rho);
    const double p = std::exp(log_pmf);
    const double w = std::pow(c, 2.0 * f - static_cast<double>(k));
    const double r = static_cast<double>(f) / static_cast<double>(k);
    ew += p * w;
    ew2 += p * w * w;
    ewr += p * w * r;
    ewr2 += p * w * w * r * r;
    coeff += p * w * w * (r - target) * (r - target);
  }
  return {ew, ew2 - ew * ew, ewr2 - ewr * ewr, coeff};
}

// ---------------------------------------------------------------------------
// Circle variance
// ---------------------------------------------------------------------------

TEST(CircleClosedForm, HalfIsOnPolicy) {
  for (std::size_t t : {1u, 5u, 20u}) {
    const CircleVarianceReport r = circle_variance_closed_form(0.5, t);
    EXPECT_DOUBLE_EQ(r.a_rho, 1.0);
    EXPECT_EQ(r.var_weight, 0.0);
    EXPECT_NEAR(r.var_weighted_reward, 1.0 / (4.0 * (t + 1.0)), 1e-15);
  }
}

TEST(CircleClosedForm, KnownValues) {
  EXPECT_NEAR(circle_variance_closed_form(0.4, 5).a_rho, 7.0 / 6.0, 1e-15);
  EXPECT_NEAR(circle_variance_closed_form(0.4, 20).var_weight, std::pow(7.0 / 6.0, 21) - 1.0,
              1e-12);
}

TEST(CircleClosedForm, MatchesBinomialEnumeration) {
  for (double rho : {0.1, 0.3, 0.4, 0.45, 0.5, 0.6, 0.8}) {
    for (std::size_t t : {1u, 2u, 5u, 10u, 20u, 40u}) {
      const CircleVarianceReport r = circle_variance_closed_form(rho, t);
      const BinomialMoments e = enumerate_binomial(rho, t);
      EXPECT_NEAR(e.mean_w, 1.0, 1e-9);
      const double scale = std::max(1.0, std::abs(e.var_w));
      EXPECT_NEAR(r.var_weight, e.var_w, 1e-9 * scale) << rho << " " << t;
      EXPECT_NEAR(r.var_weighted_reward, e.var_wr, 1e-9 * std::max(1.0, e.var_wr))
          << rho << " " << t;
      EXPECT_NEAR(r.wis_asymptotic_mse_coeff, e.wis_coeff, 1e-9 * std::max(1.0, e.wis_coeff))
          << rho << " " << t;
    }
  }
}

TEST(CircleClosedForm, GrowthRatioApproachesA) {
  for (double rho : {0.3, 0.4, 0.45, 0.7}) {
    const double a = circle_variance_closed_form(rho, 1).a_rho;
    const double ratio = circle_variance_closed_form(rho, 1001).var_weight /
                         circle_variance_closed_form(rho, 1000).var_weight;
    EXPECT_NEAR(ratio, a, 1e-9);
  }
}

TEST(CircleClosedForm, MonotoneInHorizon) {
  for (double rho : {0.3, 0.4, 0.45}) {
    double prev = circle_variance_closed_form(rho, 1).var_weight;
    for (std::size_t t = 2; t <= 30; ++t) {
      const double cur = circle_variance_closed_form(rho, t).var_weight;
      EXPECT_GT(cur, prev);
      prev = cur;
    }
  }
}

TEST(CircleClosedForm, RejectsBadInputs) {
  EXPECT_THROW(circle_variance_closed_form(0.0, 5), std::invalid_argument);
  EXPECT_THROW(circle_variance_closed_form(1.0, 5), std::invalid_argument);
  EXPECT_THROW(circle_variance_closed_form(0.4, 0), std::invalid_argument);
}

TEST(CircleEmpirical, HalfGivesZeroVariance) {
  const CircleVarianceSample s = circle_variance_empirical(0.5, 10, 100000, 1);
  EXPECT_EQ(s.var_weight, 0.0);
  EXPECT_EQ(s.mean_weight, 1.0);
}

TEST(CircleEmpirical, MatchesClosedFormAt45) {
  const CircleVarianceSample s = circle_variance_empirical(0.45, 10, 1000000, 3);
  const CircleVarianceReport r = circle_variance_closed_form(0.45, 10);
  EXPECT_NEAR(s.var_weight / r.var_weight, 1.0, 0.03);
  EXPECT_NEAR(s.var_weighted_reward / r.var_weighted_reward, 1.0, 0.03);
}

TEST(CircleEmpirical, MeanWeightIsOne) {
  for (double rho : {0.4, 0.45}) {
    const CircleVarianceSample s = circle_variance_empirical(rho, 5, 200000, 8);
    EXPECT_NEAR(s.mean_weight, 1.0, 3.0 * s.mean_weight_se);
  }
}

TEST(CircleEmpirical, SerialAndParallelBitwiseEqual) {
  const std::size_t n = 3 * kVarianceBlock + 17;
  const CircleVarianceSample a = circle_variance_empirical_serial(0.4, 10, n, 5);
  const CircleVarianceSample b = circle_variance_empirical_parallel(0.4, 10, n, 5);
  EXPECT_EQ(a.var_weight, b.var_weight);
  EXPECT_EQ(a.var_weighted_reward, b.var_weighted_reward);
  EXPECT_EQ(a.mean_weight, b.mean_weight);
}

TEST(CircleEmpirical, WisMseMatchesLeadingCoefficient) {
  // Trajectory-wise WIS over n = 10^4 circle trajectories, via F.
  const double rho = 0.45;
  const std::size_t horizon = 5, n = 10000, reps = 2000;
  const double c = (1.0 - rho) / rho;
  double sq = 0.0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    Rng rng(derive_seed(99, rep));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int f = 0;
      for (std::size_t t = 0; t <= horizon; ++t) f += rng.uniform() < rho;
      const double w = std::pow(c, 2.0 * f - static_cast<double>(horizon + 1));
      num += w * f / static_cast<double>(horizon + 1);
      den += w;
    }
    const double err = num / den - (1.0 - rho);
    sq += err * err;
  }
  const double mse_times_n = sq / reps * static_cast<double>(n);
  EXPECT_NEAR(mse_times_n / circle_variance_closed_form(rho, horizon).wis_asymptotic_mse_coeff,
              1.0, 0.1);
}

// ---------------------------------------------------------------------------
// Bellman operator and its inverse
// ---------------------------------------------------------------------------

TEST(ApplyPi, ConstantIsZeroInAverageCase) {
  const Environment env = random_env(5, 2, 1);
  const Eigen::VectorXd f = Eigen::VectorXd::Constant(5, 3.3);
  EXPECT_LE(apply_Pi(view(f), env.mdp, env.target, 1.0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ApplyPi, ValueFunctionGivesRewards) {
  const Environment env = random_env(6, 3, 2);
  const Eigen::VectorXd r = policy_reward_vector(env.mdp, env.target);
  const ValueSolution disc = value_function(env.mdp, env.target, 0.9);
  EXPECT_LE((apply_Pi(view(disc.values), env.mdp, env.target, 0.9) - r).cwiseAbs().maxCoeff(),
            1e-10);
  const ValueSolution avg = value_function(env.mdp, env.target, 1.0);
  const Eigen::VectorXd centered = (r.array() - avg.average_reward).matrix();
  EXPECT_LE((apply_Pi(view(avg.values), env.mdp, env.target, 1.0) - centered).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(ApplyPi, MatchesHandSum) {
  const Environment env = random_env(3, 2, 3);
  const Eigen::VectorXd f = testing::random_vector(3, 4);
  const double gamma = 0.7;
  const Eigen::VectorXd got = apply_Pi(view(f), env.mdp, env.target, gamma);
  for (StateId s = 0; s < 3; ++s) {
    double next = 0.0;
    for (ActionId a = 0; a < 2; ++a) {
      for (StateId s2 = 0; s2 < 3; ++s2) {
        next += env.target.prob(s, a) * env.mdp.transition(s, a, s2) * f(s2);
      }
    }
    EXPECT_NEAR(got(s), f(s) - gamma * next, 1e-15);
  }
}

TEST(InverseBellman, ZeroMapsToZero) {
  const Environment env = random_env(4, 2, 5);
  const Eigen::VectorXd g = Eigen::VectorXd::Zero(4);
  for (double gamma : {0.5, 1.0}) {
    EXPECT_EQ(inverse_bellman(view(g), env.mdp, env.target, gamma).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(InverseBellman, IndicatorMatchesTruncatedSeries) {
  const Environment env = random_env(5, 2, 6);
  const double gamma = 0.8;
  const Eigen::MatrixXd p = policy_transition_matrix(env.mdp, env.target);
  for (StateId target_state = 0; target_state < 5; ++target_state) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(5);
    g(target_state) = 1.0;
    Eigen::VectorXd series = Eigen::VectorXd::Zero(5);
    Eigen::MatrixXd pt = Eigen::MatrixXd::Identity(5, 5);
    double discount = 1.0;
    for (int t = 0; t < 400; ++t) {
      series += discount * pt.col(target_state);
      pt = pt * p;
      discount *= gamma;
    }
    EXPECT_LE((inverse_bellman(view(g), env.mdp, env.target, gamma) - series).cwiseAbs().maxCoeff(),
              1e-10);
  }
}

TEST(InverseBellman, RoundTrip) {
  const Environment env = random_env(7, 3, 7);
  const Eigen::VectorXd dpi = visitation_distribution(env.mdp, env.target, 1.0);
  for (std::uint64_t k = 0; k < 10; ++k) {
    const Eigen::VectorXd g = testing::random_vector(7, k, -2.0, 2.0);
    const Eigen::VectorXd f9 = inverse_bellman(view(g), env.mdp, env.target, 0.9);
    EXPECT_LE((apply_Pi(view(f9), env.mdp, env.target, 0.9) - g).cwiseAbs().maxCoeff(), 1e-10);
    const Eigen::VectorXd f1 = inverse_bellman(view(g), env.mdp, env.target, 1.0);
    const Eigen::VectorXd centered = (g.array() - dpi.dot(g)).matrix();
    EXPECT_LE((apply_Pi(view(f1), env.mdp, env.target, 1.0) - centered).cwiseAbs().maxCoeff(),
              1e-10);
    EXPECT_NEAR(dpi.dot(f1), 0.0, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Identities
// ---------------------------------------------------------------------------

TEST(Theorem8, ExactRatioGivesZero) {
  const Environment env = random_env(5, 2, 8);
  for (double gamma : {1.0, 0.9}) {
    const Eigen::VectorXd ws = exact_ratio(env.mdp, env.behavior, env.target, gamma);
    const IdentityCheck c = check_theorem8(view(ws), env.mdp, env.behavior, env.target, gamma);
    EXPECT_NEAR(c.lhs, 0.0, 1e-12);
    EXPECT_NEAR(c.rhs, 0.0, 1e-12);
  }
}

TEST(Theorem8, RandomWeightsAgree) {
  const Environment env = random_env(5, 3, 9);
  for (std::uint64_t k = 0; k < 10; ++k) {
    const Eigen::VectorXd w = testing::random_vector(5, k, 0.1, 3.0);
    const IdentityCheck c = check_theorem8(view(w), env.mdp, env.behavior, env.target, 0.9);
    EXPECT_NEAR(c.lhs, c.rhs, 1e-8);
  }
}

TEST(Theorem8, UnitWeightGap) {
  const Environment env = random_env(4, 2, 10);
  for (double gamma : {1.0, 0.9}) {
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
    const IdentityCheck c = check_theorem8(view(w), env.mdp, env.behavior, env.target, gamma);
    const Eigen::VectorXd d0 = visitation_distribution(env.mdp, env.behavior, gamma);
    double mismatch = 0.0;
    for (StateId s = 0; s < 4; ++s) {
      for (ActionId a = 0; a < 2; ++a) mismatch += d0(s) * env.target.prob(s, a) * env.mdp.reward(s, a);
    }
    EXPECT_NEAR(c.rhs, expected_reward_exact(env.mdp, env.target, gamma) - mismatch, 1e-12);
    EXPECT_NEAR(c.lhs, c.rhs, 1e-8);
  }
}

TEST(Lemma6, ExactRatioAndConstants) {
  const Environment env = random_env(4, 2, 11);
  const Eigen::VectorXd f = testing::random_vector(4, 1);
  for (double gamma : {1.0, 0.8}) {
    const Eigen::VectorXd ws = exact_ratio(env.mdp, env.behavior, env.target, gamma);
    const IdentityCheck c = check_lemma6(view(ws), view(f), env.mdp, env.behavior, env.target, gamma);
    EXPECT_NEAR(c.lhs, 0.0, 1e-12);
    EXPECT_NEAR(c.rhs, 0.0, 1e-12);
  }
  const Eigen::VectorXd w = testing::random_vector(4, 2, 0.2, 2.0);
  const Eigen::VectorXd cst = Eigen::VectorXd::Constant(4, -1.5);
  const IdentityCheck c = check_lemma6(view(w), view(cst), env.mdp, env.behavior, env.target, 1.0);
  EXPECT_NEAR(c.lhs, 0.0, 1e-12);
  EXPECT_NEAR(c.rhs, 0.0, 1e-12);
}

TEST(Lemma6, RandomPairsAgree) {
  const Environment env = random_env(4, 2, 12);
  for (std::uint64_t k = 0; k < 10; ++k) {
    const Eigen::VectorXd w = testing::random_vector(4, 100 + k, 0.1, 2.5);
    const Eigen::VectorXd f = testing::random_vector(4, 200 + k, -3.0, 3.0);
    for (double gamma : {1.0, 0.95, 0.5}) {
      const IdentityCheck c = check_lemma6(view(w), view(f), env.mdp, env.behavior, env.target, gamma);
      EXPECT_NEAR(c.lhs, c.rhs, 1e-8);
    }
  }
}

TEST(SupNorm, WitnessReachesDensityError) {
  const Environment env = random_env(6, 2, 13);
  for (double gamma : {1.0, 0.85}) {
    for (std::uint64_t k = 0; k < 5; ++k) {
      const Eigen::VectorXd w = testing::random_vector(6, k, 0.2, 2.0);
      const SupNormWitness r = sup_norm_witness(view(w), env.mdp, env.behavior, env.target, gamma);
      EXPECT_NEAR(r.density_witness, r.density_error, 1e-8);
      EXPECT_NEAR(r.ratio_witness, r.ratio_error, 1e-8);
      EXPECT_GT(r.density_error, 0.0);
    }
  }
}

// ---------------------------------------------------------------------------
// Rao-Blackwell chain
// ---------------------------------------------------------------------------

TEST(RaoBlackwell, AllThreeMatchExact) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Environment env = random_env(3, 2, seed, seed % 2 ? 0.6 : 1.0);
    for (double gamma : {1.0, 0.9}) {
      const RaoBlackwellReport r =
          rao_blackwell_enumeration(env.mdp, env.behavior, env.target, gamma, 4);
      EXPECT_NEAR(r.trajectory_wise, r.exact, 1e-10);
      EXPECT_NEAR(r.step_wise, r.exact, 1e-10);
      EXPECT_NEAR(r.stationary, r.exact, 1e-10);
      EXPECT_GT(r.paths, 0u);
    }
  }
}

TEST(RaoBlackwell, RefusesHugeEnumerations) {
  const Environment env = random_env(10, 4, 1);
  EXPECT_THROW(rao_blackwell_enumeration(env.mdp, env.behavior, env.target, 1.0, 12),
               std::invalid_argument);
}

}  // namespace
}  // namespace sdre
