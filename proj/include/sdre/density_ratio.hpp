#pragma once

#include "sdre/mdp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdre {

// ---------------------------------------------------------------------------
// Kernels on next states
// ---------------------------------------------------------------------------

enum class KernelKind { kDelta, kGaussianRbf };

/// Discriminator kernel. The delta kernel is k(s, s') = 1[s == s'] on state
/// ids; the RBF kernel exp(-||x - x'||^2 / (2 h^2)) acts on state embeddings.
/// An empty bandwidth means the median heuristic.
struct KernelSpec {
  KernelKind kind = KernelKind::kDelta;
  std::optional<double> bandwidth;

  static KernelSpec delta() { return {}; }
  static KernelSpec rbf(double h) { return {KernelKind::kGaussianRbf, h}; }
  static KernelSpec rbf_median() { return {KernelKind::kGaussianRbf, std::nullopt}; }
};

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& name);

struct BandwidthResult {
  double bandwidth = 1.0;
  bool fallback = false;  ///< every point coincided, 1.0 was used
};

inline constexpr std::size_t kMedianSubsample = 2000;

/// Median pairwise distance between the rows of `points` (a seeded subsample
/// of kMedianSubsample rows when there are more). Falls back to 1.0 when all
/// distances are zero.
BandwidthResult median_bandwidth(const Eigen::MatrixXd& points, std::uint64_t seed = 0);

/// Median heuristic over the embedded next states of `samples`; a fixed
/// bandwidth is validated and passed through. Delta kernels return 1.0.
BandwidthResult resolve_bandwidth(std::span<const TransitionSample> samples,
                                  const Eigen::MatrixXd& embedding, const KernelSpec& kernel,
                                  std::uint64_t seed = 0);

/// State-by-state Gram matrix G(s, s') for a resolved kernel.
Eigen::MatrixXd state_gram(KernelKind kind, double bandwidth, const Eigen::MatrixXd& embedding);

// ---------------------------------------------------------------------------
// Parameterized ratio models
// ---------------------------------------------------------------------------

enum class FeatureKind { kOneHot, kRandomFourier };

/// Tabulated feature map phi(s). Random Fourier features are
/// sqrt(2 / D) cos(omega^T x_s + b) with omega ~ N(0, I / h^2) and
/// b ~ U[0, 2 pi), built from a state embedding.
class FeatureMap {
 public:
  static FeatureMap one_hot(std::size_t n_states);
  static FeatureMap random_fourier(const Eigen::MatrixXd& embedding, std::size_t dim,
                                   double bandwidth, std::uint64_t seed);
  /// Rebuild from stored parameters (used by deserialization).
  static FeatureMap random_fourier_from(const Eigen::MatrixXd& embedding,
                                        const Eigen::MatrixXd& omega,
                                        const Eigen::VectorXd& phase, double bandwidth,
                                        std::uint64_t seed);

  FeatureKind kind() const { return kind_; }
  std::size_t dim() const { return static_cast<std::size_t>(table_.cols()); }
  std::size_t num_states() const { return static_cast<std::size_t>(table_.rows()); }
  /// n_states x dim.
  const Eigen::MatrixXd& table() const { return table_; }

  const Eigen::MatrixXd& embedding() const { return embedding_; }
  const Eigen::MatrixXd& omega() const { return omega_; }
  const Eigen::VectorXd& phase() const { return phase_; }
  double bandwidth() const { return bandwidth_; }
  std::uint64_t seed() const { return seed_; }

 private:
  FeatureKind kind_ = FeatureKind::kOneHot;
  Eigen::MatrixXd table_;
  Eigen::MatrixXd embedding_;
  Eigen::MatrixXd omega_;
  Eigen::VectorXd phase_;
  double bandwidth_ = 0.0;
  std::uint64_t seed_ = 0;
};

std::string to_string(FeatureKind kind);

enum class Link { kLinearClipped, kExponential };

std::string to_string(Link link);
Link parse_link(const std::string& name);

inline constexpr double kDefaultClipFloor = 1e-6;

/// w(s) = link(theta^T phi(s)) / normalization, with link either
/// max(., clip_floor) or exp(.). The stored normalization makes the mean of w
/// under the behavior data equal to one.
struct RatioModel {
  FeatureMap features;
  Eigen::VectorXd theta;
  Link link = Link::kExponential;
  double clip_floor = kDefaultClipFloor;
  double normalization = 1.0;

  /// link(theta^T phi(s)) before dividing by `normalization`.
  double raw(StateId s) const;
  double operator()(StateId s) const { return raw(s) / normalization; }
  /// Raw values for every state.
  Eigen::VectorXd raw_values() const;
  /// Normalized values for every state.
  Eigen::VectorXd values() const;
  /// d raw(s) / d(theta^T phi(s)) for every state.
  Eigen::VectorXd link_derivative() const;
};

/// One-hot model holding the table w directly (linear link).
RatioModel tabular_model(const Eigen::VectorXd& w, double clip_floor = kDefaultClipFloor);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// A transition with its V-statistic weight. Real samples carry
/// Delta = w(s) beta - w(s'); dummy samples (discounted augmentation) carry
/// Delta = 1 - w(s') with s' = s0, and `s`/`beta` unused.
struct WeightedSample {
  StateId s = 0;
  StateId s_next = 0;
  double beta = 1.0;
  double weight = 0.0;
  bool dummy = false;
};

/// Delta(w; s, a, s') for a single sample given a table of w.
double delta_term(const WeightedSample& sample, std::span<const double> w);

/// V-statistic sum_{i,j} p_i p_j Delta_i Delta_j k(s'_i, s'_j) for a table of
/// w. Weights must sum to one. Delta kernels group by next state; RBF kernels
/// use the parallel pointwise quadratic form over embedded next states.
double rkhs_loss(std::span<const double> w, std::span<const WeightedSample> samples,
                 const KernelSpec& kernel, const Eigen::MatrixXd& embedding);
double rkhs_loss(const RatioModel& model, std::span<const WeightedSample> samples,
                 const KernelSpec& kernel, const Eigen::MatrixXd& embedding);

/// Same loss via a precomputed state Gram matrix, grouped by next state.
double rkhs_loss_grouped(std::span<const double> w, std::span<const WeightedSample> samples,
                         const Eigen::MatrixXd& gram);

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
  double z = 1.0;  ///< weighted mean of w over the real source states
};

/// D(w_theta / z) and its gradient in theta, where z is the p-weighted mean of
/// w_theta(s) over the real samples.
LossGradient normalized_loss_gradient(const RatioModel& model,
                                      std::span<const WeightedSample> samples,
                                      const Eigen::MatrixXd& gram);

/// Transitions with beta and uniform weights 1/m.
std::vector<WeightedSample> empirical_samples(std::span<const TransitionSample> samples,
                                              const StochasticPolicy& behavior,
                                              const StochasticPolicy& target);

/// Exact population samples: every (s, a, s') with weight
/// d_pi0(s) pi0(a|s) T(s'|s,a) for gamma == 1; for gamma < 1 those weights are
/// scaled by gamma and one dummy per s0 with weight (1 - gamma) d0(s0) is added.
std::vector<WeightedSample> population_samples(const TabularMdp& mdp,
                                               const StochasticPolicy& behavior,
                                               const StochasticPolicy& target, double gamma);

/// Population residual L(w, .) = A w + b as a vector over s', so that
/// L(w, f) = f^T (A w + b).
struct ResidualOperator {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd behavior_visitation;  ///< d_pi0
};

ResidualOperator residual_operator(const TabularMdp& mdp, const StochasticPolicy& behavior,
                                   const StochasticPolicy& target, double gamma);

/// Exact population L(w, f) for tables w and f.
double minimax_loss_functional(std::span<const double> w, std::span<const double> f,
                               const TabularMdp& mdp, const StochasticPolicy& behavior,
                               const StochasticPolicy& target, double gamma);

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

struct ExactSolution {
  RatioModel model;
  Eigen::VectorXd w;          ///< normalized so that d_pi0^T w == 1
  bool clipped = false;       ///< some coordinate fell below the clip floor
  double residual_norm = 0.0; ///< ||A w + b|| before clipping
  std::size_t null_space_dim = 0;  ///< numerical nullity of A
};

/// Minimizes ||A w + b|| subject to d_pi0^T w = 1 with the null-space method
/// (QR of the constraint, least squares on the complement). Throws
/// std::domain_error if some state has zero behavior visitation and
/// NonErgodicError when the average-reward chain is not ergodic.
ExactSolution tabular_exact_solve(const TabularMdp& mdp, const StochasticPolicy& behavior,
                                  const StochasticPolicy& target, double gamma,
                                  double clip_floor = kDefaultClipFloor);

/// Exact ratio d_pi / d_pi0 from the visitation oracles (test reference).
Eigen::VectorXd exact_ratio(const TabularMdp& mdp, const StochasticPolicy& behavior,
                            const StochasticPolicy& target, double gamma);

enum class Optimizer { kSgd, kAdam };

struct SgdHyper {
  double step_size = 1e-2;
  double decay = 0.999;  ///< step size multiplier per iteration
  std::size_t batch_size = 256;
  std::size_t iterations = 5000;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kSgd;
  Link link = Link::kExponential;
  double clip_floor = kDefaultClipFloor;
  /// Defaults to w == 1: theta = 0 for the exponential link, least squares
  /// phi theta = 1 for the clipped linear link.
  std::optional<Eigen::VectorXd> initial_theta;
};

struct FitResult {
  RatioModel model;
  std::vector<double> loss_trace;  ///< minibatch loss before each update
  double bandwidth = 1.0;
};

class FitDivergedError : public std::runtime_error {
 public:
  FitDivergedError(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Minibatch gradient descent on D(w_theta / z) with uniform minibatches
/// (average-reward case). The returned model is normalized to mean one over
/// the source states of `samples`.
FitResult sgd_fit_average(std::span<const TransitionSample> samples,
                          const StochasticPolicy& behavior, const StochasticPolicy& target,
                          const FeatureMap& features, const KernelSpec& kernel,
                          const Eigen::MatrixXd& embedding, const SgdHyper& hyper);

/// Discounted case: one dummy transition per entry of `initial_states`, and
/// minibatch indices drawn with probability proportional to gamma^(t+1)
/// (t = -1 for dummies). The model is normalized to mean one under the
/// gamma^t-weighted source states.
FitResult sgd_fit_discounted(std::span<const TransitionSample> samples,
                             std::span<const StateId> initial_states,
                             const StochasticPolicy& behavior, const StochasticPolicy& target,
                             double gamma, const FeatureMap& features, const KernelSpec& kernel,
                             const Eigen::MatrixXd& embedding, const SgdHyper& hyper);

/// Flattens trajectories and dispatches on gamma (average for gamma == 1).
FitResult sgd_fit(std::span<const Trajectory> trajectories, const StochasticPolicy& behavior,
                  const StochasticPolicy& target, double gamma, const FeatureMap& features,
                  const KernelSpec& kernel, const Eigen::MatrixXd& embedding,
                  const SgdHyper& hyper);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string ratio_model_to_json(const RatioModel& model);
RatioModel ratio_model_from_json(const std::string& text);
void save_ratio_model(const std::string& path, const RatioModel& model);
RatioModel load_ratio_model(const std::string& path);

}  // namespace sdre
