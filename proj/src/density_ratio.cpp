#include "sdre/density_ratio.hpp"

#include "sdre/kernels.hpp"
#include "sdre/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace sdre {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

void check_weights(std::span<const WeightedSample> samples) {
  if (samples.empty()) throw std::invalid_argument("rkhs_loss: no samples");
  double total = 0.0;
  for (const WeightedSample& x : samples) {
    if (!(x.weight >= 0.0)) throw std::invalid_argument("rkhs_loss: negative sample weight");
    total += x.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("rkhs_loss: sample weights must sum to 1");
  }
}

double median_of(std::vector<double> values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

std::string to_string(KernelKind kind) {
  return kind == KernelKind::kDelta ? "delta" : "gaussian_rbf";
}

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "delta") return KernelKind::kDelta;
  if (name == "gaussian_rbf" || name == "rbf") return KernelKind::kGaussianRbf;
  throw std::invalid_argument("unknown kernel '" + name + "'");
}

BandwidthResult median_bandwidth(const Eigen::MatrixXd& points, std::uint64_t seed) {
  if (points.rows() < 2) return {1.0, true};
  Eigen::MatrixXd subset;
  const auto n = static_cast<std::size_t>(points.rows());
  if (n > kMedianSubsample) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < kMedianSubsample; ++i) {
      std::swap(order[i], order[i + rng.index(n - i)]);
    }
    order.resize(kMedianSubsample);
    std::sort(order.begin(), order.end());
    subset.resize(idx(kMedianSubsample), points.cols());
    for (std::size_t i = 0; i < kMedianSubsample; ++i) subset.row(idx(i)) = points.row(idx(order[i]));
  } else {
    subset = points;
  }
  std::vector<double> dist = kernels::pairwise_distances_parallel(subset);
  const double med = median_of(dist);
  if (med > 0.0) return {med, false};
  // Heavily repeated discrete states can put the median on a tie at zero.
  std::erase_if(dist, [](double d) { return !(d > 0.0); });
  if (dist.empty()) return {1.0, true};
  return {median_of(std::move(dist)), false};
}

BandwidthResult resolve_bandwidth(std::span<const TransitionSample> samples,
                                  const Eigen::MatrixXd& embedding, const KernelSpec& kernel,
                                  std::uint64_t seed) {
  if (kernel.kind == KernelKind::kDelta) return {1.0, false};
  if (kernel.bandwidth) {
    if (!(*kernel.bandwidth > 0.0) || !std::isfinite(*kernel.bandwidth)) {
      throw std::invalid_argument("kernel bandwidth must be positive");
    }
    return {*kernel.bandwidth, false};
  }
  if (samples.empty()) throw std::invalid_argument("resolve_bandwidth: no samples");
  Eigen::MatrixXd points(idx(samples.size()), embedding.cols());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    points.row(idx(i)) = embedding.row(idx(samples[i].s_next));
  }
  return median_bandwidth(points, seed);
}

Eigen::MatrixXd state_gram(KernelKind kind, double bandwidth, const Eigen::MatrixXd& embedding) {
  if (kind == KernelKind::kDelta) {
    return Eigen::MatrixXd::Identity(embedding.rows(), embedding.rows());
  }
  if (!(bandwidth > 0.0)) throw std::invalid_argument("state_gram: bandwidth must be positive");
  return kernels::gram_parallel(embedding, bandwidth);
}

FeatureMap FeatureMap::one_hot(std::size_t n_states) {
  if (n_states == 0) throw std::invalid_argument("FeatureMap::one_hot: no states");
  FeatureMap f;
  f.kind_ = FeatureKind::kOneHot;
  f.table_ = Eigen::MatrixXd::Identity(idx(n_states), idx(n_states));
  return f;
}

FeatureMap FeatureMap::random_fourier(const Eigen::MatrixXd& embedding, std::size_t dim,
                                      double bandwidth, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("FeatureMap::random_fourier: dim must be positive");
  if (!(bandwidth > 0.0)) {
    throw std::invalid_argument("FeatureMap::random_fourier: bandwidth must be positive");
  }
  Rng rng(seed);
  Eigen::MatrixXd omega(embedding.cols(), idx(dim));
  for (Index j = 0; j < omega.cols(); ++j) {
    for (Index i = 0; i < omega.rows(); ++i) omega(i, j) = rng.normal() / bandwidth;
  }
  Eigen::VectorXd phase(idx(dim));
  for (Index j = 0; j < phase.size(); ++j) phase(j) = 2.0 * std::numbers::pi * rng.uniform();
  return random_fourier_from(embedding, omega, phase, bandwidth, seed);
}

FeatureMap FeatureMap::random_fourier_from(const Eigen::MatrixXd& embedding,
                                           const Eigen::MatrixXd& omega,
                                           const Eigen::VectorXd& phase, double bandwidth,
                                           std::uint64_t seed) {
  if (omega.rows() != embedding.cols() || omega.cols() != phase.size() || phase.size() == 0) {
    throw std::invalid_argument("FeatureMap::random_fourier_from: inconsistent shapes");
  }
  FeatureMap f;
  f.kind_ = FeatureKind::kRandomFourier;
  f.embedding_ = embedding;
  f.omega_ = omega;
  f.phase_ = phase;
  f.bandwidth_ = bandwidth;
  f.seed_ = seed;
  const double scale = std::sqrt(2.0 / static_cast<double>(phase.size()));
  f.table_ = ((embedding * omega).rowwise() + phase.transpose()).array().cos() * scale;
  if (!f.table_.allFinite()) throw std::invalid_argument("random Fourier features not finite");
  return f;
}

std::string to_string(FeatureKind kind) {
  return kind == FeatureKind::kOneHot ? "one_hot" : "random_fourier";
}

std::string to_string(Link link) {
  return link == Link::kLinearClipped ? "linear_clipped" : "exponential";
}

Link parse_link(const std::string& name) {
  if (name == "linear_clipped") return Link::kLinearClipped;
  if (name == "exponential" || name == "exp") return Link::kExponential;
  throw std::invalid_argument("unknown link '" + name + "'");
}

double RatioModel::raw(StateId s) const {
  const double x = features.table().row(idx(s)).dot(theta);
  return link == Link::kExponential ? std::exp(x) : std::max(x, clip_floor);
}

Eigen::VectorXd RatioModel::raw_values() const {
  const Eigen::VectorXd x = features.table() * theta;
  if (link == Link::kExponential) return x.array().exp();
  return x.array().max(clip_floor);
}

Eigen::VectorXd RatioModel::values() const { return raw_values() / normalization; }

Eigen::VectorXd RatioModel::link_derivative() const {
  const Eigen::VectorXd x = features.table() * theta;
  if (link == Link::kExponential) return x.array().exp();
  return (x.array() > clip_floor).cast<double>();
}

RatioModel tabular_model(const Eigen::VectorXd& w, double clip_floor) {
  RatioModel m{FeatureMap::one_hot(static_cast<std::size_t>(w.size())), w,
               Link::kLinearClipped, clip_floor, 1.0};
  return m;
}

double delta_term(const WeightedSample& sample, std::span<const double> w) {
  if (sample.dummy) return 1.0 - w[sample.s_next];
  return w[sample.s] * sample.beta - w[sample.s_next];
}

double rkhs_loss_grouped(std::span<const double> w, std::span<const WeightedSample> samples,
                         const Eigen::MatrixXd& gram) {
  check_weights(samples);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(gram.rows());
  for (const WeightedSample& x : samples) u(idx(x.s_next)) += x.weight * delta_term(x, w);
  return std::max(0.0, u.dot(gram * u));
}

double rkhs_loss(std::span<const double> w, std::span<const WeightedSample> samples,
                 const KernelSpec& kernel, const Eigen::MatrixXd& embedding) {
  check_weights(samples);
  if (kernel.kind == KernelKind::kDelta) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(idx(w.size()));
    for (const WeightedSample& x : samples) u(idx(x.s_next)) += x.weight * delta_term(x, w);
    return u.squaredNorm();
  }
  double h = 0.0;
  Eigen::MatrixXd points(idx(samples.size()), embedding.cols());
  Eigen::VectorXd v(idx(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    points.row(idx(i)) = embedding.row(idx(samples[i].s_next));
    v(idx(i)) = samples[i].weight * delta_term(samples[i], w);
  }
  if (kernel.bandwidth) {
    h = *kernel.bandwidth;
  } else {
    h = median_bandwidth(points).bandwidth;
  }
  if (!(h > 0.0)) throw std::invalid_argument("rkhs_loss: bandwidth must be positive");
  return std::max(0.0, kernels::quadratic_form_parallel(points, v, h));
}

double rkhs_loss(const RatioModel& model, std::span<const WeightedSample> samples,
                 const KernelSpec& kernel, const Eigen::MatrixXd& embedding) {
  const Eigen::VectorXd w = model.values();
  return rkhs_loss(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())), samples,
                   kernel, embedding);
}

LossGradient normalized_loss_gradient(const RatioModel& model,
                                      std::span<const WeightedSample> samples,
                                      const Eigen::MatrixXd& gram) {
  const Index n = gram.rows();
  const Eigen::VectorXd w = model.raw_values();
  double real_mass = 0.0;
  double z = 0.0;
  for (const WeightedSample& x : samples) {
    if (x.dummy) continue;
    real_mass += x.weight;
    z += x.weight * w(idx(x.s));
  }
  if (!(real_mass > 0.0)) {
    throw std::invalid_argument("normalized_loss_gradient: no real samples to normalize over");
  }
  z /= real_mass;

  auto scaled_delta = [&](const WeightedSample& x) {
    if (x.dummy) return 1.0 - w(idx(x.s_next)) / z;
    return (w(idx(x.s)) * x.beta - w(idx(x.s_next))) / z;
  };

  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  for (const WeightedSample& x : samples) u(idx(x.s_next)) += x.weight * scaled_delta(x);
  const Eigen::VectorXd ku = gram * u;

  LossGradient out;
  out.loss = std::max(0.0, u.dot(ku));
  out.z = z;

  // Chain rule through Delta/z and through z itself, accumulated per state.
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(n);
  double through_z = 0.0;
  for (const WeightedSample& x : samples) {
    const double c = 2.0 * x.weight * ku(idx(x.s_next));
    if (x.dummy) {
      coef(idx(x.s_next)) -= c / z;
      through_z += c * w(idx(x.s_next)) / (z * z);
    } else {
      coef(idx(x.s)) += c * x.beta / z;
      coef(idx(x.s_next)) -= c / z;
      through_z -= c * scaled_delta(x) / z;
    }
  }
  for (const WeightedSample& x : samples) {
    if (!x.dummy) coef(idx(x.s)) += through_z * x.weight / real_mass;
  }
  out.gradient =
      model.features.table().transpose() * coef.cwiseProduct(model.link_derivative());
  return out;
}

std::vector<WeightedSample> empirical_samples(std::span<const TransitionSample> samples,
                                              const StochasticPolicy& behavior,
                                              const StochasticPolicy& target) {
  if (samples.empty()) throw std::invalid_argument("empirical_samples: no samples");
  std::vector<WeightedSample> out;
  out.reserve(samples.size());
  const double p = 1.0 / static_cast<double>(samples.size());
  for (const TransitionSample& x : samples) {
    const double b = behavior.prob(x.s, x.a);
    if (!(b > 0.0)) throw std::invalid_argument("empirical_samples: zero behavior probability");
    out.push_back({x.s, x.s_next, target.prob(x.s, x.a) / b, p, false});
  }
  return out;
}

std::vector<WeightedSample> population_samples(const TabularMdp& mdp,
                                               const StochasticPolicy& behavior,
                                               const StochasticPolicy& target, double gamma) {
  check_compatible(mdp, behavior);
  check_compatible(mdp, target);
  const Eigen::VectorXd d = visitation_distribution(mdp, behavior, gamma);
  const double scale = gamma < 1.0 ? gamma : 1.0;
  std::vector<WeightedSample> out;
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      const double pa = behavior.prob(s, a);
      if (!(pa > 0.0) || !(d(idx(s)) > 0.0)) continue;
      const double beta = target.prob(s, a) / pa;
      for (StateId s2 = 0; s2 < mdp.num_states(); ++s2) {
        const double p = scale * d(idx(s)) * pa * mdp.transition(s, a, s2);
        if (p > 0.0) out.push_back({s, s2, beta, p, false});
      }
    }
  }
  if (gamma < 1.0) {
    const auto d0 = mdp.initial_distribution();
    for (StateId s = 0; s < mdp.num_states(); ++s) {
      if (d0[s] > 0.0) out.push_back({s, s, 1.0, (1.0 - gamma) * d0[s], true});
    }
  }
  return out;
}

ResidualOperator residual_operator(const TabularMdp& mdp, const StochasticPolicy& behavior,
                                   const StochasticPolicy& target, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("residual_operator: gamma must lie in (0, 1]");
  }
  const Eigen::MatrixXd p_target = policy_transition_matrix(mdp, target);
  const Eigen::MatrixXd p_behavior = policy_transition_matrix(mdp, behavior);
  ResidualOperator op;
  op.behavior_visitation = visitation_distribution(mdp, behavior, gamma);
  const Eigen::VectorXd& d = op.behavior_visitation;
  const Index n = d.size();
  if (gamma == 1.0) {
    op.a = p_target.transpose() * d.asDiagonal();
    op.a.diagonal() -= d;
    op.b = Eigen::VectorXd::Zero(n);
  } else {
    const Eigen::VectorXd d0 = mdp.initial_vector();
    const Eigen::VectorXd next_marginal = p_behavior.transpose() * d;
    op.a = gamma * (p_target.transpose() * d.asDiagonal());
    op.a.diagonal() -= gamma * next_marginal + (1.0 - gamma) * d0;
    op.b = (1.0 - gamma) * d0;
  }
  return op;
}

double minimax_loss_functional(std::span<const double> w, std::span<const double> f,
                               const TabularMdp& mdp, const StochasticPolicy& behavior,
                               const StochasticPolicy& target, double gamma) {
  const std::size_t n = mdp.num_states();
  if (w.size() != n || f.size() != n) {
    throw std::invalid_argument("minimax_loss_functional: tables must have one entry per state");
  }
  const ResidualOperator op = residual_operator(mdp, behavior, target, gamma);
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), idx(n));
  const Eigen::Map<const Eigen::VectorXd> fv(f.data(), idx(n));
  return fv.dot(op.a * wv + op.b);
}

ExactSolution tabular_exact_solve(const TabularMdp& mdp, const StochasticPolicy& behavior,
                                  const StochasticPolicy& target, double gamma,
                                  double clip_floor) {
  const ResidualOperator op = residual_operator(mdp, behavior, target, gamma);
  const Eigen::VectorXd& c = op.behavior_visitation;
  const Index n = c.size();

  std::ostringstream missing;
  bool any_missing = false;
  for (Index s = 0; s < n; ++s) {
    if (!(c(s) > 0.0)) {
      missing << (any_missing ? ", " : "") << s;
      any_missing = true;
    }
  }
  if (any_missing) {
    throw std::domain_error("tabular_exact_solve: behavior never visits state(s) " +
                            missing.str());
  }

  // Null-space method: w = w_p + N y with c^T N = 0 and c^T w_p = 1.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd basis = q.rightCols(n - 1);
  const Eigen::VectorXd particular = c / c.squaredNorm();
  Eigen::VectorXd w = particular;
  if (n > 1) {
    const Eigen::MatrixXd reduced = op.a * basis;
    const Eigen::VectorXd rhs = -(op.a * particular + op.b);
    w += basis * reduced.completeOrthogonalDecomposition().solve(rhs);
  }

  ExactSolution out;
  out.residual_norm = (op.a * w + op.b).norm();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.a);
  const Eigen::VectorXd sv = svd.singularValues();
  const double cutoff = 1e-10 * (sv.size() ? sv(0) : 0.0);
  out.null_space_dim = static_cast<std::size_t>((sv.array() <= cutoff).count());

  if ((w.array() < clip_floor).any()) {
    out.clipped = true;
    w = w.array().max(clip_floor);
  }
  w /= c.dot(w);
  out.w = w;
  out.model = tabular_model(w, clip_floor);
  return out;
}

Eigen::VectorXd exact_ratio(const TabularMdp& mdp, const StochasticPolicy& behavior,
                            const StochasticPolicy& target, double gamma) {
  const Eigen::VectorXd dt = visitation_distribution(mdp, target, gamma);
  const Eigen::VectorXd db = visitation_distribution(mdp, behavior, gamma);
  if ((db.array() <= 0.0).any()) {
    throw std::domain_error("exact_ratio: behavior visitation has zero entries");
  }
  return dt.cwiseQuotient(db);
}

namespace {

constexpr std::size_t kMaxBatchRedraws = 1000;

Eigen::VectorXd default_theta(const FeatureMap& features, Link link) {
  if (link == Link::kExponential) return Eigen::VectorXd::Zero(idx(features.dim()));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(features.table().rows());
  return features.table().colPivHouseholderQr().solve(ones);
}

/// Shared loop for both cases. `draw` holds sampling weights over `pool`
/// (empty means uniform); `norm_weight` gives each real pool entry its weight
/// in the final normalization constant.
FitResult run_sgd(const std::vector<WeightedSample>& pool, const std::vector<double>& draw,
                  const std::vector<double>& norm_weight, const FeatureMap& features,
                  const Eigen::MatrixXd& gram, double bandwidth, const SgdHyper& hyper) {
  if (hyper.batch_size == 0) throw std::invalid_argument("sgd: batch size must be positive");
  if (!(hyper.step_size > 0.0) || !(hyper.decay > 0.0)) {
    throw std::invalid_argument("sgd: step size and decay must be positive");
  }
  FitResult result;
  result.bandwidth = bandwidth;
  RatioModel model;
  model.features = features;
  model.link = hyper.link;
  model.clip_floor = hyper.clip_floor;
  model.theta = hyper.initial_theta ? *hyper.initial_theta : default_theta(features, hyper.link);
  if (static_cast<std::size_t>(model.theta.size()) != features.dim()) {
    throw std::invalid_argument("sgd: initial theta has the wrong dimension");
  }

  Rng rng(hyper.seed);
  std::optional<AliasTable> alias;
  if (!draw.empty()) alias.emplace(draw);
  auto draw_one = [&]() { return alias ? alias->sample(rng) : rng.index(pool.size()); };

  const double p = 1.0 / static_cast<double>(hyper.batch_size);
  std::vector<WeightedSample> batch(hyper.batch_size);
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(model.theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(model.theta.size());
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  double lr = hyper.step_size;
  result.loss_trace.reserve(hyper.iterations);

  for (std::size_t it = 0; it < hyper.iterations; ++it) {
    bool has_real = false;
    for (std::size_t attempt = 0; !has_real; ++attempt) {
      if (attempt == kMaxBatchRedraws) {
        throw std::runtime_error("sgd: minibatches contain no real transitions");
      }
      for (auto& x : batch) {
        x = pool[draw_one()];
        x.weight = p;
        has_real = has_real || !x.dummy;
      }
    }
    const LossGradient lg = normalized_loss_gradient(model, batch, gram);
    result.loss_trace.push_back(lg.loss);
    if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
      throw FitDivergedError("sgd: loss diverged at iteration " + std::to_string(it),
                             std::move(result.loss_trace));
    }
    if (hyper.optimizer == Optimizer::kAdam) {
      m1 = kBeta1 * m1 + (1.0 - kBeta1) * lg.gradient;
      m2 = kBeta2 * m2 + (1.0 - kBeta2) * lg.gradient.cwiseAbs2();
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(it + 1));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(it + 1));
      model.theta.array() -=
          lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + kAdamEps);
    } else {
      model.theta -= lr * lg.gradient;
    }
    if (!model.theta.allFinite()) {
      throw FitDivergedError("sgd: parameters diverged at iteration " + std::to_string(it),
                             std::move(result.loss_trace));
    }
    lr *= hyper.decay;
  }

  const Eigen::VectorXd w = model.raw_values();
  double z = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].dummy) continue;
    z += norm_weight[i] * w(idx(pool[i].s));
    mass += norm_weight[i];
  }
  model.normalization = z / mass;
  if (!(model.normalization > 0.0) || !std::isfinite(model.normalization)) {
    throw FitDivergedError("sgd: degenerate normalization constant",
                           std::move(result.loss_trace));
  }
  result.model = std::move(model);
  return result;
}

void check_features(const FeatureMap& features, const StochasticPolicy& behavior,
                    const Eigen::MatrixXd& embedding) {
  if (features.num_states() != behavior.num_states() ||
      static_cast<std::size_t>(embedding.rows()) != behavior.num_states()) {
    throw std::invalid_argument("sgd: features and embedding must cover every state");
  }
}

}  // namespace

FitResult sgd_fit_average(std::span<const TransitionSample> samples,
                          const StochasticPolicy& behavior, const StochasticPolicy& target,
                          const FeatureMap& features, const KernelSpec& kernel,
                          const Eigen::MatrixXd& embedding, const SgdHyper& hyper) {
  check_features(features, behavior, embedding);
  const std::vector<WeightedSample> pool = empirical_samples(samples, behavior, target);
  for (const WeightedSample& x : pool) {
    if (!std::isfinite(x.beta)) throw std::invalid_argument("sgd: policy ratio is not finite");
  }
  const BandwidthResult bw = resolve_bandwidth(samples, embedding, kernel, hyper.seed);
  const Eigen::MatrixXd gram = state_gram(kernel.kind, bw.bandwidth, embedding);
  const std::vector<double> norm_weight(pool.size(), 1.0);
  return run_sgd(pool, {}, norm_weight, features, gram, bw.bandwidth, hyper);
}

FitResult sgd_fit_discounted(std::span<const TransitionSample> samples,
                             std::span<const StateId> initial_states,
                             const StochasticPolicy& behavior, const StochasticPolicy& target,
                             double gamma, const FeatureMap& features, const KernelSpec& kernel,
                             const Eigen::MatrixXd& embedding, const SgdHyper& hyper) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("sgd_fit_discounted: gamma must lie in (0, 1)");
  }
  if (initial_states.empty()) throw std::invalid_argument("sgd_fit_discounted: no initial states");
  check_features(features, behavior, embedding);
  std::vector<WeightedSample> pool = empirical_samples(samples, behavior, target);
  std::vector<double> draw;
  std::vector<double> norm_weight;
  draw.reserve(pool.size() + initial_states.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(pool[i].beta)) throw std::invalid_argument("sgd: policy ratio is not finite");
    const double g = std::pow(gamma, static_cast<double>(samples[i].t));
    draw.push_back(gamma * g);
    norm_weight.push_back(g);
  }
  for (StateId s0 : initial_states) {
    if (s0 >= behavior.num_states()) throw std::invalid_argument("sgd: initial state out of range");
    pool.push_back({s0, s0, 1.0, 0.0, true});
    draw.push_back(1.0);
    norm_weight.push_back(0.0);
  }
  const BandwidthResult bw = resolve_bandwidth(samples, embedding, kernel, hyper.seed);
  const Eigen::MatrixXd gram = state_gram(kernel.kind, bw.bandwidth, embedding);
  return run_sgd(pool, draw, norm_weight, features, gram, bw.bandwidth, hyper);
}

FitResult sgd_fit(std::span<const Trajectory> trajectories, const StochasticPolicy& behavior,
                  const StochasticPolicy& target, double gamma, const FeatureMap& features,
                  const KernelSpec& kernel, const Eigen::MatrixXd& embedding,
                  const SgdHyper& hyper) {
  std::vector<TransitionSample> flat;
  std::vector<StateId> starts;
  for (const Trajectory& traj : trajectories) {
    if (traj.steps.empty()) continue;
    starts.push_back(traj.steps.front().s);
    flat.insert(flat.end(), traj.steps.begin(), traj.steps.end());
  }
  if (gamma == 1.0) {
    return sgd_fit_average(flat, behavior, target, features, kernel, embedding, hyper);
  }
  return sgd_fit_discounted(flat, starts, behavior, target, gamma, features, kernel, embedding,
                            hyper);
}

}  // namespace sdre
