#include "sdre/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sdre::kernels {

namespace {

using Index = Eigen::Index;

double row_partial(const Eigen::MatrixXd& x, const Eigen::VectorXd& v, Index i, double h) {
  // Row i contributes its diagonal term plus twice the strict lower triangle.
  double acc = 0.0;
  for (Index j = 0; j < i; ++j) acc += v(j) * rbf((x.row(i) - x.row(j)).squaredNorm(), h);
  return v(i) * (v(i) + 2.0 * acc);
}

double row_product(const Eigen::MatrixXd& x, const Eigen::VectorXd& v, Index i, double h) {
  double acc = 0.0;
  for (Index j = 0; j < x.rows(); ++j) acc += v(j) * rbf((x.row(i) - x.row(j)).squaredNorm(), h);
  return acc;
}

std::size_t pair_offset(Index i, Index n) {
  // Pairs (i, j > i) for rows before i.
  const auto ii = static_cast<std::size_t>(i);
  const auto nn = static_cast<std::size_t>(n);
  return ii * nn - ii * (ii + 1) / 2;
}

}  // namespace

double quadratic_form_serial(const Eigen::MatrixXd& points, const Eigen::VectorXd& v,
                             double bandwidth) {
  double total = 0.0;
  for (Index i = 0; i < points.rows(); ++i) total += row_partial(points, v, i, bandwidth);
  return total;
}

double quadratic_form_parallel(const Eigen::MatrixXd& points, const Eigen::VectorXd& v,
                               double bandwidth) {
  const Index n = points.rows();
  std::vector<double> partial(static_cast<std::size_t>(n));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (Index i = 0; i < n; ++i) {
    partial[static_cast<std::size_t>(i)] = row_partial(points, v, i, bandwidth);
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

Eigen::VectorXd matvec_serial(const Eigen::MatrixXd& points, const Eigen::VectorXd& v,
                              double bandwidth) {
  Eigen::VectorXd out(points.rows());
  for (Index i = 0; i < points.rows(); ++i) out(i) = row_product(points, v, i, bandwidth);
  return out;
}

Eigen::VectorXd matvec_parallel(const Eigen::MatrixXd& points, const Eigen::VectorXd& v,
                                double bandwidth) {
  Eigen::VectorXd out(points.rows());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (Index i = 0; i < points.rows(); ++i) out(i) = row_product(points, v, i, bandwidth);
  return out;
}

Eigen::MatrixXd gram_serial(const Eigen::MatrixXd& points, double bandwidth) {
  const Index n = points.rows();
  Eigen::MatrixXd k(n, n);
  for (Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Index j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = rbf((points.row(i) - points.row(j)).squaredNorm(), bandwidth);
    }
  }
  return k;
}

Eigen::MatrixXd gram_parallel(const Eigen::MatrixXd& points, double bandwidth) {
  const Index n = points.rows();
  Eigen::MatrixXd k(n, n);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Index j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = rbf((points.row(i) - points.row(j)).squaredNorm(), bandwidth);
    }
  }
  return k;
}

std::vector<double> pairwise_distances_serial(const Eigen::MatrixXd& points) {
  const Index n = points.rows();
  std::vector<double> out;
  out.reserve(n > 1 ? pair_offset(n - 1, n) : 0);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) out.push_back((points.row(i) - points.row(j)).norm());
  }
  return out;
}

std::vector<double> pairwise_distances_parallel(const Eigen::MatrixXd& points) {
  const Index n = points.rows();
  std::vector<double> out(n > 1 ? pair_offset(n - 1, n) : 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (Index i = 0; i < n; ++i) {
    std::size_t k = pair_offset(i, n);
    for (Index j = i + 1; j < n; ++j) out[k++] = (points.row(i) - points.row(j)).norm();
  }
  return out;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace sdre::kernels
