#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

namespace sdre::kernels {

/// Gaussian RBF exp(-d^2 / (2 h^2)) from a squared distance.
inline double rbf(double sq_dist, double bandwidth) {
  return std::exp(-sq_dist / (2.0 * bandwidth * bandwidth));
}

/// Kernel quadratic form sum_{i,j} v_i v_j k(x_i, x_j) over the rows of
/// `points`, without forming the Gram matrix. Both variants sum per-row
/// partials in row order, so they agree to rounding and each is deterministic
/// for any thread count.
double quadratic_form_serial(const Eigen::MatrixXd& points, const Eigen::VectorXd& v,
                             double bandwidth);
double quadratic_form_parallel(const Eigen::MatrixXd& points, const Eigen::VectorXd& v,
                               double bandwidth);

/// (K v)_i = sum_j k(x_i, x_j) v_j.
Eigen::VectorXd matvec_serial(const Eigen::MatrixXd& points, const Eigen::VectorXd& v,
                              double bandwidth);
Eigen::VectorXd matvec_parallel(const Eigen::MatrixXd& points, const Eigen::VectorXd& v,
                                double bandwidth);

/// Full Gram matrix over the rows of `points`.
Eigen::MatrixXd gram_serial(const Eigen::MatrixXd& points, double bandwidth);
Eigen::MatrixXd gram_parallel(const Eigen::MatrixXd& points, double bandwidth);

/// Euclidean distances ||x_i - x_j|| for i < j, in row-major pair order.
std::vector<double> pairwise_distances_serial(const Eigen::MatrixXd& points);
std::vector<double> pairwise_distances_parallel(const Eigen::MatrixXd& points);

/// Number of OpenMP threads the parallel variants use (1 without OpenMP).
int max_threads();

}  // namespace sdre::kernels
