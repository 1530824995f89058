#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "camoscore/error.hpp"
#include "camoscore/features.hpp"

namespace camo {

template <typename MatrixType>
struct MatrixSqrtResult {
  MatrixType root;
  int iterations = 0;
  /// ||Y Y - A'||_F / ||A'||_F of the normalized iterate at exit.
  double residual = 0.0;
};

struct NewtonSchulzParams {
  int max_iterations = 100;
  double tolerance = 1e-14;
  // Below this residual, an iteration that fails to improve ends the loop.
  double stall_below = 1e-10;
};

/// Square root of a symmetric positive definite matrix by the coupled
/// Newton-Schulz iteration on A / ||A||_F. A positive multiple of the
/// identity is returned directly with zero iterations.
///
/// Throws ParameterError for a non-symmetric input and ConvergenceError when
/// the residual grows three iterations in a row (use an eigendecomposition
/// instead in that case).
template <typename Derived>
MatrixSqrtResult<typename Derived::PlainObject> matrix_sqrt(
    const Eigen::MatrixBase<Derived>& a, const NewtonSchulzParams& params = {}) {
  using Matrix = typename Derived::PlainObject;
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;

  if (a.rows() != a.cols()) throw ShapeError("matrix_sqrt needs a square matrix");
  const Eigen::Index n = a.rows();
  MatrixSqrtResult<Matrix> out;
  const Real norm = a.norm();
  if (n == 0 || norm == Real(0)) {
    out.root = Matrix::Zero(n, n);
    return out;
  }
  if ((a - a.transpose()).norm() > Real(1e-8) * norm) {
    throw ParameterError("matrix_sqrt input is not symmetric");
  }
  const Matrix identity = Matrix::Identity(n, n);
  if (a(0, 0) > Real(0) && (a - a(0, 0) * identity).norm() == Real(0)) {
    out.root = std::sqrt(a(0, 0)) * identity;
    return out;
  }

  const Matrix normalized = a / norm;
  Matrix y = normalized;
  Matrix z = identity;
  double residual = static_cast<double>((y * y - normalized).norm());
  int growth = 0;
  int k = 0;
  for (; k < params.max_iterations && residual >= params.tolerance; ++k) {
    const Matrix t = Real(0.5) * (Real(3) * identity - z * y);
    Matrix y_next = y * t;
    const double next = static_cast<double>((y_next * y_next - normalized).norm());
    if (!std::isfinite(next)) {
      throw ConvergenceError("Newton-Schulz iteration produced non-finite values; "
                             "fall back to an eigendecomposition");
    }
    if (residual < params.stall_below && next >= residual) break;  // roundoff floor
    y = std::move(y_next);
    z = (t * z).eval();
    growth = (next > residual && next > 1e-6) ? growth + 1 : 0;
    residual = next;
    if (growth >= 3) {
      throw ConvergenceError("Newton-Schulz residual grew for 3 iterations (input not "
                             "positive definite?); fall back to an eigendecomposition");
    }
  }
  out.root = std::sqrt(norm) * y;
  out.root = (Real(0.5) * (out.root + out.root.transpose())).eval();
  out.iterations = k;
  out.residual = residual;
  return out;
}

/// Gaussian fit of a set of feature vectors.
struct RegionStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  long n = 0;
  double epsilon = 0.0;  // ridge added to the diagonal
  std::vector<std::string> warnings;

  int dim() const { return static_cast<int>(mu.size()); }
};

/// Mean and unbiased covariance of the columns of `samples`, plus a ridge
/// eps = max(1e-6 * trace / D, 1e-12). Needs at least two samples.
RegionStats sample_stats(const Eigen::Ref<const Eigen::MatrixXd>& samples);

/// Statistics of the feature vectors whose cell lies in `region`. The region
/// is given at image resolution and reduced to the feature grid by majority
/// vote.
RegionStats region_stats(const FeatureMap& fm, const BinaryMask& region);

struct FrechetResult {
  double d2 = 0.0;
  double mean_term = 0.0;
  double cov_term = 0.0;
  int sqrt_iterations = 0;
  double sqrt_residual = 0.0;
  std::vector<std::string> warnings;
};

/// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2). A negative
/// covariance term from roundoff is clamped to 0.
FrechetResult frechet_distance(const RegionStats& a, const RegionStats& b,
                               const NewtonSchulzParams& params = {});

}  // namespace camo
