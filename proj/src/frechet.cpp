#include "camoscore/frechet.hpp"

#include <algorithm>

namespace camo {

RegionStats sample_stats(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  const Eigen::Index n = samples.cols();
  if (n < 2) {
    throw DegenerateInputError("region holds " + std::to_string(n) +
                               " feature cells; at least 2 are needed");
  }
  RegionStats s;
  s.n = static_cast<long>(n);
  s.mu = samples.rowwise().mean();
  const Eigen::MatrixXd centered = samples.colwise() - s.mu;
  s.sigma = centered * centered.transpose() / static_cast<double>(n - 1);
  s.sigma = (0.5 * (s.sigma + s.sigma.transpose())).eval();
  const double d = static_cast<double>(samples.rows());
  s.epsilon = std::max(1e-6 * s.sigma.trace() / d, 1e-12);
  s.sigma.diagonal().array() += s.epsilon;
  if (n < samples.rows() + 1) {
    s.warnings.push_back("degenerate-region: " + std::to_string(n) +
                         " samples for dimension " + std::to_string(samples.rows()) +
                         "; covariance is rank deficient");
  }
  return s;
}

RegionStats region_stats(const FeatureMap& fm, const BinaryMask& region) {
  const BinaryMask cells = downsample_region(region, fm.width, fm.height);
  Eigen::MatrixXd samples(fm.dim(), cells.count());
  Eigen::Index k = 0;
  for (int y = 0; y < fm.height; ++y) {
    for (int x = 0; x < fm.width; ++x) {
      if (cells(y, x)) samples.col(k++) = fm.at(y, x);
    }
  }
  return sample_stats(samples);
}

FrechetResult frechet_distance(const RegionStats& a, const RegionStats& b,
                               const NewtonSchulzParams& params) {
  if (a.dim() != b.dim() || a.sigma.rows() != a.dim() || b.sigma.rows() != b.dim()) {
    throw ShapeError("Frechet distance between statistics of different dimension");
  }
  FrechetResult r;
  r.mean_term = (a.mu - b.mu).squaredNorm();

  const auto root_a = matrix_sqrt(a.sigma, params);
  Eigen::MatrixXd inner = root_a.root * b.sigma * root_a.root;
  inner = (0.5 * (inner + inner.transpose())).eval();
  const auto root_inner = matrix_sqrt(inner, params);

  r.cov_term = a.sigma.trace() + b.sigma.trace() - 2.0 * root_inner.root.trace();
  if (r.cov_term < 0.0) {
    if (r.cov_term < -1e-8) {
      r.warnings.push_back("negative covariance term " + std::to_string(r.cov_term) +
                           " clamped to 0");
    }
    r.cov_term = 0.0;
  }
  r.d2 = r.mean_term + r.cov_term;
  r.sqrt_iterations = root_a.iterations + root_inner.iterations;
  r.sqrt_residual = std::max(root_a.residual, root_inner.residual);
  return r;
}

}  // namespace camo
