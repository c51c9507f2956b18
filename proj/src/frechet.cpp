#include "siedob/frechet.hpp"

#include <algorithm>

#include "siedob/errors.hpp"

namespace siedob {

namespace {

Eigen::MatrixXd covariance(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& mean) {
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
}

bool singular(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
  return es.eigenvalues().minCoeff() <= 1e-12 * std::max(top, 1.0);
}

}  // namespace

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

double frechet_distance(const Eigen::MatrixXd& real, const Eigen::MatrixXd& fake) {
  if (real.rows() < 2 || fake.rows() < 2) throw ValidationError("frechet_distance: need at least two samples per set");
  if (real.cols() != fake.cols()) throw DimensionError("frechet_distance: feature dimensions differ");
  const Eigen::RowVectorXd mu_r = real.colwise().mean();
  const Eigen::RowVectorXd mu_f = fake.colwise().mean();
  Eigen::MatrixXd cov_r = covariance(real, mu_r);
  Eigen::MatrixXd cov_f = covariance(fake, mu_f);
  if (singular(cov_r) || singular(cov_f)) {
    const auto eye = Eigen::MatrixXd::Identity(cov_r.rows(), cov_r.cols());
    cov_r += 1e-6 * eye;
    cov_f += 1e-6 * eye;
  }
  // Tr((Σr Σf)^{1/2}) = Tr((Σr^{1/2} Σf Σr^{1/2})^{1/2}); the inner product is symmetric PSD.
  const Eigen::MatrixXd root_r = symmetric_sqrt(cov_r);
  const Eigen::MatrixXd inner = root_r * cov_f * root_r;
  const double cross = symmetric_sqrt(inner).trace();
  const double mean_term = (mu_r - mu_f).squaredNorm();
  return std::max(0.0, mean_term + cov_r.trace() + cov_f.trace() - 2.0 * cross);
}

}  // namespace siedob
