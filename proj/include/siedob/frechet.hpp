#pragma once

#include <Eigen/Dense>

namespace siedob {

/// Fréchet distance between Gaussian fits of two feature sets (rows are samples):
/// ‖μr−μf‖² + Tr(Σr + Σf − 2(Σr Σf)^{1/2}). Covariances are unbiased; when either is
/// singular both receive a 1e-6 diagonal jitter. Requires at least two rows per set.
double frechet_distance(const Eigen::MatrixXd& real, const Eigen::MatrixXd& fake);

/// Symmetric PSD square root via eigendecomposition, negative eigenvalues clipped to 0.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m);

}  // namespace siedob
