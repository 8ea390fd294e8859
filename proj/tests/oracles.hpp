// Test-only oracles, independent of the library's likelihood machinery:
// finite differences, a plain Cox partial-likelihood fitter with its robust
// variance, and a hand-rolled random dataset generator.
#pragma once

#include <Eigen/Dense>
#include <functional>

#include "pshpen/data.hpp"

namespace oracle {

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h = 1e-5);

Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-5);

struct CoxData {
  std::vector<double> time;
  std::vector<int> event;  // 1 = event, 0 = censored
  Eigen::MatrixXd z;
};

double cox_loglik(const CoxData& data, const Eigen::VectorXd& beta);
Eigen::VectorXd cox_mple(const CoxData& data, double tol = 1e-10, int max_iter = 200);
// Lin-Wei robust covariance from score residuals at beta.
Eigen::MatrixXd cox_robust_covariance(const CoxData& data, const Eigen::VectorXd& beta);

// Small competing-risks sample with roughly the given status mix.
pshpen::Dataset random_dataset(int n, int d, int centers, uint64_t seed,
                               double censored_frac = 0.25, double cause2_frac = 0.25);

}  // namespace oracle
