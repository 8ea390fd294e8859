#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pshpen/solver.hpp"

namespace pshpen {

/// Whether the score covariance includes the terms propagating the
/// estimation of the censoring survival.
enum class MeatKind { Simple, Corrected };

struct CovarianceReport {
  std::vector<int> active;
  Eigen::MatrixXd covariance;  // restricted to the active coordinates
  Eigen::VectorXd se;
  std::string method;
};

/// Sandwich covariance of the nonzero coefficients with per-subject score
/// influence terms: bread (I_obs + scale*A)^-1 on the active block, meat the
/// sum of per-subject outer products.
CovarianceReport sandwich_stratified(const PshLikelihood& lik, const FitResult& fit,
                                     MeatKind meat = MeatKind::Corrected);

/// Cluster-robust variant: influence terms are summed within each center
/// before the outer product, which absorbs within-center correlation.
CovarianceReport sandwich_marginal(const PshLikelihood& lik, const FitResult& fit,
                                   MeatKind meat = MeatKind::Corrected);

}  // namespace pshpen
