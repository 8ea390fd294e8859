#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pshpen/errors.hpp"

namespace pshpen {

enum class PenaltyFamily { None, Lasso, AdaptiveLasso, Scad, Mcp };

const char* penalty_family_name(PenaltyFamily f);
PenaltyFamily penalty_family_from_name(const std::string& name);

/// Penalty family with tuning parameter, shape constants, optional adaptive
/// weights and optional group structure. Units are single coordinates unless
/// `groups` partitions {0..d-1}; a group's penalty is evaluated at the group
/// norm with lambda scaled by sqrt(group size). Adaptive weights are indexed
/// per unit.
struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::None;
  double lambda = 0.0;
  double scad_a = 3.7;
  double mcp_gamma = 2.7;
  Eigen::VectorXd adaptive_weights;       // per unit; AdaptiveLasso only
  std::vector<std::vector<int>> groups;   // empty: one unit per coordinate

  int unit_count(int d) const {
    return groups.empty() ? d : static_cast<int>(groups.size());
  }
  /// Effective lambda for a unit: sqrt(d_u) * lambda * theta_u.
  double unit_lambda(int unit) const;
  void validate(int d) const;

  PenaltySpec with_lambda(double l) const {
    PenaltySpec s = *this;
    s.lambda = l;
    return s;
  }
};

/// p_lambda(b) for a unit, b >= 0. Zero at b = 0, continuous, nondecreasing.
double penalty_value(const PenaltySpec& spec, double b, int unit);

/// p'_lambda(b) for a unit, b >= 0.
double penalty_derivative(const PenaltySpec& spec, double b, int unit);

/// Data-adaptive weights theta_u = 1 / max(|unpenalized estimate|, 1e-8),
/// evaluated per unit (group norm for grouped units).
Eigen::VectorXd alasso_weights(const Eigen::VectorXd& mple,
                               const std::vector<std::vector<int>>& groups = {});

/// Norm of each penalization unit of beta (|beta_j| or group norms).
Eigen::VectorXd unit_norms(const PenaltySpec& spec, const Eigen::VectorXd& beta);

/// Diagonal of the local quadratic approximation of the penalty at beta:
/// a_j = p'(b_u) / (b_u + eps) for every coordinate j in unit u.
Eigen::VectorXd lqa_diagonal(const PenaltySpec& spec, const Eigen::VectorXd& beta,
                             double eps = 1e-6);

/// Exact penalty term sum_u p(b_u) of a coefficient vector.
double penalty_total(const PenaltySpec& spec, const Eigen::VectorXd& beta);

}  // namespace pshpen
