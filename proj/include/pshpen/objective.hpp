#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pshpen/data.hpp"
#include "pshpen/ipcw.hpp"

namespace pshpen {

/// Log-(pseudo-)partial likelihood with score and observed information.
/// info is the negative Hessian, symmetric positive semidefinite.
struct ObjectiveValue {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd info;
};

/// Weighted risk-set engine for the stratified and marginal PSH likelihoods.
///
/// Construction fixes the summation units (one per stratum with at least one
/// cause-1 event for the stratified kinds, the whole sample otherwise), the
/// censoring-survival scope (per-stratum for StratifiedRegular, pooled for
/// the rest), and the per-subject weight multipliers, none of which depend on
/// beta. Weighted sums over a risk set split into an at-risk part (weight 1)
/// and a competing-event pool whose decaying weights share the factor G(t-),
/// so one ascending and one descending sweep per unit evaluate the whole
/// objective.
///
/// Instances are immutable and safe for concurrent evaluation.
class PshLikelihood {
 public:
  PshLikelihood(const Dataset& ds, ModelKind kind);

  ObjectiveValue evaluate(const Eigen::VectorXd& beta) const;
  double loglik_only(const Eigen::VectorXd& beta) const;

  /// Multiplier of the penalty in the objective: n for the pooled and
  /// stratified kinds, K for the marginal kind.
  double penalty_scale() const;
  /// Multiplier of the model dimension in the BIC: log n, or log K for the
  /// marginal kind.
  double bic_log_factor() const;

  /// Gradient and (nonnegative) diagonal curvature of the log-likelihood
  /// with respect to the per-subject linear predictors.
  void eta_derivatives(const Eigen::VectorXd& beta, Eigen::VectorXd& grad,
                       Eigen::VectorXd& curvature) const;

  /// Per-subject score influence rows (n x d). Rows sum to the score exactly.
  /// With censoring_correction the terms propagating the estimation of the
  /// censoring survival through the weights are added; the correction rows
  /// sum to zero.
  Eigen::MatrixXd score_influence(const Eigen::VectorXd& beta,
                                  bool censoring_correction) const;

  /// Baseline cumulative subdistribution hazard increments per unit
  /// (Breslow form) at the unit's distinct event times.
  struct BaselineIncrements {
    int center = -1;  // center id, -1 for a pooled unit
    std::vector<double> times;
    std::vector<double> increments;
  };
  std::vector<BaselineIncrements> breslow(const Eigen::VectorXd& beta) const;

  const Dataset& data() const { return ds_; }
  ModelKind kind() const { return kind_; }
  /// Center ids of strata dropped because they hold no cause-1 event.
  const std::vector<int>& dropped_centers() const { return dropped_; }
  int n_units() const { return static_cast<int>(units_.size()); }

  /// Censoring survival curve governing a subject's weights.
  const CensoringSurvival& censoring_for_row(int row) const;

 private:
  struct Unit {
    int center = -1;
    std::vector<int> rows;       // ascending (time, status)
    std::vector<int> rows_desc;  // descending time
    std::vector<double> etime;   // distinct cause-1 event times, ascending
    std::vector<int> ecount;
    std::vector<int> event_row_begin;  // offsets into event_rows, size E+1
    std::vector<int> event_rows;       // cause-1 rows grouped by event
    std::vector<double> g_left;        // G(t_e -)
    std::vector<int> c2_rows;          // cause-2 rows ascending by time
    std::vector<double> c2_invg;       // 1 / G(X-)
    int curve = 0;                     // index into curves_
  };

  struct EventSums {
    double shift = 0.0;
    Eigen::VectorXd r;        // shifted exp(eta) per dataset row in the unit
    std::vector<double> s0;   // per event, shifted scale
    Eigen::MatrixXd means;    // d x E, risk-set covariate means (optional)
  };

  EventSums unit_event_sums(const Unit& u, const Eigen::VectorXd& eta,
                            bool need_means) const;
  void check_beta(const Eigen::VectorXd& beta) const;

  Dataset ds_;
  ModelKind kind_;
  std::vector<CensoringSurvival> curves_;
  std::vector<Unit> units_;
  std::vector<int> dropped_;
  std::vector<int> row_curve_;  // censoring curve index per row
};

}  // namespace pshpen
