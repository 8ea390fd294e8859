#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "pshpen/inference.hpp"
#include "pshpen/solver.hpp"

namespace pshpen {

/// Baseline cumulative subdistribution hazard (Breslow form), one
/// nondecreasing step function per summation unit.
struct BaselineCumHazard {
  struct UnitBaseline {
    int center = -1;  // -1 for a pooled unit
    std::vector<double> times;
    std::vector<double> cumhaz;  // running sums, aligned with times
  };
  ModelKind kind = ModelKind::PooledPsh;
  std::vector<UnitBaseline> units;

  bool has_center(int center) const;
  double at(double t, int center) const;  // center ignored for pooled units
};

/// Breslow baseline for a fitted model. Refused for the highly stratified
/// kind, whose small strata do not support a baseline estimate.
BaselineCumHazard breslow_baseline(const PshLikelihood& lik, const FitResult& fit);

/// Predicted cause-1 cumulative incidence 1 - exp(-Lambda(t) e^{beta'z}).
struct CifPredictor {
  BaselineCumHazard baseline;
  Eigen::VectorXd beta;
  double cif(double t, const Eigen::VectorXd& z, int center) const;
  bool covers_center(int center) const { return baseline.has_center(center); }
};
CifPredictor make_cif_predictor(const PshLikelihood& lik, const FitResult& fit);

/// Concordance over evaluable ordered pairs before the horizon: the first
/// subject fails from cause 1 while the second is event-free or has already
/// failed from the competing cause. Ties in the index score one half.
double c_index(const Dataset& test, const Eigen::VectorXd& pi, double tau);

/// Discrimination coefficient from refitting a pooled single-covariate model
/// on normal rankits of the prognostic index (scale sqrt(8/pi)); rank-based,
/// so invariant under strictly increasing transforms, and nonnegative by the
/// orientation convention.
double d_index(const Dataset& test, const Eigen::VectorXd& pi);

struct PredictionErrorResult {
  double integrated = 0.0;  // integral of the Brier curve over [0, t*]
  int excluded = 0;         // test subjects from strata without a baseline
};

/// IPCW Brier score of the cause-1 CIF integrated up to t_star by the
/// trapezoid rule on the pooled event-time grid.
PredictionErrorResult prediction_error(const Dataset& test, const CifPredictor& pred,
                                       double t_star);

struct SplitEvalResult {
  double c_mean = 0.0, c_se = 0.0;
  double d_mean = 0.0, d_se = 0.0;
  double pe_mean = 0.0, pe_se = 0.0;
  bool pe_available = false;
  int splits_used = 0;
  int failures = 0;
};

/// Repeated split-sample evaluation. Sampling is within centers for the
/// regularly stratified kind, upon whole centers for the highly stratified
/// and marginal kinds, and over subjects for the pooled kind. Prediction
/// error is omitted for the highly stratified kind. train_fraction >= 1 makes
/// the test set equal the training set (in-sample metrics).
SplitEvalResult split_eval(const Dataset& ds, ModelKind model,
                           const PenaltySpec& penalty, int splits,
                           double train_fraction, uint64_t seed,
                           double pe_horizon = 0.0, int threads = 1,
                           SolverKind solver = SolverKind::Auto);

/// Named-factor coefficient table for prognostic-index scoring. Factor kinds:
/// linear (coef * (x - ref) / scale), hinge_above / hinge_below (applies only
/// beyond the knot), indicator (coef if the value is nonzero). The declared
/// reference profile therefore scores index exactly 1.
struct IndexFactor {
  std::string name;
  std::string kind;
  double ref = 0.0;
  double knot = 0.0;
  double scale = 1.0;
  double coef = 0.0;
};

struct IndexTable {
  std::vector<IndexFactor> factors;

  static IndexTable from_json(const std::string& text);
  /// Sum of applicable components; throws MissingFactor for absent names.
  double prognostic_index(const std::map<std::string, double>& values) const;
};

}  // namespace pshpen
