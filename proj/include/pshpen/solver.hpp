#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "pshpen/objective.hpp"
#include "pshpen/penalty.hpp"

namespace pshpen {

struct SolveOptions {
  double newton_tol = 1e-8;  // sup-norm of the score, unpenalized fit
  int newton_max_iter = 100;
  double step_tol = 1e-7;    // max |delta beta| for LQA and CD
  int max_iter = 200;
  double zero_threshold = 1e-4;
  double lqa_eps = 1e-6;
};

struct FitResult {
  Eigen::VectorXd beta;
  std::vector<int> active;   // indices with beta != 0
  double loglik = 0.0;
  double df = std::numeric_limits<double>::quiet_NaN();
  double bic = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  ModelKind model = ModelKind::PooledPsh;
  PenaltySpec penalty;
  std::optional<Standardization> transform;
  std::vector<std::string> warnings;
};

struct PathResult {
  std::vector<double> lambdas;  // strictly decreasing
  std::vector<FitResult> fits;
  int selected = -1;
};

enum class SolverKind { Auto, Lqa, Cd };

/// Maximum (pseudo-)partial likelihood estimate by Newton iteration with
/// step halving. Nonconvergence is flagged, not thrown.
FitResult fit_unpenalized(const PshLikelihood& lik, const SolveOptions& opts = {});

/// Penalized fit via Newton steps on the local quadratic approximation of
/// the penalty. After convergence, units below the zero threshold are set to
/// exactly zero and one Newton pass re-polishes the active set.
FitResult fit_lqa(const PshLikelihood& lik, const PenaltySpec& penalty,
                  const Eigen::VectorXd& init, const SolveOptions& opts = {});

/// Penalized fit via cyclic coordinate descent on a diagonal-curvature
/// weighted least-squares surrogate. Pooled and marginal models only.
FitResult fit_cd(const PshLikelihood& lik, const PenaltySpec& penalty,
                 const Eigen::VectorXd& init, const SolveOptions& opts = {});

/// Log-equispaced decreasing grid. The largest value is the smallest lambda
/// whose lasso-type solution is identically zero.
std::vector<double> lambda_path(const PshLikelihood& lik, const PenaltySpec& penalty,
                                int grid_size = 50, double min_ratio = 1e-3);

/// Fits every lambda on the grid with warm starts (large to small).
/// Auto picks coordinate descent for the marginal model, LQA otherwise.
PathResult fit_path(const PshLikelihood& lik, const PenaltySpec& penalty,
                    const std::vector<double>& grid,
                    SolverKind solver = SolverKind::Auto,
                    const SolveOptions& opts = {});

/// Fills df and BIC of every fit (degrees of freedom by the trace formula on
/// the active set) and returns the BIC-minimizing index, ties broken toward
/// the larger lambda. Also stores the index in path.selected.
int select_bic(PathResult& path, const PshLikelihood& lik,
               const SolveOptions& opts = {});

/// df/BIC for a single fit, as used by select_bic.
void annotate_bic(FitResult& fit, const PshLikelihood& lik,
                  const SolveOptions& opts = {});

}  // namespace pshpen
