#include "pshpen/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pshpen {

namespace {

Eigen::VectorXd solve_spd(Eigen::MatrixXd m, const Eigen::VectorXd& rhs,
                          std::vector<std::string>* warnings) {
  {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() == Eigen::Success) {
      Eigen::VectorXd x = ldlt.solve(rhs);
      if (x.allFinite() && (m * x - rhs).norm() <= 1e-8 * (rhs.norm() + 1.0))
        return x;
    }
  }
  double jitter = 1e-8 * m.trace() / m.rows();
  if (!(jitter > 0.0)) jitter = 1e-12;
  m.diagonal().array() += jitter;
  if (warnings) warnings->push_back("near-singular system: ridge jitter applied");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  Eigen::VectorXd x = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !x.allFinite() ||
      (m * x - rhs).norm() > 1e-6 * (rhs.norm() + 1.0))
    throw SingularSystem("system matrix is singular");
  return x;
}

double penalized_objective(const PshLikelihood& lik, const PenaltySpec& pen,
                           double scale, const Eigen::VectorXd& beta) {
  return lik.loglik_only(beta) - scale * penalty_total(pen, beta);
}

std::vector<int> nonzero_indices(const Eigen::VectorXd& beta) {
  std::vector<int> idx;
  for (int j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) idx.push_back(j);
  return idx;
}

// Minimize 0.5*v*b^2 - rho*b + scale*p(|b|) over b. The objective is
// piecewise quadratic in |b|; every region's clamped stationary point plus
// the kinks are evaluated and the best one returned.
double scalar_penalized_min(double rho, double v, double scale,
                            const PenaltySpec& pen, int unit) {
  if (v <= 0.0) return 0.0;
  if (pen.family == PenaltyFamily::None || pen.lambda == 0.0) return rho / v;
  const double zb = std::abs(rho) / v;
  const double sign = rho >= 0.0 ? 1.0 : -1.0;
  const double l = pen.unit_lambda(unit);

  auto value = [&](double b) {
    return 0.5 * v * b * b - std::abs(rho) * b + scale * penalty_value(pen, b, unit);
  };

  std::vector<double> candidates{0.0};
  switch (pen.family) {
    case PenaltyFamily::Lasso:
    case PenaltyFamily::AdaptiveLasso:
      candidates.push_back(std::max(zb - scale * l / v, 0.0));
      break;
    case PenaltyFamily::Scad: {
      const double a = pen.scad_a;
      candidates.push_back(std::clamp(zb - scale * l / v, 0.0, l));
      const double denom = v - scale / (a - 1.0);
      if (denom > 0.0) {
        const double b2 = (v * zb - scale * a * l / (a - 1.0)) / denom;
        candidates.push_back(std::clamp(b2, l, a * l));
      }
      candidates.push_back(l);
      candidates.push_back(a * l);
      candidates.push_back(std::max(zb, a * l));
      break;
    }
    case PenaltyFamily::Mcp: {
      const double g = pen.mcp_gamma;
      const double denom = v - scale / g;
      if (denom > 0.0) {
        const double b1 = (v * zb - scale * l) / denom;
        candidates.push_back(std::clamp(b1, 0.0, g * l));
      }
      candidates.push_back(g * l);
      candidates.push_back(std::max(zb, g * l));
      break;
    }
    default:
      break;
  }
  double best = 0.0, best_value = value(0.0);
  for (double b : candidates) {
    const double f = value(b);
    if (f < best_value - 0.0) {
      best_value = f;
      best = b;
    }
  }
  return sign * best;
}

// Zero out units below the threshold and re-polish the active coordinates
// with one LQA Newton pass, keeping the penalty.
void threshold_and_polish(const PshLikelihood& lik, const PenaltySpec& pen,
                          Eigen::VectorXd& beta, const SolveOptions& opts,
                          std::vector<std::string>* warnings) {
  if (pen.family == PenaltyFamily::None || pen.lambda == 0.0) return;
  const Eigen::VectorXd norms = unit_norms(pen, beta);
  bool any_zeroed = false;
  if (pen.groups.empty()) {
    for (int j = 0; j < beta.size(); ++j)
      if (beta[j] != 0.0 && norms[j] < opts.zero_threshold) {
        beta[j] = 0.0;
        any_zeroed = true;
      }
  } else {
    for (size_t u = 0; u < pen.groups.size(); ++u)
      if (norms[u] != 0.0 && norms[u] < opts.zero_threshold) {
        for (int j : pen.groups[u]) beta[j] = 0.0;
        any_zeroed = true;
      }
  }
  if (!any_zeroed) return;
  const std::vector<int> active = nonzero_indices(beta);
  if (active.empty()) return;

  const double scale = lik.penalty_scale();
  const ObjectiveValue obj = lik.evaluate(beta);
  const Eigen::VectorXd a = lqa_diagonal(pen, beta, opts.lqa_eps);
  const int m = static_cast<int>(active.size());
  Eigen::MatrixXd sys(m, m);
  Eigen::VectorXd rhs(m);
  for (int p = 0; p < m; ++p) {
    rhs[p] = obj.score[active[p]] - scale * a[active[p]] * beta[active[p]];
    for (int q = 0; q < m; ++q)
      sys(p, q) = obj.info(active[p], active[q]) +
                  (p == q ? scale * a[active[p]] : 0.0);
  }
  const Eigen::VectorXd delta = solve_spd(sys, rhs, warnings);
  const double q0 = penalized_objective(lik, pen, scale, beta);
  double t = 1.0;
  for (int h = 0; h < 16; ++h, t /= 2.0) {
    Eigen::VectorXd cand = beta;
    for (int p = 0; p < m; ++p) cand[active[p]] += t * delta[p];
    if (penalized_objective(lik, pen, scale, cand) >=
        q0 - 1e-10 * (1.0 + std::abs(q0))) {
      beta = cand;
      return;
    }
  }
}

void finalize(FitResult& fit, const PshLikelihood& lik) {
  fit.model = lik.kind();
  fit.active = nonzero_indices(fit.beta);
  fit.loglik = lik.loglik_only(fit.beta);
  for (int c : lik.dropped_centers())
    fit.warnings.push_back("stratum with center id " + std::to_string(c) +
                           " holds no cause-1 event and was dropped");
}

}  // namespace

FitResult fit_unpenalized(const PshLikelihood& lik, const SolveOptions& opts) {
  FitResult fit;
  fit.beta = Eigen::VectorXd::Zero(lik.data().d());
  ObjectiveValue obj = lik.evaluate(fit.beta);
  for (int it = 0; it < opts.newton_max_iter; ++it) {
    if (obj.score.cwiseAbs().maxCoeff() < opts.newton_tol) {
      fit.converged = true;
      break;
    }
    fit.iterations = it + 1;
    const Eigen::VectorXd delta = solve_spd(obj.info, obj.score, &fit.warnings);
    bool accepted = false;
    double t = 1.0;
    for (int h = 0; h < 20; ++h, t /= 2.0) {
      const Eigen::VectorXd cand = fit.beta + t * delta;
      if (lik.loglik_only(cand) >=
          obj.loglik - 1e-12 * (1.0 + std::abs(obj.loglik))) {
        fit.beta = cand;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      fit.warnings.push_back("step halving stalled");
      break;
    }
    obj = lik.evaluate(fit.beta);
  }
  if (!fit.converged && obj.score.cwiseAbs().maxCoeff() < opts.newton_tol)
    fit.converged = true;
  if (!fit.converged) fit.warnings.push_back("unpenalized fit did not converge");
  fit.penalty.family = PenaltyFamily::None;
  finalize(fit, lik);
  return fit;
}

FitResult fit_lqa(const PshLikelihood& lik, const PenaltySpec& penalty,
                  const Eigen::VectorXd& init, const SolveOptions& opts) {
  penalty.validate(lik.data().d());
  const double scale = lik.penalty_scale();
  FitResult fit;
  fit.penalty = penalty;
  fit.beta = init;
  double q = penalized_objective(lik, penalty, scale, fit.beta);
  for (int it = 0; it < opts.max_iter; ++it) {
    fit.iterations = it + 1;
    const ObjectiveValue obj = lik.evaluate(fit.beta);
    const Eigen::VectorXd a = lqa_diagonal(penalty, fit.beta, opts.lqa_eps);
    Eigen::MatrixXd sys = obj.info;
    sys.diagonal() += scale * a;
    const Eigen::VectorXd rhs = obj.score - scale * a.cwiseProduct(fit.beta);
    const Eigen::VectorXd delta = solve_spd(sys, rhs, &fit.warnings);

    bool accepted = false;
    double t = 1.0;
    Eigen::VectorXd cand;
    double qc = q;
    for (int h = 0; h < 24; ++h, t /= 2.0) {
      cand = fit.beta + t * delta;
      qc = penalized_objective(lik, penalty, scale, cand);
      if (qc >= q - 1e-10 * (1.0 + std::abs(q))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      fit.converged = delta.cwiseAbs().maxCoeff() < 1e-5;
      if (!fit.converged) fit.warnings.push_back("LQA step halving stalled");
      break;
    }
    const double step = (cand - fit.beta).cwiseAbs().maxCoeff();
    fit.beta = cand;
    q = qc;
    if (step < opts.step_tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged && fit.iterations >= opts.max_iter)
    fit.warnings.push_back("LQA did not converge");
  threshold_and_polish(lik, penalty, fit.beta, opts, &fit.warnings);
  finalize(fit, lik);
  return fit;
}

FitResult fit_cd(const PshLikelihood& lik, const PenaltySpec& penalty,
                 const Eigen::VectorXd& init, const SolveOptions& opts) {
  if (lik.kind() != ModelKind::Marginal && lik.kind() != ModelKind::PooledPsh)
    throw ConfigError("coordinate descent supports the pooled and marginal models");
  penalty.validate(lik.data().d());
  const double scale = lik.penalty_scale();
  const Eigen::MatrixXd& z = lik.data().covariates();
  const int d = lik.data().d();

  std::vector<std::vector<int>> units = penalty.groups;
  if (units.empty()) {
    units.resize(d);
    for (int j = 0; j < d; ++j) units[j] = {j};
  }

  FitResult fit;
  fit.penalty = penalty;
  fit.beta = init;
  double q = penalized_objective(lik, penalty, scale, fit.beta);
  Eigen::VectorXd grad, curv;
  for (int outer = 0; outer < opts.max_iter; ++outer) {
    fit.iterations = outer + 1;
    lik.eta_derivatives(fit.beta, grad, curv);
    curv = curv.cwiseMax(0.0);
    // residual r_i = g_i - h_i * (eta_i - eta0_i), maintained incrementally
    Eigen::VectorXd resid = grad;
    Eigen::VectorXd work = fit.beta;
    Eigen::VectorXd vdiag(d);
    for (int j = 0; j < d; ++j)
      vdiag[j] = curv.dot(z.col(j).cwiseProduct(z.col(j)));

    for (int cycle = 0; cycle < 1000; ++cycle) {
      double max_move = 0.0;
      for (size_t ui = 0; ui < units.size(); ++ui) {
        const std::vector<int>& g = units[ui];
        if (g.size() == 1) {
          const int j = g[0];
          if (vdiag[j] <= 0.0) continue;
          const double rho = z.col(j).dot(resid) + vdiag[j] * work[j];
          const double bnew =
              scalar_penalized_min(rho, vdiag[j], scale, penalty,
                                   penalty.groups.empty() ? j : static_cast<int>(ui));
          const double move = bnew - work[j];
          if (move != 0.0) {
            resid -= move * curv.cwiseProduct(z.col(j));
            work[j] = bnew;
            max_move = std::max(max_move, std::abs(move));
          }
        } else {
          double v = 0.0;
          for (int j : g) v = std::max(v, vdiag[j]);
          if (v <= 0.0) continue;
          Eigen::VectorXd rho(g.size());
          for (size_t p = 0; p < g.size(); ++p)
            rho[p] = z.col(g[p]).dot(resid) + v * work[g[p]];
          const double rnorm = rho.norm();
          const double tnew = std::abs(scalar_penalized_min(
              rnorm, v, scale, penalty, static_cast<int>(ui)));
          for (size_t p = 0; p < g.size(); ++p) {
            const double bnew = rnorm > 0.0 ? tnew * rho[p] / rnorm : 0.0;
            const double move = bnew - work[g[p]];
            if (move != 0.0) {
              resid -= move * curv.cwiseProduct(z.col(g[p]));
              work[g[p]] = bnew;
              max_move = std::max(max_move, std::abs(move));
            }
          }
        }
      }
      if (max_move < opts.step_tol) break;
    }

    // damped acceptance of the surrogate solution on the exact objective
    bool accepted = false;
    double t = 1.0;
    Eigen::VectorXd cand;
    double qc = q;
    for (int h = 0; h < 24; ++h, t /= 2.0) {
      cand = fit.beta + t * (work - fit.beta);
      qc = penalized_objective(lik, penalty, scale, cand);
      if (qc >= q - 1e-10 * (1.0 + std::abs(q))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      fit.converged = (work - fit.beta).cwiseAbs().maxCoeff() < 1e-5;
      if (!fit.converged) fit.warnings.push_back("CD step halving stalled");
      break;
    }
    const double step = (cand - fit.beta).cwiseAbs().maxCoeff();
    fit.beta = cand;
    q = qc;
    if (step < opts.step_tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged && fit.iterations >= opts.max_iter)
    fit.warnings.push_back("CD did not converge");
  threshold_and_polish(lik, penalty, fit.beta, opts, &fit.warnings);
  finalize(fit, lik);
  return fit;
}

std::vector<double> lambda_path(const PshLikelihood& lik, const PenaltySpec& penalty,
                                int grid_size, double min_ratio) {
  if (penalty.family == PenaltyFamily::None) return {0.0};
  penalty.validate(lik.data().d());
  const Eigen::VectorXd u0 =
      lik.evaluate(Eigen::VectorXd::Zero(lik.data().d())).score;
  const double scale = lik.penalty_scale();
  const int n_units = penalty.unit_count(lik.data().d());
  double lambda_max = 0.0;
  for (int u = 0; u < n_units; ++u) {
    double norm;
    double size_factor = 1.0;
    if (penalty.groups.empty()) {
      norm = std::abs(u0[u]);
    } else {
      double s = 0.0;
      for (int j : penalty.groups[u]) s += u0[j] * u0[j];
      norm = std::sqrt(s);
      size_factor = std::sqrt(static_cast<double>(penalty.groups[u].size()));
    }
    double theta = 1.0;
    if (penalty.family == PenaltyFamily::AdaptiveLasso)
      theta = penalty.adaptive_weights[u];
    lambda_max = std::max(lambda_max, norm / (scale * size_factor * theta));
  }
  if (!(lambda_max > 0.0)) return {0.0};
  std::vector<double> grid(grid_size);
  for (int i = 0; i < grid_size; ++i)
    grid[i] = lambda_max *
              std::pow(min_ratio, static_cast<double>(i) / (grid_size - 1));
  return grid;
}

PathResult fit_path(const PshLikelihood& lik, const PenaltySpec& penalty,
                    const std::vector<double>& grid, SolverKind solver,
                    const SolveOptions& opts) {
  if (solver == SolverKind::Auto)
    solver = lik.kind() == ModelKind::Marginal ? SolverKind::Cd : SolverKind::Lqa;
  PathResult path;
  path.lambdas = grid;
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(lik.data().d());
  for (double lambda : grid) {
    const PenaltySpec pen = penalty.with_lambda(lambda);
    FitResult fit = solver == SolverKind::Cd ? fit_cd(lik, pen, warm, opts)
                                             : fit_lqa(lik, pen, warm, opts);
    warm = fit.beta;
    path.fits.push_back(std::move(fit));
  }
  return path;
}

void annotate_bic(FitResult& fit, const PshLikelihood& lik,
                  const SolveOptions& opts) {
  double df = 0.0;
  if (!fit.active.empty()) {
    const ObjectiveValue obj = lik.evaluate(fit.beta);
    const Eigen::VectorXd a = lqa_diagonal(fit.penalty, fit.beta, opts.lqa_eps);
    const int m = static_cast<int>(fit.active.size());
    Eigen::MatrixXd info_act(m, m), sys(m, m);
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) {
        info_act(p, q) = obj.info(fit.active[p], fit.active[q]);
        sys(p, q) = info_act(p, q) +
                    (p == q ? lik.penalty_scale() * a[fit.active[p]] : 0.0);
      }
    df = sys.ldlt().solve(info_act).trace();
  }
  fit.df = df;
  fit.bic = -2.0 * fit.loglik + lik.bic_log_factor() * df;
}

int select_bic(PathResult& path, const PshLikelihood& lik,
               const SolveOptions& opts) {
  int best = 0;
  for (size_t i = 0; i < path.fits.size(); ++i) {
    annotate_bic(path.fits[i], lik, opts);
    if (path.fits[i].bic < path.fits[best].bic) best = static_cast<int>(i);
  }
  path.selected = best;
  return best;
}

}  // namespace pshpen
