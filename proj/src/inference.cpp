#include "pshpen/inference.hpp"

#include <cmath>

namespace pshpen {

namespace {

CovarianceReport sandwich_common(const PshLikelihood& lik, const FitResult& fit,
                                 MeatKind meat, bool cluster, const char* method) {
  if (fit.active.empty())
    throw EmptyActiveSet("sandwich covariance requires a nonempty active set");
  const int m = static_cast<int>(fit.active.size());
  const double scale = lik.penalty_scale();

  const ObjectiveValue obj = lik.evaluate(fit.beta);
  const Eigen::VectorXd a = lqa_diagonal(fit.penalty, fit.beta);
  Eigen::MatrixXd sys(m, m);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q)
      sys(p, q) = obj.info(fit.active[p], fit.active[q]) +
                  (p == q ? scale * a[fit.active[p]] : 0.0);
  const Eigen::MatrixXd bread =
      sys.ldlt().solve(Eigen::MatrixXd::Identity(m, m));

  const Eigen::MatrixXd infl =
      lik.score_influence(fit.beta, meat == MeatKind::Corrected);
  Eigen::MatrixXd meat_sum = Eigen::MatrixXd::Zero(m, m);
  const Dataset& ds = lik.data();
  if (cluster) {
    for (int k = 0; k < ds.n_centers(); ++k) {
      auto [b, e] = ds.stratum_range(k);
      Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
      for (int i = b; i < e; ++i)
        for (int p = 0; p < m; ++p) s[p] += infl(i, fit.active[p]);
      meat_sum.noalias() += s * s.transpose();
    }
  } else {
    for (int i = 0; i < ds.n(); ++i) {
      Eigen::VectorXd s(m);
      for (int p = 0; p < m; ++p) s[p] = infl(i, fit.active[p]);
      meat_sum.noalias() += s * s.transpose();
    }
  }

  CovarianceReport report;
  report.active = fit.active;
  report.method = method;
  report.covariance = bread * meat_sum * bread;
  report.covariance =
      ((report.covariance + report.covariance.transpose()) / 2.0).eval();
  report.se = report.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return report;
}

}  // namespace

CovarianceReport sandwich_stratified(const PshLikelihood& lik, const FitResult& fit,
                                     MeatKind meat) {
  return sandwich_common(lik, fit, meat, /*cluster=*/false, "stratified-sandwich");
}

CovarianceReport sandwich_marginal(const PshLikelihood& lik, const FitResult& fit,
                                   MeatKind meat) {
  return sandwich_common(lik, fit, meat, /*cluster=*/true, "marginal-cluster-robust");
}

}  // namespace pshpen
