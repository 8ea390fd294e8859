#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pshpen/solver.hpp"

using namespace pshpen;

namespace {

Subject make(double t, int status, int center, std::initializer_list<double> z) {
  Subject s;
  s.time = t;
  s.status = status;
  s.center = center;
  s.covariates.resize(static_cast<int>(z.size()));
  int j = 0;
  for (double v : z) s.covariates[j++] = v;
  return s;
}

PenaltySpec pen(PenaltyFamily f, double lambda) {
  PenaltySpec s;
  s.family = f;
  s.lambda = lambda;
  return s;
}

}  // namespace

TEST_CASE("scalar MPLE matches a bisection root of the score") {
  const Dataset ds = build_dataset({make(1.0, 1, 1, {0.7}), make(2.0, 1, 1, {-0.4}),
                                    make(3.0, 2, 1, {0.2})});
  const PshLikelihood lik(ds, ModelKind::StratifiedRegular);
  auto score = [&](double b) {
    Eigen::VectorXd beta(1);
    beta[0] = b;
    return lik.evaluate(beta).score[0];
  };
  double lo = -50.0, hi = 50.0;
  REQUIRE(score(lo) > 0.0);
  REQUIRE(score(hi) < 0.0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (score(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double root = 0.5 * (lo + hi);
  const FitResult fit = fit_unpenalized(lik);
  CHECK(fit.converged);
  CHECK(std::abs(fit.beta[0] - root) < 1e-8);
}

TEST_CASE("column permutation equivariance of the MPLE") {
  const Dataset ds = oracle::random_dataset(40, 3, 2, 12, 0.25, 0.25);
  const FitResult fit = fit_unpenalized(PshLikelihood(ds, ModelKind::StratifiedRegular));
  const Dataset perm = ds.select_columns({2, 0, 1});
  const FitResult pfit =
      fit_unpenalized(PshLikelihood(perm, ModelKind::StratifiedRegular));
  CHECK(pfit.beta[0] == doctest::Approx(fit.beta[2]).epsilon(1e-8));
  CHECK(pfit.beta[1] == doctest::Approx(fit.beta[0]).epsilon(1e-8));
  CHECK(pfit.beta[2] == doctest::Approx(fit.beta[1]).epsilon(1e-8));
}

TEST_CASE("complete data reduces to the Cox MPLE") {
  // no censoring and no competing events: the weights are all one and the
  // fit must match an independent Cox implementation
  const int n = 50, d = 3;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  oracle::CoxData cox;
  cox.z.resize(n, d);
  std::vector<Subject> recs(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) cox.z(i, j) = gauss(rng);
    const double t = expo(rng) / std::exp(0.4 * cox.z(i, 0) - 0.3 * cox.z(i, 1));
    cox.time.push_back(t);
    cox.event.push_back(1);
    recs[i] = Subject{t, kCause1, 1, cox.z.row(i).transpose()};
  }
  const Eigen::VectorXd oracle_beta = oracle::cox_mple(cox);
  const Dataset ds = build_dataset(recs);
  const FitResult fit = fit_unpenalized(PshLikelihood(ds, ModelKind::PooledPsh));
  CHECK((fit.beta - oracle_beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("zero penalty reproduces the MPLE") {
  const Dataset ds = oracle::random_dataset(60, 4, 3, 31, 0.25, 0.25);
  for (ModelKind kind : {ModelKind::StratifiedRegular, ModelKind::Marginal}) {
    const PshLikelihood lik(ds, kind);
    const FitResult mple = fit_unpenalized(lik);
    const Eigen::VectorXd init = Eigen::VectorXd::Zero(4);
    const FitResult lqa = fit_lqa(lik, pen(PenaltyFamily::Lasso, 0.0), init);
    CHECK((lqa.beta - mple.beta).cwiseAbs().maxCoeff() < 1e-6);
    if (kind == ModelKind::Marginal) {
      const FitResult cd = fit_cd(lik, pen(PenaltyFamily::Lasso, 0.0), init);
      CHECK((cd.beta - mple.beta).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("lambda_max yields the all-zero fit with a subgradient certificate") {
  const Dataset ds = oracle::random_dataset(50, 4, 2, 41, 0.25, 0.25);
  for (ModelKind kind : {ModelKind::StratifiedRegular, ModelKind::Marginal}) {
    const PshLikelihood lik(ds, kind);
    const PenaltySpec lasso = pen(PenaltyFamily::Lasso, 0.0);
    const std::vector<double> grid = lambda_path(lik, lasso, 20);
    CHECK(grid.size() == 20);
    for (size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] < grid[i - 1]);
    // the all-zero vector satisfies the lasso stationarity condition at
    // lambda_max: |U_j(0)| <= scale * lambda for every coordinate
    const Eigen::VectorXd u0 = lik.evaluate(Eigen::VectorXd::Zero(4)).score;
    CHECK(u0.cwiseAbs().maxCoeff() <=
          lik.penalty_scale() * grid[0] * (1.0 + 1e-12));
    for (double lam : {grid[0], 2.0 * grid[0]}) {
      const FitResult fit = kind == ModelKind::Marginal
                                ? fit_cd(lik, lasso.with_lambda(lam),
                                         Eigen::VectorXd::Zero(4))
                                : fit_lqa(lik, lasso.with_lambda(lam),
                                          Eigen::VectorXd::Zero(4));
      CHECK(fit.beta.cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("lambda grid prefix is stable when the floor is squared") {
  const Dataset ds = oracle::random_dataset(40, 3, 2, 51, 0.25, 0.25);
  const PshLikelihood lik(ds, ModelKind::StratifiedRegular);
  const PenaltySpec lasso = pen(PenaltyFamily::Lasso, 0.0);
  const std::vector<double> grid = lambda_path(lik, lasso, 10, 1e-2);
  const std::vector<double> longer = lambda_path(lik, lasso, 19, 1e-4);
  for (int i = 0; i < 10; ++i)
    CHECK(longer[i] == doctest::Approx(grid[i]).epsilon(1e-12));
}

TEST_CASE("CD and LQA agree on the marginal model along the path") {
  std::mt19937_64 seeds(2024);
  const Dataset ds = oracle::random_dataset(150, 4, 3, seeds(), 0.2, 0.25);
  const PshLikelihood lik(ds, ModelKind::Marginal);
  for (PenaltyFamily fam : {PenaltyFamily::Lasso, PenaltyFamily::Scad}) {
    const PenaltySpec base = pen(fam, 0.0);
    const std::vector<double> grid = lambda_path(lik, base, 20);
    const PathResult via_cd = fit_path(lik, base, grid, SolverKind::Cd);
    const PathResult via_lqa = fit_path(lik, base, grid, SolverKind::Lqa);
    for (size_t i = 0; i < grid.size(); ++i) {
      CHECK((via_cd.fits[i].beta - via_lqa.fits[i].beta).cwiseAbs().maxCoeff() <
            5e-4);
    }
  }
}

TEST_CASE("CD refuses stratified models") {
  const Dataset ds = oracle::random_dataset(30, 2, 3, 61, 0.25, 0.25);
  const PshLikelihood lik(ds, ModelKind::StratifiedRegular);
  CHECK_THROWS_AS(fit_cd(lik, pen(PenaltyFamily::Lasso, 0.1),
                         Eigen::VectorXd::Zero(2)),
                  ConfigError);
}

TEST_CASE("reported zeros satisfy the lasso subgradient condition") {
  const Dataset ds = oracle::random_dataset(80, 5, 4, 71, 0.25, 0.25);
  const PshLikelihood lik(ds, ModelKind::Marginal);
  const PenaltySpec lasso = pen(PenaltyFamily::Lasso, 0.0);
  const std::vector<double> grid = lambda_path(lik, lasso, 12);
  const PathResult path = fit_path(lik, lasso, grid, SolverKind::Cd);
  for (size_t i = 0; i < grid.size(); ++i) {
    const Eigen::VectorXd u = lik.evaluate(path.fits[i].beta).score;
    for (int j = 0; j < 5; ++j)
      if (path.fits[i].beta[j] == 0.0)
        CHECK(std::abs(u[j]) <= lik.penalty_scale() * grid[i] + 1e-6);
  }
}

TEST_CASE("BIC degrees of freedom approach d as lambda vanishes") {
  const Dataset ds = oracle::random_dataset(60, 3, 2, 81, 0.25, 0.25);
  const PshLikelihood lik(ds, ModelKind::StratifiedRegular);
  PathResult path;
  path.lambdas = {1e-9};
  path.fits.push_back(
      fit_lqa(lik, pen(PenaltyFamily::Scad, 1e-9), Eigen::VectorXd::Zero(3)));
  const int idx = select_bic(path, lik);
  CHECK(idx == 0);
  CHECK(path.fits[0].df == doctest::Approx(3.0).epsilon(1e-4));
  CHECK(path.fits[0].bic ==
        doctest::Approx(-2.0 * path.fits[0].loglik +
                        std::log(static_cast<double>(ds.n())) * path.fits[0].df)
            .epsilon(1e-10));
}

TEST_CASE("BIC ties break toward the larger lambda") {
  const Dataset ds = oracle::random_dataset(40, 2, 2, 91, 0.25, 0.25);
  const PshLikelihood lik(ds, ModelKind::StratifiedRegular);
  const PenaltySpec lasso = pen(PenaltyFamily::Lasso, 0.0);
  // two copies of the same huge lambda give identical all-zero fits
  PathResult path = fit_path(lik, lasso, {5.0, 5.0}, SolverKind::Lqa);
  CHECK(select_bic(path, lik) == 0);
}

TEST_CASE("group lasso keeps groups together") {
  const Dataset ds = oracle::random_dataset(60, 4, 2, 101, 0.25, 0.25);
  const PshLikelihood lik(ds, ModelKind::StratifiedRegular);
  PenaltySpec grouped = pen(PenaltyFamily::Lasso, 0.0);
  grouped.groups = {{0, 1}, {2, 3}};
  const std::vector<double> grid = lambda_path(lik, grouped, 12);
  const PathResult path = fit_path(lik, grouped, grid, SolverKind::Lqa);
  for (const FitResult& f : path.fits) {
    CHECK((f.beta[0] == 0.0) == (f.beta[1] == 0.0));
    CHECK((f.beta[2] == 0.0) == (f.beta[3] == 0.0));
  }
  // singleton groups match the plain fit
  PenaltySpec singles = pen(PenaltyFamily::Lasso, 0.0);
  singles.groups = {{0}, {1}, {2}, {3}};
  const PenaltySpec plain = pen(PenaltyFamily::Lasso, 0.0);
  const std::vector<double> g2 = lambda_path(lik, plain, 8);
  const PathResult ps = fit_path(lik, singles, g2, SolverKind::Lqa);
  const PathResult pp = fit_path(lik, plain, g2, SolverKind::Lqa);
  for (size_t i = 0; i < g2.size(); ++i)
    CHECK((ps.fits[i].beta - pp.fits[i].beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("warm-start path is deterministic") {
  const Dataset ds = oracle::random_dataset(50, 3, 3, 111, 0.25, 0.25);
  const PshLikelihood lik(ds, ModelKind::Marginal);
  const PenaltySpec scad = pen(PenaltyFamily::Scad, 0.0);
  const std::vector<double> grid = lambda_path(lik, scad, 15);
  const PathResult a = fit_path(lik, scad, grid);
  const PathResult b = fit_path(lik, scad, grid);
  for (size_t i = 0; i < grid.size(); ++i)
    CHECK(a.fits[i].beta == b.fits[i].beta);
}
