#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pshpen/objective.hpp"

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

}  // namespace

TEST_CASE("two-subject single-event likelihood has the closed form") {
  const double z1 = 0.7, z2 = -0.4;
  const Dataset ds = build_dataset({make(1.0, 1, 1, {z1}), make(2.0, 2, 1, {z2})});
  const PshLikelihood lik(ds, ModelKind::StratifiedRegular);
  for (double b : {-1.0, -0.2, 0.0, 0.5, 2.0}) {
    Eigen::VectorXd beta(1);
    beta[0] = b;
    const double expected =
        b * z1 - std::log(std::exp(b * z1) + std::exp(b * z2));
    CHECK(lik.loglik_only(beta) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(lik.evaluate(beta).loglik == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("loglik at zero counts weighted risk-set sizes") {
  // no censoring: every weight is one, so each event term is -log(size)
  const Dataset ds = build_dataset({make(1.0, 1, 1, {0.1, 0.2}),
                                    make(2.0, 2, 1, {-0.3, 0.5}),
                                    make(3.0, 1, 1, {0.0, 1.0}),
                                    make(4.0, 1, 1, {1.0, 0.0})});
  const PshLikelihood lik(ds, ModelKind::PooledPsh);
  // risk sets: t=1 -> 4 subjects; t=3 -> 3 (the cause-2 one stays in); t=4 -> 2
  const double expected = -(std::log(4.0) + std::log(3.0) + std::log(2.0));
  CHECK(lik.loglik_only(Eigen::VectorXd::Zero(2)) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("stratified score and information match finite differences") {
  const Dataset ds = build_dataset({make(0.8, 1, 1, {0.3, -0.1}),
                                    make(1.5, 0, 1, {0.2, 0.4}),
                                    make(2.2, 1, 1, {-0.5, 0.6}),
                                    make(3.0, 2, 1, {0.1, 0.1}),
                                    make(0.6, 1, 2, {0.9, -0.7}),
                                    make(1.1, 1, 2, {-0.2, 0.3}),
                                    make(2.5, 0, 2, {0.4, -0.4}),
                                    make(3.5, 1, 2, {0.0, 0.8})});
  const PshLikelihood lik(ds, ModelKind::StratifiedRegular);
  Eigen::VectorXd beta(2);
  beta << 0.3, -0.2;
  const ObjectiveValue obj = lik.evaluate(beta);
  const Eigen::VectorXd fd = oracle::fd_gradient(
      [&](const Eigen::VectorXd& b) { return lik.loglik_only(b); }, beta);
  CHECK((obj.score - fd).norm() < 1e-6 * (1.0 + fd.norm()));
  const Eigen::MatrixXd fdinfo = -oracle::fd_jacobian(
      [&](const Eigen::VectorXd& b) { return lik.evaluate(b).score; }, beta);
  CHECK((obj.info - fdinfo).norm() < 1e-5 * (1.0 + fdinfo.norm()));
}

TEST_CASE("marginal score matches finite differences on a 3-center sample") {
  const Dataset ds = oracle::random_dataset(12, 3, 3, 5, 0.25, 0.25);
  const PshLikelihood lik(ds, ModelKind::Marginal);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0.0, 0.4);
  for (int rep = 0; rep < 3; ++rep) {
    Eigen::VectorXd beta(3);
    for (int j = 0; j < 3; ++j) beta[j] = gauss(rng);
    const ObjectiveValue obj = lik.evaluate(beta);
    const Eigen::VectorXd fd = oracle::fd_gradient(
        [&](const Eigen::VectorXd& b) { return lik.loglik_only(b); }, beta);
    CHECK((obj.score - fd).norm() < 1e-6 * (1.0 + fd.norm()));
  }
}

TEST_CASE("single-center reduction: stratified = marginal = pooled") {
  const Dataset ds = oracle::random_dataset(30, 3, 1, 21, 0.3, 0.3);
  const PshLikelihood s(ds, ModelKind::StratifiedRegular);
  const PshLikelihood h(ds, ModelKind::StratifiedHigh);
  const PshLikelihood m(ds, ModelKind::Marginal);
  const PshLikelihood p(ds, ModelKind::PooledPsh);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 0.5);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd beta(3);
    for (int j = 0; j < 3; ++j) beta[j] = gauss(rng);
    const double ls = s.loglik_only(beta);
    CHECK(std::abs(h.loglik_only(beta) - ls) < 1e-10 * (1.0 + std::abs(ls)));
    CHECK(std::abs(m.loglik_only(beta) - ls) < 1e-10 * (1.0 + std::abs(ls)));
    CHECK(std::abs(p.loglik_only(beta) - ls) < 1e-10 * (1.0 + std::abs(ls)));
  }
}

TEST_CASE("stratified likelihood is additive over strata") {
  const Dataset ds = oracle::random_dataset(40, 2, 4, 33, 0.25, 0.25);
  const PshLikelihood strat(ds, ModelKind::StratifiedRegular);
  Eigen::VectorXd beta(2);
  beta << 0.4, -0.6;
  double sum = 0.0;
  for (int k = 0; k < ds.n_centers(); ++k) {
    auto [b, e] = ds.stratum_range(k);
    std::vector<int> rows;
    for (int i = b; i < e; ++i) rows.push_back(i);
    const Dataset sub = ds.select_rows(rows);
    if (sub.cause1_count() == 0) continue;
    sum += PshLikelihood(sub, ModelKind::PooledPsh).loglik_only(beta);
  }
  CHECK(strat.loglik_only(beta) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("translation invariance of risk-set ratios") {
  // a constant extra linear-predictor offset cancels inside every event term
  const Dataset ds = oracle::random_dataset(25, 2, 2, 44, 0.3, 0.3);
  std::vector<Subject> recs = ds.to_records();
  for (Subject& s : recs) {
    Eigen::VectorXd z(3);
    z << s.covariates[0], s.covariates[1], 1.0;
    s.covariates = z;
  }
  const Dataset aug = build_dataset(recs);
  const PshLikelihood base(ds, ModelKind::StratifiedRegular);
  const PshLikelihood lifted(aug, ModelKind::StratifiedRegular);
  Eigen::VectorXd beta(2), beta_c(3);
  beta << 0.5, -0.3;
  for (double c : {0.0, 1.7, -2.5}) {
    beta_c << 0.5, -0.3, c;
    const ObjectiveValue a = base.evaluate(beta);
    const ObjectiveValue b = lifted.evaluate(beta_c);
    CHECK(std::abs(a.loglik - b.loglik) < 1e-10 * (1.0 + std::abs(a.loglik)));
    CHECK((a.score - b.score.head(2)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.info - b.info.topLeftCorner(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("information is positive semidefinite") {
  const Dataset ds = oracle::random_dataset(35, 4, 3, 55, 0.3, 0.3);
  const PshLikelihood lik(ds, ModelKind::StratifiedRegular);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 0.6);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd beta(4), v(4);
    for (int j = 0; j < 4; ++j) {
      beta[j] = gauss(rng);
      v[j] = gauss(rng);
    }
    const ObjectiveValue obj = lik.evaluate(beta);
    CHECK(v.dot(obj.info * v) >= -1e-10 * obj.info.trace());
  }
}

TEST_CASE("eta derivatives agree with the identity design") {
  // with Z = I the linear predictors are the coefficients, so the gradient
  // equals the score and the curvature equals the information diagonal
  const int n = 7;
  std::vector<Subject> recs;
  std::mt19937_64 rng(13);
  std::exponential_distribution<double> expo(1.0);
  for (int i = 0; i < n; ++i) {
    Subject s;
    s.time = expo(rng) + 0.1;
    s.status = i % 3;
    s.center = 1;
    s.covariates = Eigen::VectorXd::Zero(n);
    s.covariates[i] = 1.0;
    recs.push_back(s);
  }
  recs[0].status = 1;
  const Dataset ds = build_dataset(recs);
  const PshLikelihood lik(ds, ModelKind::PooledPsh);
  Eigen::VectorXd beta(n);
  std::normal_distribution<double> gauss(0.0, 0.3);
  for (int j = 0; j < n; ++j) beta[j] = gauss(rng);
  const ObjectiveValue obj = lik.evaluate(beta);
  Eigen::VectorXd grad, curv;
  lik.eta_derivatives(beta, grad, curv);
  // construction may reorder rows; locate each subject's unit coordinate
  for (int i = 0; i < n; ++i) {
    int coord = -1;
    for (int j = 0; j < n; ++j)
      if (ds.covariates()(i, j) == 1.0) coord = j;
    REQUIRE(coord >= 0);
    CHECK(grad[i] == doctest::Approx(obj.score[coord]).epsilon(1e-9));
    CHECK(curv[i] == doctest::Approx(obj.info(coord, coord)).epsilon(1e-9));
  }
}

TEST_CASE("score influence rows sum to the score") {
  const Dataset ds = oracle::random_dataset(30, 3, 3, 66, 0.3, 0.3);
  for (ModelKind kind : {ModelKind::StratifiedRegular, ModelKind::StratifiedHigh,
                         ModelKind::Marginal}) {
    const PshLikelihood lik(ds, kind);
    Eigen::VectorXd beta(3);
    beta << 0.2, -0.4, 0.1;
    const Eigen::VectorXd score = lik.evaluate(beta).score;
    for (bool corrected : {false, true}) {
      const Eigen::MatrixXd infl = lik.score_influence(beta, corrected);
      const Eigen::VectorXd sum = infl.colwise().sum().transpose();
      CHECK((sum - score).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + score.norm()));
    }
  }
}

TEST_CASE("strata without cause-1 events are dropped") {
  const Dataset ds = build_dataset({make(1.0, 1, 1, {0.5}), make(2.0, 0, 1, {0.1}),
                                    make(1.5, 0, 2, {0.2}), make(2.5, 2, 2, {0.3})});
  const PshLikelihood lik(ds, ModelKind::StratifiedHigh);
  REQUIRE(lik.dropped_centers().size() == 1);
  CHECK(lik.dropped_centers()[0] == 2);
  const Dataset only1 =
      build_dataset({make(1.0, 1, 1, {0.5}), make(2.0, 0, 1, {0.1})});
  Eigen::VectorXd beta(1);
  beta << 0.4;
  CHECK(lik.loglik_only(beta) ==
        doctest::Approx(
            PshLikelihood(only1, ModelKind::StratifiedHigh).loglik_only(beta)));
}

TEST_CASE("no cause-1 events anywhere is an error") {
  CHECK_THROWS_AS(PshLikelihood(build_dataset({make(1.0, 0, 1, {0.1}),
                                               make(2.0, 2, 1, {0.2})}),
                                ModelKind::PooledPsh),
                  DataError);
}
