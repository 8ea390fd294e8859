#include <doctest.h>

#include <cmath>

#include "pshpen/penalty.hpp"

using namespace pshpen;

namespace {

PenaltySpec spec(PenaltyFamily f, double lambda) {
  PenaltySpec s;
  s.family = f;
  s.lambda = lambda;
  return s;
}

}  // namespace

TEST_CASE("scad derivative branches") {
  const PenaltySpec s = spec(PenaltyFamily::Scad, 1.0);
  CHECK(penalty_derivative(s, 0.5, 0) == doctest::Approx(1.0));
  CHECK(penalty_derivative(s, 2.0, 0) == doctest::Approx((3.7 - 2.0) / 2.7));
  CHECK(penalty_derivative(s, 4.0, 0) == 0.0);
}

TEST_CASE("mcp derivative") {
  const PenaltySpec s = spec(PenaltyFamily::Mcp, 1.0);
  CHECK(penalty_derivative(s, 0.54, 0) == doctest::Approx(0.8));
  CHECK(penalty_derivative(s, 2.7, 0) == 0.0);
  CHECK(penalty_derivative(s, 5.0, 0) == 0.0);
}

TEST_CASE("penalty values") {
  CHECK(penalty_value(spec(PenaltyFamily::Lasso, 0.5), 2.0, 0) == doctest::Approx(1.0));
  for (PenaltyFamily f : {PenaltyFamily::Lasso, PenaltyFamily::Scad, PenaltyFamily::Mcp})
    CHECK(penalty_value(spec(f, 0.7), 0.0, 0) == 0.0);
  // SCAD saturates at (a+1) lambda^2 / 2
  const double lambda = 0.3;
  CHECK(penalty_value(spec(PenaltyFamily::Scad, lambda), 10.0 * lambda, 0) ==
        doctest::Approx(2.35 * lambda * lambda));
  // MCP saturates at gamma lambda^2 / 2
  CHECK(penalty_value(spec(PenaltyFamily::Mcp, lambda), 10.0 * lambda, 0) ==
        doctest::Approx(2.7 / 2.0 * lambda * lambda));
}

TEST_CASE("value derivative consistency by central differences") {
  const double h = 1e-7;
  for (PenaltyFamily f :
       {PenaltyFamily::Lasso, PenaltyFamily::Scad, PenaltyFamily::Mcp}) {
    const PenaltySpec s = spec(f, 0.8);
    for (double b : {0.15, 0.5, 1.1, 2.0, 2.5, 4.0}) {
      // stay away from the kinks at lambda, a*lambda, gamma*lambda
      const double fd =
          (penalty_value(s, b + h, 0) - penalty_value(s, b - h, 0)) / (2.0 * h);
      const double an = penalty_derivative(s, b, 0);
      CHECK(std::abs(fd - an) < 1e-6 * (1.0 + std::abs(an)));
    }
  }
}

TEST_CASE("derivative monotonicity") {
  for (PenaltyFamily f : {PenaltyFamily::Scad, PenaltyFamily::Mcp}) {
    const PenaltySpec s = spec(f, 0.6);
    double prev = penalty_derivative(s, 0.0, 0);
    for (double b = 0.02; b < 4.0; b += 0.02) {
      const double cur = penalty_derivative(s, b, 0);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
  const PenaltySpec l = spec(PenaltyFamily::Lasso, 0.6);
  CHECK(penalty_derivative(l, 0.1, 0) == penalty_derivative(l, 3.0, 0));
}

TEST_CASE("alasso weights are floored reciprocals") {
  Eigen::VectorXd mple(2);
  mple << 2.0, 0.5;
  const Eigen::VectorXd theta = alasso_weights(mple);
  CHECK(theta[0] == doctest::Approx(0.5));
  CHECK(theta[1] == doctest::Approx(2.0));
  Eigen::VectorXd zero(1);
  zero << 0.0;
  CHECK(alasso_weights(zero)[0] == doctest::Approx(1e8));
  // determinism
  CHECK(alasso_weights(mple) == alasso_weights(mple));
}

TEST_CASE("singleton groups reproduce the individual penalty") {
  PenaltySpec grouped = spec(PenaltyFamily::Scad, 0.9);
  grouped.groups = {{0}, {1}, {2}};
  const PenaltySpec plain = spec(PenaltyFamily::Scad, 0.9);
  for (double b : {0.1, 0.5, 1.5, 3.0, 5.0})
    for (int u = 0; u < 3; ++u) {
      CHECK(penalty_value(grouped, b, u) == doctest::Approx(penalty_value(plain, b, 0)));
      CHECK(penalty_derivative(grouped, b, u) ==
            doctest::Approx(penalty_derivative(plain, b, 0)));
    }
}

TEST_CASE("group penalty scales lambda by sqrt group size") {
  PenaltySpec grouped = spec(PenaltyFamily::Lasso, 0.5);
  grouped.groups = {{0, 1, 2, 3}};
  CHECK(penalty_derivative(grouped, 1.0, 0) == doctest::Approx(0.5 * 2.0));
  grouped.validate(4);
  PenaltySpec bad = grouped;
  bad.groups = {{0, 1}, {1, 2, 3}};
  CHECK_THROWS_AS(bad.validate(4), ConfigError);
}

TEST_CASE("invalid shapes are rejected") {
  PenaltySpec s = spec(PenaltyFamily::Scad, 0.1);
  s.scad_a = 1.5;
  CHECK_THROWS_AS(s.validate(2), ConfigError);
  PenaltySpec m = spec(PenaltyFamily::Mcp, 0.1);
  m.mcp_gamma = 0.9;
  CHECK_THROWS_AS(m.validate(2), ConfigError);
  PenaltySpec a = spec(PenaltyFamily::AdaptiveLasso, 0.1);
  CHECK_THROWS_AS(a.validate(2), UnpenalizedFitRequired);
}
