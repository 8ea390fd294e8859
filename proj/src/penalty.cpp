#include "pshpen/penalty.hpp"

#include <algorithm>
#include <cmath>

namespace pshpen {

const char* penalty_family_name(PenaltyFamily f) {
  switch (f) {
    case PenaltyFamily::None: return "none";
    case PenaltyFamily::Lasso: return "lasso";
    case PenaltyFamily::AdaptiveLasso: return "alasso";
    case PenaltyFamily::Scad: return "scad";
    case PenaltyFamily::Mcp: return "mcp";
  }
  return "unknown";
}

PenaltyFamily penalty_family_from_name(const std::string& name) {
  if (name == "none") return PenaltyFamily::None;
  if (name == "lasso") return PenaltyFamily::Lasso;
  if (name == "alasso") return PenaltyFamily::AdaptiveLasso;
  if (name == "scad") return PenaltyFamily::Scad;
  if (name == "mcp") return PenaltyFamily::Mcp;
  throw ConfigError("unknown penalty family: " + name);
}

double PenaltySpec::unit_lambda(int unit) const {
  double l = lambda;
  if (!groups.empty()) l *= std::sqrt(static_cast<double>(groups[unit].size()));
  if (family == PenaltyFamily::AdaptiveLasso) {
    if (adaptive_weights.size() == 0)
      throw UnpenalizedFitRequired("adaptive lasso requires data-adaptive weights");
    l *= adaptive_weights[unit];
  }
  return l;
}

void PenaltySpec::validate(int d) const {
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  if (family == PenaltyFamily::Scad && scad_a <= 2.0)
    throw ConfigError("SCAD shape must exceed 2");
  if (family == PenaltyFamily::Mcp && mcp_gamma <= 1.0)
    throw ConfigError("MCP shape must exceed 1");
  if (family == PenaltyFamily::AdaptiveLasso) {
    if (adaptive_weights.size() != unit_count(d))
      throw UnpenalizedFitRequired(
          "adaptive lasso weights missing or of wrong length");
    if ((adaptive_weights.array() <= 0.0).any())
      throw ConfigError("adaptive weights must be positive");
  }
  if (!groups.empty()) {
    std::vector<char> seen(d, 0);
    for (const auto& g : groups)
      for (int j : g) {
        if (j < 0 || j >= d || seen[j])
          throw ConfigError("groups must partition the coordinate set");
        seen[j] = 1;
      }
    if (std::count(seen.begin(), seen.end(), 1) != d)
      throw ConfigError("groups must cover every coordinate");
  }
}

double penalty_value(const PenaltySpec& spec, double b, int unit) {
  if (spec.family == PenaltyFamily::None) return 0.0;
  const double l = spec.unit_lambda(unit);
  switch (spec.family) {
    case PenaltyFamily::Lasso:
    case PenaltyFamily::AdaptiveLasso:
      return l * b;
    case PenaltyFamily::Scad: {
      const double a = spec.scad_a;
      if (b <= l) return l * b;
      if (b <= a * l)
        return l * l + (a * l * (b - l) - (b * b - l * l) / 2.0) / (a - 1.0);
      return (a + 1.0) * l * l / 2.0;
    }
    case PenaltyFamily::Mcp: {
      const double g = spec.mcp_gamma;
      if (b <= g * l) return l * b - b * b / (2.0 * g);
      return g * l * l / 2.0;
    }
    default:
      return 0.0;
  }
}

double penalty_derivative(const PenaltySpec& spec, double b, int unit) {
  if (spec.family == PenaltyFamily::None) return 0.0;
  const double l = spec.unit_lambda(unit);
  switch (spec.family) {
    case PenaltyFamily::Lasso:
    case PenaltyFamily::AdaptiveLasso:
      return l;
    case PenaltyFamily::Scad: {
      const double a = spec.scad_a;
      if (b <= l) return l;
      return std::max(a * l - b, 0.0) / (a - 1.0);
    }
    case PenaltyFamily::Mcp:
      return std::max(l - b / spec.mcp_gamma, 0.0);
    default:
      return 0.0;
  }
}

Eigen::VectorXd alasso_weights(const Eigen::VectorXd& mple,
                               const std::vector<std::vector<int>>& groups) {
  constexpr double kFloor = 1e-8;
  if (groups.empty()) {
    Eigen::VectorXd theta(mple.size());
    for (int j = 0; j < mple.size(); ++j)
      theta[j] = 1.0 / std::max(std::abs(mple[j]), kFloor);
    return theta;
  }
  Eigen::VectorXd theta(groups.size());
  for (size_t u = 0; u < groups.size(); ++u) {
    double norm2 = 0.0;
    for (int j : groups[u]) norm2 += mple[j] * mple[j];
    theta[u] = 1.0 / std::max(std::sqrt(norm2), kFloor);
  }
  return theta;
}

Eigen::VectorXd unit_norms(const PenaltySpec& spec, const Eigen::VectorXd& beta) {
  if (spec.groups.empty()) return beta.cwiseAbs();
  Eigen::VectorXd norms(spec.groups.size());
  for (size_t u = 0; u < spec.groups.size(); ++u) {
    double s = 0.0;
    for (int j : spec.groups[u]) s += beta[j] * beta[j];
    norms[u] = std::sqrt(s);
  }
  return norms;
}

Eigen::VectorXd lqa_diagonal(const PenaltySpec& spec, const Eigen::VectorXd& beta,
                             double eps) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(beta.size());
  if (spec.family == PenaltyFamily::None) return a;
  const Eigen::VectorXd norms = unit_norms(spec, beta);
  if (spec.groups.empty()) {
    for (int j = 0; j < beta.size(); ++j)
      a[j] = penalty_derivative(spec, norms[j], j) / (norms[j] + eps);
  } else {
    for (size_t u = 0; u < spec.groups.size(); ++u) {
      const double au =
          penalty_derivative(spec, norms[u], static_cast<int>(u)) / (norms[u] + eps);
      for (int j : spec.groups[u]) a[j] = au;
    }
  }
  return a;
}

double penalty_total(const PenaltySpec& spec, const Eigen::VectorXd& beta) {
  if (spec.family == PenaltyFamily::None) return 0.0;
  const Eigen::VectorXd norms = unit_norms(spec, beta);
  double total = 0.0;
  for (int u = 0; u < norms.size(); ++u)
    total += penalty_value(spec, norms[u], u);
  return total;
}

}  // namespace pshpen
