#include "pshpen/prognostics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pshpen/ipcw.hpp"
#include "pshpen/parallel.hpp"
#include "pshpen/rng.hpp"

namespace pshpen {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double step_at(const std::vector<double>& times, const std::vector<double>& values,
               double t) {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0.0;
  return values[static_cast<size_t>(it - times.begin()) - 1];
}

}  // namespace

bool BaselineCumHazard::has_center(int center) const {
  for (const UnitBaseline& u : units)
    if (u.center == -1 || u.center == center) return true;
  return false;
}

double BaselineCumHazard::at(double t, int center) const {
  for (const UnitBaseline& u : units)
    if (u.center == -1 || u.center == center)
      return step_at(u.times, u.cumhaz, t);
  throw HighStratificationUnsupported("no baseline for center " +
                                      std::to_string(center));
}

BaselineCumHazard breslow_baseline(const PshLikelihood& lik, const FitResult& fit) {
  if (lik.kind() == ModelKind::StratifiedHigh)
    throw HighStratificationUnsupported(
        "the baseline cumulative subdistribution hazard is not estimable "
        "under high stratification");
  BaselineCumHazard out;
  out.kind = lik.kind();
  for (const auto& unit : lik.breslow(fit.beta)) {
    BaselineCumHazard::UnitBaseline b;
    b.center = unit.center;
    b.times = unit.times;
    b.cumhaz.resize(unit.increments.size());
    double acc = 0.0;
    for (size_t e = 0; e < unit.increments.size(); ++e) {
      acc += unit.increments[e];
      b.cumhaz[e] = acc;
    }
    out.units.push_back(std::move(b));
  }
  return out;
}

double CifPredictor::cif(double t, const Eigen::VectorXd& z, int center) const {
  const double cum = baseline.at(t, center);
  return 1.0 - std::exp(-cum * std::exp(beta.dot(z)));
}

CifPredictor make_cif_predictor(const PshLikelihood& lik, const FitResult& fit) {
  return CifPredictor{breslow_baseline(lik, fit), fit.beta};
}

double c_index(const Dataset& test, const Eigen::VectorXd& pi, double tau) {
  if (!(tau > 0.0)) throw ConfigError("c_index: horizon must be positive");
  const int n = test.n();
  long evaluable = 0;
  double concordant = 0.0;
  for (int i = 0; i < n; ++i) {
    if (test.status(i) != kCause1 || !(test.time(i) < tau)) continue;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const bool at_risk = test.time(j) > test.time(i) ||
                           (test.status(j) == kCause2 && test.time(j) <= test.time(i));
      if (!at_risk) continue;
      ++evaluable;
      if (pi[i] > pi[j])
        concordant += 1.0;
      else if (pi[i] == pi[j])
        concordant += 0.5;
    }
  }
  if (evaluable == 0)
    throw NoEvaluablePairs("c_index: no evaluable ordered pairs before the horizon");
  return concordant / static_cast<double>(evaluable);
}

double d_index(const Dataset& test, const Eigen::VectorXd& pi) {
  const int n = test.n();
  {
    double lo = pi.minCoeff(), hi = pi.maxCoeff();
    if (!(hi > lo)) throw DegeneratePI("d_index: prognostic index is constant");
  }
  // midranks
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return pi[a] < pi[b]; });
  std::vector<double> rank(n);
  for (int p = 0; p < n;) {
    int q = p;
    while (q < n && pi[order[q]] == pi[order[p]]) ++q;
    const double mid = 0.5 * (p + q - 1) + 1.0;  // 1-based midrank
    for (int r = p; r < q; ++r) rank[order[r]] = mid;
    p = q;
  }
  const double kappa = std::sqrt(8.0 / 3.14159265358979323846);
  std::vector<Subject> recs(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x(1);
    x[0] = normal_quantile((rank[i] - 0.375) / (n + 0.25)) / kappa;
    recs[i] = Subject{test.time(i), test.status(i), 1, x};
  }
  const Dataset scaled = build_dataset(recs);
  const PshLikelihood lik(scaled, ModelKind::PooledPsh);
  const FitResult fit = fit_unpenalized(lik);
  return std::abs(fit.beta[0]);
}

PredictionErrorResult prediction_error(const Dataset& test, const CifPredictor& pred,
                                       double t_star) {
  if (!(t_star > 0.0)) throw ConfigError("prediction_error: bad horizon");
  const CensoringSurvival g = km_censoring_rows(test, 0, test.n());
  if (!(g.left(t_star) > 0.0))
    throw HorizonBeyondSupport(
        "censoring survival vanishes before the requested horizon");

  PredictionErrorResult result;
  std::vector<int> included;
  for (int i = 0; i < test.n(); ++i) {
    if (pred.covers_center(test.center(i)))
      included.push_back(i);
    else
      ++result.excluded;
  }
  if (included.empty()) throw DataError("prediction_error: no scorable subjects");

  std::vector<double> grid{0.0};
  for (int i : included)
    if (test.status(i) == kCause1 && test.time(i) <= t_star)
      grid.push_back(test.time(i));
  grid.push_back(t_star);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  auto brier = [&](double t) {
    double sum = 0.0;
    for (int i : included) {
      double w = 0.0;
      if (test.time(i) > t)
        w = 1.0 / g.evaluate(t);
      else if (test.status(i) != kCensored)
        w = 1.0 / g.left(test.time(i));
      if (w == 0.0) continue;
      const double outcome =
          (test.time(i) <= t && test.status(i) == kCause1) ? 1.0 : 0.0;
      const double f = pred.cif(t, test.covariates().row(i).transpose(),
                                test.center(i));
      sum += w * (outcome - f) * (outcome - f);
    }
    return sum / included.size();
  };

  double integral = 0.0;
  double prev_t = grid[0], prev_b = brier(grid[0]);
  for (size_t k = 1; k < grid.size(); ++k) {
    const double b = brier(grid[k]);
    integral += 0.5 * (b + prev_b) * (grid[k] - prev_t);
    prev_t = grid[k];
    prev_b = b;
  }
  result.integrated = integral;
  return result;
}

namespace {

struct SplitRows {
  std::vector<int> train, test;
};

SplitRows draw_split(const Dataset& ds, ModelKind model, double fraction, Rng& rng) {
  SplitRows out;
  if (fraction >= 1.0) {
    for (int i = 0; i < ds.n(); ++i) out.train.push_back(i);
    out.test = out.train;
    return out;
  }
  if (model == ModelKind::StratifiedRegular) {
    for (int k = 0; k < ds.n_centers(); ++k) {
      auto [b, e] = ds.stratum_range(k);
      std::vector<int> pool;
      for (int i = b; i < e; ++i) pool.push_back(i);
      const int m = std::clamp(
          static_cast<int>(std::lround(fraction * pool.size())), 1,
          static_cast<int>(pool.size()));
      std::shuffle(pool.begin(), pool.end(), rng);
      out.train.insert(out.train.end(), pool.begin(), pool.begin() + m);
      out.test.insert(out.test.end(), pool.begin() + m, pool.end());
    }
  } else if (model == ModelKind::PooledPsh) {
    std::vector<int> pool(ds.n());
    std::iota(pool.begin(), pool.end(), 0);
    const int m = std::clamp(static_cast<int>(std::lround(fraction * ds.n())), 1,
                             ds.n() - 1);
    std::shuffle(pool.begin(), pool.end(), rng);
    out.train.assign(pool.begin(), pool.begin() + m);
    out.test.assign(pool.begin() + m, pool.end());
  } else {
    // whole centers are the sampling unit
    std::vector<int> centers(ds.n_centers());
    std::iota(centers.begin(), centers.end(), 0);
    const int m = std::clamp(
        static_cast<int>(std::lround(fraction * ds.n_centers())), 1,
        ds.n_centers() - 1);
    std::shuffle(centers.begin(), centers.end(), rng);
    for (int p = 0; p < ds.n_centers(); ++p) {
      auto [b, e] = ds.stratum_range(centers[p]);
      auto& dest = p < m ? out.train : out.test;
      for (int i = b; i < e; ++i) dest.push_back(i);
    }
  }
  return out;
}

}  // namespace

SplitEvalResult split_eval(const Dataset& ds, ModelKind model,
                           const PenaltySpec& penalty, int splits,
                           double train_fraction, uint64_t seed,
                           double pe_horizon, int threads, SolverKind solver) {
  if (splits < 1) throw ConfigError("split_eval: splits must be at least 1");
  const bool want_pe = model != ModelKind::StratifiedHigh;

  struct SplitOutcome {
    bool ok = false;
    double c = 0.0, d = 0.0, pe = 0.0;
    bool has_pe = false;
  };
  std::vector<SplitOutcome> outcomes(splits);

  parallel_for(splits, resolve_threads(threads), [&](int s) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(s)));
    try {
      const SplitRows rows = draw_split(ds, model, train_fraction, rng);
      if (rows.test.empty()) return;
      const Dataset train = ds.select_rows(rows.train);
      const Dataset test = ds.select_rows(rows.test);
      const PshLikelihood lik(train, model);

      FitResult fit;
      if (penalty.family == PenaltyFamily::None) {
        fit = fit_unpenalized(lik);
      } else {
        PenaltySpec pen = penalty;
        if (pen.family == PenaltyFamily::AdaptiveLasso &&
            pen.adaptive_weights.size() == 0)
          pen.adaptive_weights =
              alasso_weights(fit_unpenalized(lik).beta, pen.groups);
        const std::vector<double> grid = lambda_path(lik, pen);
        PathResult path = fit_path(lik, pen, grid, solver);
        fit = path.fits[select_bic(path, lik)];
      }

      const Eigen::VectorXd pi = test.covariates() * fit.beta;
      double tau = 0.0;
      for (int i = 0; i < test.n(); ++i)
        if (test.status(i) == kCause1) tau = std::max(tau, test.time(i));
      if (!(tau > 0.0)) return;

      SplitOutcome& o = outcomes[s];
      o.c = c_index(test, pi, tau);
      o.d = d_index(test, pi);
      if (want_pe) {
        const CifPredictor pred = make_cif_predictor(lik, fit);
        double horizon = pe_horizon;
        if (!(horizon > 0.0)) {
          std::vector<double> etimes;
          const CensoringSurvival g = km_censoring_rows(test, 0, test.n());
          for (int i = 0; i < test.n(); ++i)
            if (test.status(i) == kCause1 && g.left(test.time(i)) > 0.0)
              etimes.push_back(test.time(i));
          if (!etimes.empty()) {
            std::sort(etimes.begin(), etimes.end());
            horizon = etimes[static_cast<size_t>(0.75 * (etimes.size() - 1))];
          }
        }
        if (horizon > 0.0) {
          o.pe = prediction_error(test, pred, horizon).integrated;
          o.has_pe = true;
        }
      }
      o.ok = true;
    } catch (const Error&) {
      // flagged: outcome stays not-ok
    }
  });

  SplitEvalResult result;
  std::vector<double> cs, dss, pes;
  for (const SplitOutcome& o : outcomes) {
    if (!o.ok) continue;
    cs.push_back(o.c);
    dss.push_back(o.d);
    if (o.has_pe) pes.push_back(o.pe);
  }
  result.splits_used = static_cast<int>(cs.size());
  result.failures = splits - result.splits_used;
  auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
    if (v.empty()) {
      mean = se = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    if (v.size() < 2) {
      se = 0.0;
      return;
    }
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / (v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
  };
  mean_se(cs, result.c_mean, result.c_se);
  mean_se(dss, result.d_mean, result.d_se);
  if (want_pe && !pes.empty()) {
    mean_se(pes, result.pe_mean, result.pe_se);
    result.pe_available = true;
  }
  return result;
}

IndexTable IndexTable::from_json(const std::string& text) {
  const nlohmann::json doc = nlohmann::json::parse(text);
  if (!doc.contains("factors") || !doc["factors"].is_array())
    throw ConfigError("index table: missing 'factors' array");
  IndexTable table;
  for (const auto& f : doc["factors"]) {
    IndexFactor factor;
    factor.name = f.at("name").get<std::string>();
    factor.kind = f.at("kind").get<std::string>();
    factor.coef = f.at("coef").get<double>();
    factor.ref = f.value("ref", 0.0);
    factor.knot = f.value("knot", 0.0);
    factor.scale = f.value("scale", 1.0);
    if (factor.kind != "linear" && factor.kind != "hinge_above" &&
        factor.kind != "hinge_below" && factor.kind != "indicator")
      throw ConfigError("index table: unknown factor kind '" + factor.kind + "'");
    if (factor.scale == 0.0) throw ConfigError("index table: zero scale");
    table.factors.push_back(std::move(factor));
  }
  return table;
}

double IndexTable::prognostic_index(const std::map<std::string, double>& values) const {
  double pi = 0.0;
  for (const IndexFactor& f : factors) {
    const auto it = values.find(f.name);
    if (it == values.end())
      throw MissingFactor("prognostic index: missing factor '" + f.name + "'");
    const double x = it->second;
    if (f.kind == "linear") {
      pi += f.coef * (x - f.ref) / f.scale;
    } else if (f.kind == "hinge_above") {
      if (x > f.knot) pi += f.coef * (x - f.knot) / f.scale;
    } else if (f.kind == "hinge_below") {
      if (x < f.knot) pi += f.coef * (x - f.knot) / f.scale;
    } else {  // indicator
      if (x != 0.0) pi += f.coef;
    }
  }
  return pi;
}

}  // namespace pshpen
