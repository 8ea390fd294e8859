#include "pshpen/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pshpen {

namespace {

// index of the first event time >= t (for sums over t_e >= t)
int first_at_or_after(const std::vector<double>& etime, double t) {
  return static_cast<int>(std::lower_bound(etime.begin(), etime.end(), t) -
                          etime.begin());
}

// index of the first event time > t (prefix sums cover t_e <= t)
int first_after(const std::vector<double>& etime, double t) {
  return static_cast<int>(std::upper_bound(etime.begin(), etime.end(), t) -
                          etime.begin());
}

}  // namespace

PshLikelihood::PshLikelihood(const Dataset& ds, ModelKind kind)
    : ds_(ds), kind_(kind) {
  const CensoringScope scope = kind == ModelKind::StratifiedRegular
                                   ? CensoringScope::PerStratum
                                   : CensoringScope::Pooled;
  curves_ = km_censoring(ds_, scope);
  row_curve_.assign(ds_.n(), 0);
  if (scope == CensoringScope::PerStratum)
    for (int i = 0; i < ds_.n(); ++i) row_curve_[i] = ds_.stratum_of_row(i);

  auto make_unit = [&](int row_begin, int row_end, int center, int curve) {
    Unit u;
    u.center = center;
    u.curve = curve;
    for (int i = row_begin; i < row_end; ++i) u.rows.push_back(i);
    std::sort(u.rows.begin(), u.rows.end(), [&](int a, int b) {
      if (ds_.time(a) != ds_.time(b)) return ds_.time(a) < ds_.time(b);
      if (ds_.status(a) != ds_.status(b)) return ds_.status(a) < ds_.status(b);
      return a < b;
    });
    u.rows_desc = u.rows;
    std::sort(u.rows_desc.begin(), u.rows_desc.end(), [&](int a, int b) {
      if (ds_.time(a) != ds_.time(b)) return ds_.time(a) > ds_.time(b);
      return a < b;
    });
    const CensoringSurvival& g = curves_[curve];
    u.event_row_begin.push_back(0);
    for (size_t p = 0; p < u.rows.size();) {
      const double t = ds_.time(u.rows[p]);
      size_t q = p;
      int d1 = 0;
      while (q < u.rows.size() && ds_.time(u.rows[q]) == t) {
        const int row = u.rows[q];
        if (ds_.status(row) == kCause1) {
          u.event_rows.push_back(row);
          ++d1;
        }
        ++q;
      }
      if (d1 > 0) {
        u.etime.push_back(t);
        u.ecount.push_back(d1);
        u.event_row_begin.push_back(static_cast<int>(u.event_rows.size()));
        u.g_left.push_back(g.left(t));
      }
      p = q;
    }
    for (int row : u.rows) {
      if (ds_.status(row) != kCause2) continue;
      const double denom = g.left(ds_.time(row));
      if (denom <= 0.0)
        throw ZeroDenominator(
            "censoring survival vanishes at the failure time of a "
            "competing-event subject (row " + std::to_string(row) + ")");
      u.c2_rows.push_back(row);
      u.c2_invg.push_back(1.0 / denom);
    }
    return u;
  };

  if (kind == ModelKind::StratifiedRegular || kind == ModelKind::StratifiedHigh) {
    for (int k = 0; k < ds_.n_centers(); ++k) {
      if (ds_.cause1_count_in(k) == 0) {
        dropped_.push_back(ds_.center_id(k));
        continue;
      }
      auto [b, e] = ds_.stratum_range(k);
      units_.push_back(make_unit(b, e, ds_.center_id(k),
                                 scope == CensoringScope::PerStratum ? k : 0));
    }
    if (units_.empty())
      throw DataError("stratified likelihood: no stratum holds a cause-1 event");
  } else {
    if (ds_.cause1_count() == 0)
      throw DataError("likelihood requires at least one cause-1 event");
    units_.push_back(make_unit(0, ds_.n(), -1, 0));
  }
}

double PshLikelihood::penalty_scale() const {
  return kind_ == ModelKind::Marginal ? static_cast<double>(ds_.n_centers())
                                      : static_cast<double>(ds_.n());
}

double PshLikelihood::bic_log_factor() const {
  return std::log(penalty_scale());
}

const CensoringSurvival& PshLikelihood::censoring_for_row(int row) const {
  return curves_[row_curve_[row]];
}

void PshLikelihood::check_beta(const Eigen::VectorXd& beta) const {
  if (beta.size() != ds_.d())
    throw DimensionMismatch("beta has length " + std::to_string(beta.size()) +
                            ", expected " + std::to_string(ds_.d()));
  if (!beta.allFinite()) throw NumericOverflow("beta has non-finite entries");
}

PshLikelihood::EventSums PshLikelihood::unit_event_sums(
    const Unit& u, const Eigen::VectorXd& eta, bool need_means) const {
  const int d = ds_.d();
  const int E = static_cast<int>(u.etime.size());
  EventSums es;
  es.r.setZero(ds_.n());
  double shift = -std::numeric_limits<double>::infinity();
  for (int i : u.rows) shift = std::max(shift, eta[i]);
  es.shift = shift;
  for (int i : u.rows) es.r[i] = std::exp(eta[i] - shift);

  es.s0.assign(E, 0.0);
  Eigen::MatrixXd r1;
  if (need_means) {
    r1.setZero(d, E);
    es.means.setZero(d, E);
  }

  // at-risk part, descending over the event grid
  double acc0 = 0.0;
  Eigen::VectorXd acc1 = Eigen::VectorXd::Zero(d);
  size_t p = 0;
  for (int e = E - 1; e >= 0; --e) {
    while (p < u.rows_desc.size() && ds_.time(u.rows_desc[p]) >= u.etime[e]) {
      const int i = u.rows_desc[p];
      acc0 += es.r[i];
      if (need_means) acc1 += es.r[i] * ds_.covariates().row(i).transpose();
      ++p;
    }
    es.s0[e] = acc0;
    if (need_means) r1.col(e) = acc1;
  }

  // competing-event pool, ascending
  double q0 = 0.0;
  Eigen::VectorXd q1 = Eigen::VectorXd::Zero(d);
  size_t cp = 0;
  for (int e = 0; e < E; ++e) {
    while (cp < u.c2_rows.size() && ds_.time(u.c2_rows[cp]) < u.etime[e]) {
      const int i = u.c2_rows[cp];
      const double ri = es.r[i] * u.c2_invg[cp];
      q0 += ri;
      if (need_means) q1 += ri * ds_.covariates().row(i).transpose();
      ++cp;
    }
    es.s0[e] += u.g_left[e] * q0;
    if (!(es.s0[e] > 0.0) || !std::isfinite(es.s0[e]))
      throw NumericOverflow("risk-set sum is not positive at an event time");
    if (need_means) es.means.col(e) = (r1.col(e) + u.g_left[e] * q1) / es.s0[e];
  }
  return es;
}

ObjectiveValue PshLikelihood::evaluate(const Eigen::VectorXd& beta) const {
  check_beta(beta);
  const int n = ds_.n(), d = ds_.d();
  const Eigen::VectorXd eta = ds_.covariates() * beta;
  ObjectiveValue out;
  out.score = Eigen::VectorXd::Zero(d);
  out.info = Eigen::MatrixXd::Zero(d, d);

  Eigen::VectorXd r(n);
  for (const Unit& u : units_) {
    const int E = static_cast<int>(u.etime.size());
    double shift = -std::numeric_limits<double>::infinity();
    for (int i : u.rows) shift = std::max(shift, eta[i]);
    for (int i : u.rows) r[i] = std::exp(eta[i] - shift);

    std::vector<double> r0(E);
    Eigen::MatrixXd r1(d, E);
    std::vector<Eigen::MatrixXd> r2(E);

    double acc0 = 0.0;
    Eigen::VectorXd acc1 = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd acc2 = Eigen::MatrixXd::Zero(d, d);
    size_t p = 0;
    for (int e = E - 1; e >= 0; --e) {
      while (p < u.rows_desc.size() && ds_.time(u.rows_desc[p]) >= u.etime[e]) {
        const int i = u.rows_desc[p];
        const Eigen::VectorXd zi = ds_.covariates().row(i).transpose();
        acc0 += r[i];
        acc1.noalias() += r[i] * zi;
        acc2.noalias() += r[i] * zi * zi.transpose();
        ++p;
      }
      r0[e] = acc0;
      r1.col(e) = acc1;
      r2[e] = acc2;
    }

    double q0 = 0.0;
    Eigen::VectorXd q1 = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd q2 = Eigen::MatrixXd::Zero(d, d);
    size_t cp = 0;
    for (int e = 0; e < E; ++e) {
      while (cp < u.c2_rows.size() && ds_.time(u.c2_rows[cp]) < u.etime[e]) {
        const int i = u.c2_rows[cp];
        const double ri = r[i] * u.c2_invg[cp];
        const Eigen::VectorXd zi = ds_.covariates().row(i).transpose();
        q0 += ri;
        q1.noalias() += ri * zi;
        q2.noalias() += ri * zi * zi.transpose();
        ++cp;
      }
      const double ge = u.g_left[e];
      const double s0 = r0[e] + ge * q0;
      if (!(s0 > 0.0) || !std::isfinite(s0))
        throw NumericOverflow("risk-set sum is not positive at an event time");
      const Eigen::VectorXd ebar = (r1.col(e) + ge * q1) / s0;
      const Eigen::MatrixXd s2 = r2[e] + ge * q2;
      const double de = u.ecount[e];

      for (int j = u.event_row_begin[e]; j < u.event_row_begin[e + 1]; ++j) {
        const int i = u.event_rows[j];
        out.loglik += eta[i] - shift;
        out.score += ds_.covariates().row(i).transpose();
      }
      out.loglik -= de * std::log(s0);
      out.score.noalias() -= de * ebar;
      out.info.noalias() += de * (s2 / s0 - ebar * ebar.transpose());
    }
  }
  // enforce exact symmetry against accumulated roundoff
  out.info = ((out.info + out.info.transpose()) / 2.0).eval();
  return out;
}

double PshLikelihood::loglik_only(const Eigen::VectorXd& beta) const {
  check_beta(beta);
  const Eigen::VectorXd eta = ds_.covariates() * beta;
  double ll = 0.0;
  for (const Unit& u : units_) {
    const EventSums es = unit_event_sums(u, eta, false);
    for (int e = 0; e < static_cast<int>(u.etime.size()); ++e) {
      for (int j = u.event_row_begin[e]; j < u.event_row_begin[e + 1]; ++j)
        ll += eta[u.event_rows[j]] - es.shift;
      ll -= u.ecount[e] * std::log(es.s0[e]);
    }
  }
  return ll;
}

void PshLikelihood::eta_derivatives(const Eigen::VectorXd& beta,
                                    Eigen::VectorXd& grad,
                                    Eigen::VectorXd& curvature) const {
  check_beta(beta);
  const Eigen::VectorXd eta = ds_.covariates() * beta;
  grad.setZero(ds_.n());
  curvature.setZero(ds_.n());
  for (const Unit& u : units_) {
    const EventSums es = unit_event_sums(u, eta, false);
    const int E = static_cast<int>(u.etime.size());
    // padded prefix sums over events t_e <= t and suffix sums over t_e > t
    std::vector<double> pre_a(E + 1, 0.0), pre_b(E + 1, 0.0);
    std::vector<double> suf_g(E + 1, 0.0), suf_g2(E + 1, 0.0);
    for (int e = 0; e < E; ++e) {
      pre_a[e + 1] = pre_a[e] + u.ecount[e] / es.s0[e];
      pre_b[e + 1] = pre_b[e] + u.ecount[e] / (es.s0[e] * es.s0[e]);
    }
    for (int e = E - 1; e >= 0; --e) {
      suf_g[e] = suf_g[e + 1] + u.ecount[e] * u.g_left[e] / es.s0[e];
      suf_g2[e] = suf_g2[e + 1] +
                  u.ecount[e] * u.g_left[e] * u.g_left[e] / (es.s0[e] * es.s0[e]);
    }
    for (int i : u.rows) {
      const int ub = first_after(u.etime, ds_.time(i));
      const double e1 = es.r[i] * pre_a[ub];
      const double e2 = es.r[i] * es.r[i] * pre_b[ub];
      grad[i] = (ds_.status(i) == kCause1 ? 1.0 : 0.0) - e1;
      curvature[i] = e1 - e2;
    }
    for (size_t j = 0; j < u.c2_rows.size(); ++j) {
      const int i = u.c2_rows[j];
      const int ub = first_after(u.etime, ds_.time(i));
      const double rt = es.r[i] * u.c2_invg[j];
      grad[i] -= rt * suf_g[ub];
      curvature[i] += rt * suf_g[ub] - rt * rt * suf_g2[ub];
    }
  }
}

Eigen::MatrixXd PshLikelihood::score_influence(const Eigen::VectorXd& beta,
                                               bool censoring_correction) const {
  check_beta(beta);
  const int n = ds_.n(), d = ds_.d();
  const Eigen::VectorXd eta = ds_.covariates() * beta;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, d);

  struct UnitArrays {
    EventSums es;
    std::vector<double> pre_a, suf_g;   // padded, sizes E+1
    Eigen::MatrixXd pre_ae, suf_ge;     // d x (E+1)
    std::vector<double> c2_pre0;        // padded prefix over cause-2 rows
    Eigen::MatrixXd c2_pre1;            // d x (nc2+1)
    std::vector<double> c2_times;
  };
  std::vector<UnitArrays> arrays(units_.size());

  for (size_t ui = 0; ui < units_.size(); ++ui) {
    const Unit& u = units_[ui];
    UnitArrays& a = arrays[ui];
    a.es = unit_event_sums(u, eta, true);
    const int E = static_cast<int>(u.etime.size());
    a.pre_a.assign(E + 1, 0.0);
    a.suf_g.assign(E + 1, 0.0);
    a.pre_ae.setZero(d, E + 1);
    a.suf_ge.setZero(d, E + 1);
    for (int e = 0; e < E; ++e) {
      const double w = u.ecount[e] / a.es.s0[e];
      a.pre_a[e + 1] = a.pre_a[e] + w;
      a.pre_ae.col(e + 1) = a.pre_ae.col(e) + w * a.es.means.col(e);
    }
    for (int e = E - 1; e >= 0; --e) {
      const double w = u.ecount[e] * u.g_left[e] / a.es.s0[e];
      a.suf_g[e] = a.suf_g[e + 1] + w;
      a.suf_ge.col(e) = a.suf_ge.col(e + 1) + w * a.es.means.col(e);
    }
    const int nc2 = static_cast<int>(u.c2_rows.size());
    a.c2_pre0.assign(nc2 + 1, 0.0);
    a.c2_pre1.setZero(d, nc2 + 1);
    a.c2_times.resize(nc2);
    for (int j = 0; j < nc2; ++j) {
      const int i = u.c2_rows[j];
      const double rt = a.es.r[i] * u.c2_invg[j];
      a.c2_pre0[j + 1] = a.c2_pre0[j] + rt;
      a.c2_pre1.col(j + 1) = a.c2_pre1.col(j) + rt * ds_.covariates().row(i).transpose();
      a.c2_times[j] = ds_.time(i);
    }

    // martingale residual terms of the weighted score
    for (int e = 0; e < E; ++e)
      for (int j = u.event_row_begin[e]; j < u.event_row_begin[e + 1]; ++j) {
        const int i = u.event_rows[j];
        out.row(i) += (ds_.covariates().row(i).transpose() - a.es.means.col(e)).transpose();
      }
    for (int i : u.rows) {
      const int ub = first_after(u.etime, ds_.time(i));
      out.row(i) -= a.es.r[i] * (ds_.covariates().row(i) * a.pre_a[ub] -
                                 a.pre_ae.col(ub).transpose());
    }
    for (size_t j = 0; j < u.c2_rows.size(); ++j) {
      const int i = u.c2_rows[j];
      const int ub = first_after(u.etime, ds_.time(i));
      const double rt = a.es.r[i] * u.c2_invg[j];
      out.row(i) -= rt * (ds_.covariates().row(i) * a.suf_g[ub] -
                          a.suf_ge.col(ub).transpose());
    }
  }

  if (!censoring_correction) return out;

  // Correction rows propagating the Kaplan-Meier estimation of the censoring
  // survival: one censoring group per curve. Evaluated along the censoring
  // martingale of each subject; the group rows sum to zero.
  const int n_groups = static_cast<int>(curves_.size());
  for (int g = 0; g < n_groups; ++g) {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i)
      if (row_curve_[i] == g) rows.push_back(i);
    std::vector<int> group_units;
    for (size_t ui = 0; ui < units_.size(); ++ui)
      if (units_[ui].curve == g) group_units.push_back(static_cast<int>(ui));
    if (rows.empty() || group_units.empty()) continue;

    std::vector<double> times;
    times.reserve(rows.size());
    for (int i : rows) times.push_back(ds_.time(i));
    std::sort(times.begin(), times.end());

    // distinct censoring times with multiplicities
    std::vector<double> ct;
    std::vector<int> dc;
    {
      std::vector<double> ctimes;
      for (int i : rows)
        if (ds_.status(i) == kCensored) ctimes.push_back(ds_.time(i));
      std::sort(ctimes.begin(), ctimes.end());
      for (size_t p = 0; p < ctimes.size();) {
        size_t q = p;
        while (q < ctimes.size() && ctimes[q] == ctimes[p]) ++q;
        ct.push_back(ctimes[p]);
        dc.push_back(static_cast<int>(q - p));
        p = q;
      }
    }
    if (ct.empty()) continue;
    const int nct = static_cast<int>(ct.size());

    std::vector<double> at_risk(nct);
    for (int c = 0; c < nct; ++c)
      at_risk[c] = static_cast<double>(
          times.end() - std::lower_bound(times.begin(), times.end(), ct[c]));

    Eigen::MatrixXd q_at(d, nct);
    for (int c = 0; c < nct; ++c) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
      for (int ui : group_units) {
        const Unit& u = units_[ui];
        const UnitArrays& a = arrays[ui];
        const int lb = first_at_or_after(u.etime, ct[c]);
        const int cj = static_cast<int>(
            std::lower_bound(a.c2_times.begin(), a.c2_times.end(), ct[c]) -
            a.c2_times.begin());
        acc += a.suf_g[lb] * a.c2_pre1.col(cj) - a.c2_pre0[cj] * a.suf_ge.col(lb);
      }
      q_at.col(c) = acc;
    }

    Eigen::MatrixXd cum(d, nct + 1);
    cum.col(0).setZero();
    for (int c = 0; c < nct; ++c)
      cum.col(c + 1) = cum.col(c) + (dc[c] / (at_risk[c] * at_risk[c])) * q_at.col(c);

    for (int i : rows) {
      const int idx = static_cast<int>(
          std::upper_bound(ct.begin(), ct.end(), ds_.time(i)) - ct.begin());
      out.row(i) -= cum.col(idx).transpose();
      if (ds_.status(i) == kCensored) {
        const int ci = static_cast<int>(
            std::lower_bound(ct.begin(), ct.end(), ds_.time(i)) - ct.begin());
        out.row(i) += q_at.col(ci).transpose() / at_risk[ci];
      }
    }
  }
  return out;
}

std::vector<PshLikelihood::BaselineIncrements> PshLikelihood::breslow(
    const Eigen::VectorXd& beta) const {
  check_beta(beta);
  const Eigen::VectorXd eta = ds_.covariates() * beta;
  std::vector<BaselineIncrements> out;
  out.reserve(units_.size());
  for (const Unit& u : units_) {
    const EventSums es = unit_event_sums(u, eta, false);
    BaselineIncrements b;
    b.center = u.center;
    b.times = u.etime;
    b.increments.resize(u.etime.size());
    for (size_t e = 0; e < u.etime.size(); ++e)
      b.increments[e] = u.ecount[e] * std::exp(-es.shift) / es.s0[e];
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace pshpen
