#include "oracles.hpp"

#include <cmath>
#include <random>

namespace oracle {

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (int j = 0; j < x.size(); ++j) {
    Eigen::VectorXd hi = x, lo = x;
    hi[j] += h;
    lo[j] -= h;
    g[j] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    Eigen::VectorXd hi = x, lo = x;
    hi[j] += h;
    lo[j] -= h;
    jac.col(j) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return jac;
}

double cox_loglik(const CoxData& data, const Eigen::VectorXd& beta) {
  const int n = static_cast<int>(data.time.size());
  double ll = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!data.event[i]) continue;
    double denom = 0.0;
    for (int j = 0; j < n; ++j)
      if (data.time[j] >= data.time[i]) denom += std::exp(beta.dot(data.z.row(j)));
    ll += beta.dot(data.z.row(i)) - std::log(denom);
  }
  return ll;
}

Eigen::VectorXd cox_mple(const CoxData& data, double tol, int max_iter) {
  const int n = static_cast<int>(data.time.size());
  const int d = static_cast<int>(data.z.cols());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
      if (!data.event[i]) continue;
      double s0 = 0.0;
      Eigen::VectorXd s1 = Eigen::VectorXd::Zero(d);
      Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(d, d);
      for (int j = 0; j < n; ++j) {
        if (data.time[j] < data.time[i]) continue;
        const double r = std::exp(beta.dot(data.z.row(j)));
        s0 += r;
        s1 += r * data.z.row(j).transpose();
        s2 += r * data.z.row(j).transpose() * data.z.row(j);
      }
      const Eigen::VectorXd mean = s1 / s0;
      u += data.z.row(i).transpose() - mean;
      info += s2 / s0 - mean * mean.transpose();
    }
    if (u.cwiseAbs().maxCoeff() < tol) break;
    beta += info.ldlt().solve(u);
  }
  return beta;
}

Eigen::MatrixXd cox_robust_covariance(const CoxData& data,
                                      const Eigen::VectorXd& beta) {
  const int n = static_cast<int>(data.time.size());
  const int d = static_cast<int>(data.z.cols());
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd resid = Eigen::MatrixXd::Zero(n, d);
  for (int i = 0; i < n; ++i) {
    if (!data.event[i]) continue;
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < n; ++j) {
      if (data.time[j] < data.time[i]) continue;
      const double r = std::exp(beta.dot(data.z.row(j)));
      s0 += r;
      s1 += r * data.z.row(j).transpose();
      s2 += r * data.z.row(j).transpose() * data.z.row(j);
    }
    const Eigen::VectorXd mean = s1 / s0;
    info += s2 / s0 - mean * mean.transpose();
    resid.row(i) += (data.z.row(i).transpose() - mean).transpose();
    // compensator spread over the at-risk subjects at this event time
    for (int j = 0; j < n; ++j) {
      if (data.time[j] < data.time[i]) continue;
      const double r = std::exp(beta.dot(data.z.row(j)));
      resid.row(j) -= (r / s0) * (data.z.row(j).transpose() - mean).transpose();
    }
  }
  const Eigen::MatrixXd bread = info.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < n; ++i)
    meat += resid.row(i).transpose() * resid.row(i);
  return bread * meat * bread;
}

pshpen::Dataset random_dataset(int n, int d, int centers, uint64_t seed,
                               double censored_frac, double cause2_frac) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::vector<pshpen::Subject> recs(n);
  for (int i = 0; i < n; ++i) {
    recs[i].time = expo(rng) + 0.05;
    const double u = unif(rng);
    recs[i].status = u < censored_frac ? 0 : (u < censored_frac + cause2_frac ? 2 : 1);
    recs[i].center = 1 + static_cast<int>(rng() % centers);
    recs[i].covariates.resize(d);
    for (int j = 0; j < d; ++j) recs[i].covariates[j] = gauss(rng);
  }
  // make sure every center holds a cause-1 event so nothing is dropped
  for (int c = 1; c <= centers; ++c) {
    bool has = false;
    for (const auto& r : recs)
      if (r.center == c && r.status == 1) has = true;
    if (!has) {
      for (auto& r : recs)
        if (r.center == c) {
          r.status = 1;
          break;
        }
    }
  }
  return pshpen::build_dataset(recs);
}

}  // namespace oracle
