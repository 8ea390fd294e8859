#include "pshpen/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace pshpen {

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::PooledPsh: return "pooled";
    case ModelKind::StratifiedRegular: return "stratified";
    case ModelKind::StratifiedHigh: return "stratified-high";
    case ModelKind::Marginal: return "marginal";
  }
  return "unknown";
}

Dataset build_dataset(const std::vector<Subject>& records) {
  if (records.empty()) throw DataError("build_dataset: no records");
  const int d = static_cast<int>(records.front().covariates.size());
  for (size_t i = 0; i < records.size(); ++i) {
    const Subject& s = records[i];
    const std::string where = "record " + std::to_string(i + 1);
    if (!(s.time > 0.0) || !std::isfinite(s.time))
      throw NonPositiveTime(where + ": time must be positive and finite");
    if (static_cast<int>(s.covariates.size()) != d)
      throw DimensionMismatch(where + ": covariate length " +
                              std::to_string(s.covariates.size()) +
                              " != " + std::to_string(d));
    if (!s.covariates.allFinite())
      throw DimensionMismatch(where + ": non-finite covariate entry");
    if (s.status != kCensored && s.status != kCause1 && s.status != kCause2)
      throw UnknownStatusCode(where + ": status code " + std::to_string(s.status));
  }

  // Group rows by center, stable order within center by (time, status).
  std::map<int, std::vector<int>> by_center;
  for (size_t i = 0; i < records.size(); ++i)
    by_center[records[i].center].push_back(static_cast<int>(i));

  Dataset ds;
  const int n = static_cast<int>(records.size());
  ds.z_.resize(n, d);
  ds.time_.resize(n);
  ds.status_.resize(n);
  ds.center_.resize(n);
  ds.row_stratum_.resize(n);

  int row = 0;
  int stratum = 0;
  for (auto& [cid, idx] : by_center) {
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (records[a].time != records[b].time) return records[a].time < records[b].time;
      return records[a].status < records[b].status;
    });
    const int begin = row;
    for (int src : idx) {
      ds.z_.row(row) = records[src].covariates.transpose();
      ds.time_[row] = records[src].time;
      ds.status_[row] = records[src].status;
      ds.center_[row] = cid;
      ds.row_stratum_[row] = stratum;
      ++row;
    }
    ds.center_ids_.push_back(cid);
    ds.strata_.emplace_back(begin, row);
    ++stratum;
  }
  return ds;
}

int Dataset::cause1_count() const {
  return static_cast<int>(std::count(status_.begin(), status_.end(), kCause1));
}

int Dataset::cause1_count_in(int stratum) const {
  auto [b, e] = strata_[stratum];
  int c = 0;
  for (int i = b; i < e; ++i) c += (status_[i] == kCause1);
  return c;
}

Subject Dataset::subject(int row) const {
  return Subject{time_[row], status_[row], center_[row], z_.row(row).transpose()};
}

std::vector<Subject> Dataset::to_records() const {
  std::vector<Subject> out;
  out.reserve(n());
  for (int i = 0; i < n(); ++i) out.push_back(subject(i));
  return out;
}

Dataset Dataset::select_columns(const std::vector<int>& cols) const {
  std::vector<Subject> recs = to_records();
  for (Subject& s : recs) {
    Eigen::VectorXd z(cols.size());
    for (size_t j = 0; j < cols.size(); ++j) z[j] = s.covariates[cols[j]];
    s.covariates = std::move(z);
  }
  return build_dataset(recs);
}

Dataset Dataset::select_rows(const std::vector<int>& rows) const {
  std::vector<Subject> recs;
  recs.reserve(rows.size());
  for (int r : rows) recs.push_back(subject(r));
  return build_dataset(recs);
}

Eigen::VectorXd Standardization::unstandardize(const Eigen::VectorXd& beta) const {
  return beta.cwiseQuotient(scale);
}

Eigen::MatrixXd Standardization::unstandardize_cov(const Eigen::MatrixXd& cov,
                                                   const std::vector<int>& active) const {
  Eigen::VectorXd s(active.size());
  for (size_t i = 0; i < active.size(); ++i) s[i] = 1.0 / scale[active[i]];
  return s.asDiagonal() * cov * s.asDiagonal();
}

std::pair<Dataset, Standardization> standardize_covariates(const Dataset& ds) {
  const int n = ds.n(), d = ds.d();
  Standardization tf;
  tf.mean = ds.covariates().colwise().mean();
  tf.scale.resize(d);
  Eigen::MatrixXd centered = ds.covariates().rowwise() - tf.mean.transpose();
  for (int j = 0; j < d; ++j) {
    const double ss = centered.col(j).squaredNorm();
    const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    if (sd > 0.0) {
      tf.scale[j] = sd;
    } else {
      tf.scale[j] = 1.0;
      tf.mean[j] = 0.0;  // leave the column untouched
      tf.constant_columns.push_back(j);
      centered.col(j) = ds.covariates().col(j);
    }
  }
  std::vector<Subject> recs = ds.to_records();
  // to_records preserves row order, which matches the rows of `centered`.
  for (int i = 0; i < n; ++i)
    recs[i].covariates = (centered.row(i).transpose().cwiseQuotient(tf.scale)).eval();
  return {build_dataset(recs), tf};
}

}  // namespace pshpen
