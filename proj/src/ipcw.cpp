#include "pshpen/ipcw.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pshpen {

CensoringSurvival::CensoringSurvival(std::vector<double> jump_times,
                                     std::vector<double> values)
    : times_(std::move(jump_times)), values_(std::move(values)) {}

double CensoringSurvival::evaluate(double t) const {
  // index of last jump time <= t
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return values_[static_cast<size_t>(it - times_.begin()) - 1];
}

double CensoringSurvival::left(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return values_[static_cast<size_t>(it - times_.begin()) - 1];
}

CensoringSurvival km_censoring_rows(const Dataset& ds, int row_begin, int row_end) {
  // Rows are already sorted by time within a stratum; for the pooled scope we
  // sort a local index. Risk set at t counts everyone with X >= t, so tied
  // failures are still at risk when a censoring at t is processed.
  std::vector<int> idx;
  idx.reserve(row_end - row_begin);
  for (int i = row_begin; i < row_end; ++i) idx.push_back(i);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return ds.time(a) < ds.time(b); });

  std::vector<double> times, values;
  const int m = static_cast<int>(idx.size());
  double g = 1.0;
  int pos = 0;
  while (pos < m) {
    const double t = ds.time(idx[pos]);
    int tied = 0, censored = 0;
    while (pos + tied < m && ds.time(idx[pos + tied]) == t) {
      censored += (ds.status(idx[pos + tied]) == kCensored);
      ++tied;
    }
    const int at_risk = m - pos;
    if (censored > 0) {
      g *= 1.0 - static_cast<double>(censored) / at_risk;
      times.push_back(t);
      values.push_back(g);
    }
    pos += tied;
  }
  return CensoringSurvival(std::move(times), std::move(values));
}

std::vector<CensoringSurvival> km_censoring(const Dataset& ds, CensoringScope scope) {
  std::vector<CensoringSurvival> out;
  if (scope == CensoringScope::Pooled) {
    out.push_back(km_censoring_rows(ds, 0, ds.n()));
    return out;
  }
  for (int k = 0; k < ds.n_centers(); ++k) {
    if (ds.stratum_size(k) < 2)
      throw DegenerateStratum("km_censoring: stratum with center id " +
                              std::to_string(ds.center_id(k)) +
                              " has fewer than 2 subjects");
    auto [b, e] = ds.stratum_range(k);
    out.push_back(km_censoring_rows(ds, b, e));
  }
  return out;
}

double ipcw_weight(double subject_time, int subject_status, double t,
                   const CensoringSurvival& g) {
  if (subject_time >= t) return 1.0;
  if (subject_status != kCause2) return 0.0;
  const double denom = g.left(subject_time);
  if (denom <= 0.0)
    throw ZeroDenominator("ipcw_weight: censoring survival vanishes at a "
                          "competing-event time");
  return g.left(t) / denom;
}

}  // namespace pshpen
