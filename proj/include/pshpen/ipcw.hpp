#pragma once

#include <vector>

#include "pshpen/data.hpp"

namespace pshpen {

/// Scope of the censoring-survival estimate.
enum class CensoringScope { Pooled, PerStratum };

/// Right-continuous Kaplan-Meier step function for the censoring process.
/// G(0) = 1; values non-increasing. evaluate() gives G(t); left() gives
/// G(t-), the estimate of Pr(C >= t) used by the weights.
class CensoringSurvival {
 public:
  CensoringSurvival() = default;
  CensoringSurvival(std::vector<double> jump_times, std::vector<double> values);

  double evaluate(double t) const;
  double left(double t) const;

  const std::vector<double>& jump_times() const { return times_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> times_;   // increasing
  std::vector<double> values_;  // G at each jump, non-increasing
};

/// Kaplan-Meier estimate of the censoring survival on the given rows:
/// status 0 is the event, statuses 1 and 2 censor the censoring process.
/// At tied times failures stay in the censoring risk set.
CensoringSurvival km_censoring_rows(const Dataset& ds, int row_begin, int row_end);

/// Pooled scope returns one curve; per-stratum scope returns one per stratum
/// and requires every stratum to hold at least two subjects.
std::vector<CensoringSurvival> km_censoring(const Dataset& ds, CensoringScope scope);

/// Weight-times-at-risk factor w(t)Y(t) for one subject: 1 while no event has
/// occurred, 0 after censoring or a cause-1 event, and the decaying ratio
/// G(t-)/G(X-) after a competing event. Always in [0, 1].
double ipcw_weight(double subject_time, int subject_status, double t,
                   const CensoringSurvival& g);

}  // namespace pshpen
