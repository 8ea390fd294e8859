#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "pshpen/errors.hpp"

namespace pshpen {

/// Event codes: 0 = censored, 1 = event of interest, 2 = competing event.
enum StatusCode : int { kCensored = 0, kCause1 = 1, kCause2 = 2 };

/// Which likelihood is assembled and which censoring-survival scope is used.
/// StratifiedRegular estimates the censoring distribution per stratum; the
/// other kinds use the pooled estimate.
enum class ModelKind { PooledPsh, StratifiedRegular, StratifiedHigh, Marginal };

const char* model_kind_name(ModelKind kind);

/// One observation: follow-up time, event code, center id, covariate vector.
struct Subject {
  double time = 0.0;
  int status = kCensored;
  int center = 0;
  Eigen::VectorXd covariates;
};

/// Immutable clustered competing-risks sample. Rows are grouped by center
/// (ascending center id) and stably ordered within center by (time, status),
/// so risk-set sweeps and tie handling are reproducible.
class Dataset {
 public:
  Dataset() = default;

  int n() const { return static_cast<int>(time_.size()); }
  int d() const { return static_cast<int>(z_.cols()); }
  int n_centers() const { return static_cast<int>(center_ids_.size()); }

  const Eigen::MatrixXd& covariates() const { return z_; }
  double time(int row) const { return time_[row]; }
  int status(int row) const { return status_[row]; }
  int center(int row) const { return center_[row]; }

  int center_id(int stratum) const { return center_ids_[stratum]; }
  int stratum_size(int stratum) const {
    return strata_[stratum].second - strata_[stratum].first;
  }
  /// Half-open row range [first, second) of a stratum.
  std::pair<int, int> stratum_range(int stratum) const { return strata_[stratum]; }
  int stratum_of_row(int row) const { return row_stratum_[row]; }

  int cause1_count() const;
  int cause1_count_in(int stratum) const;

  Subject subject(int row) const;
  std::vector<Subject> to_records() const;

  /// New dataset keeping only the given covariate columns (original order).
  Dataset select_columns(const std::vector<int>& cols) const;
  /// New dataset built from the given rows (revalidated and resorted).
  Dataset select_rows(const std::vector<int>& rows) const;

  friend Dataset build_dataset(const std::vector<Subject>& records);

 private:
  Eigen::MatrixXd z_;                        // n x d
  std::vector<double> time_;
  std::vector<int> status_;
  std::vector<int> center_;
  std::vector<int> center_ids_;              // ascending distinct ids
  std::vector<std::pair<int, int>> strata_;  // row ranges per center
  std::vector<int> row_stratum_;
};

/// Validates raw records and assembles the strata index. Throws
/// NonPositiveTime, DimensionMismatch or UnknownStatusCode naming the
/// offending record (1-based position in `records`).
Dataset build_dataset(const std::vector<Subject>& records);

/// Per-column location/scale transform with back-mapping of coefficients.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;               // 1.0 for flagged constant columns
  std::vector<int> constant_columns;   // left unscaled

  /// Coefficients on the standardized scale -> original scale.
  Eigen::VectorXd unstandardize(const Eigen::VectorXd& beta) const;
  /// Covariance of active coefficients back to the original scale.
  Eigen::MatrixXd unstandardize_cov(const Eigen::MatrixXd& cov,
                                    const std::vector<int>& active) const;
};

/// Columns are shifted/scaled to mean 0, sd 1 (sample sd, n-1 denominator).
/// Constant columns are left untouched and flagged rather than rejected.
std::pair<Dataset, Standardization> standardize_covariates(const Dataset& ds);

}  // namespace pshpen
