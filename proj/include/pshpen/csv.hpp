#pragma once

#include <string>
#include <vector>

#include "pshpen/data.hpp"

namespace pshpen {

/// Reads the strict dataset schema `id,center,time,status,z1,...,zd`.
/// Columns not in the schema raise DataError unless allow_extra is set, in
/// which case they are skipped. Errors name the offending line.
Dataset read_dataset_csv(const std::string& path, bool allow_extra = false);

/// Writes a dataset back in the same schema (ids are the row numbers).
std::string dataset_to_csv(const Dataset& ds);

/// A small table of named numeric columns (donor tables for scoring).
struct NamedTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
NamedTable read_named_csv(const std::string& path);

}  // namespace pshpen
