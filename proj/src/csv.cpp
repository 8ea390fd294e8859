#include "pshpen/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace pshpen {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    // trim surrounding whitespace and a trailing CR
    size_t b = field.find_first_not_of(" \t\r");
    size_t e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, int line_no, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what +
                    " from '" + s + "'");
  return v;
}

int parse_int(const std::string& s, int line_no, const std::string& what) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what +
                    " from '" + s + "'");
  return static_cast<int>(v);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos)
      lines.push_back(line);
  if (lines.empty()) throw DataError("empty file: " + path);
  return lines;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, bool allow_extra) {
  const std::vector<std::string> lines = read_lines(path);
  const std::vector<std::string> header = split_line(lines[0]);
  static const char* kFixed[4] = {"id", "center", "time", "status"};
  if (header.size() < 5)
    throw DataError("header must be id,center,time,status,z1,...");
  for (int j = 0; j < 4; ++j)
    if (header[j] != kFixed[j])
      throw DataError("header column " + std::to_string(j + 1) + " must be '" +
                      kFixed[j] + "', found '" + header[j] + "'");
  std::vector<int> zcols;  // header indices of covariate columns
  int next_z = 1;
  for (size_t j = 4; j < header.size(); ++j) {
    if (header[j] == "z" + std::to_string(next_z)) {
      zcols.push_back(static_cast<int>(j));
      ++next_z;
    } else if (!allow_extra) {
      throw DataError("unexpected column '" + header[j] +
                      "' (expected z" + std::to_string(next_z) +
                      "); pass --allow-extra to skip it");
    }
  }
  if (zcols.empty()) throw DataError("no covariate columns z1,... found");

  std::vector<Subject> records;
  for (size_t li = 1; li < lines.size(); ++li) {
    const int line_no = static_cast<int>(li + 1);
    const std::vector<std::string> f = split_line(lines[li]);
    if (f.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(f.size()));
    Subject s;
    s.center = parse_int(f[1], line_no, "center");
    s.time = parse_double(f[2], line_no, "time");
    s.status = parse_int(f[3], line_no, "status");
    s.covariates.resize(zcols.size());
    for (size_t j = 0; j < zcols.size(); ++j)
      s.covariates[j] = parse_double(f[zcols[j]], line_no,
                                     "z" + std::to_string(j + 1));
    records.push_back(std::move(s));
  }
  return build_dataset(records);
}

std::string dataset_to_csv(const Dataset& ds) {
  std::ostringstream os;
  os << "id,center,time,status";
  for (int j = 1; j <= ds.d(); ++j) os << ",z" << j;
  os << "\n";
  char buf[64];
  for (int i = 0; i < ds.n(); ++i) {
    os << (i + 1) << "," << ds.center(i) << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", ds.time(i));
    os << buf << "," << ds.status(i);
    for (int j = 0; j < ds.d(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.covariates()(i, j));
      os << "," << buf;
    }
    os << "\n";
  }
  return os.str();
}

NamedTable read_named_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  NamedTable table;
  table.columns = split_line(lines[0]);
  for (size_t li = 1; li < lines.size(); ++li) {
    const int line_no = static_cast<int>(li + 1);
    const std::vector<std::string> f = split_line(lines[li]);
    if (f.size() != table.columns.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.columns.size()) + " fields");
    std::vector<double> row(f.size());
    for (size_t j = 0; j < f.size(); ++j)
      row[j] = parse_double(f[j], line_no, table.columns[j]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace pshpen
