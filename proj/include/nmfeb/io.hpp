#ifndef NMFEB_IO_HPP
#define NMFEB_IO_HPP

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nmfeb/errors.hpp"

// CSV ingestion (comma-separated, no header by default) and JSON output
// with a fixed 17-significant-digit float format so identical results
// serialize to identical bytes.

namespace nmfeb {

inline std::vector<std::vector<double>> read_csv_rows(const std::string& path,
                                                      bool header) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && header) continue;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        while (pos < cell.size() && std::isspace(
                   static_cast<unsigned char>(cell[pos])))
          ++pos;
        if (pos != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": bad numeric field '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");
  return rows;
}

inline Eigen::MatrixXd read_matrix_csv(const std::string& path,
                                       bool header = false) {
  const auto rows = read_csv_rows(path, header);
  Eigen::MatrixXd X(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j) X(i, j) = rows[i][j];
  return X;
}

/// One value per row.
inline Eigen::VectorXd read_vector_csv(const std::string& path,
                                       bool header = false) {
  const auto rows = read_csv_rows(path, header);
  if (rows.front().size() != 1)
    throw ParseError(path + ": expected a single column");
  Eigen::VectorXd v(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) v[i] = rows[i][0];
  return v;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_matrix_csv(const std::string& path,
                             const Eigen::MatrixXd& X) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (j) out << ',';
      out << format_double(X(i, j));
    }
    out << '\n';
  }
}

inline void write_vector_csv(const std::string& path,
                             const Eigen::VectorXd& v) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out << format_double(v[i]) << '\n';
}

/// Serializes a JSON tree with doubles rendered as %.17g. Key order is
/// whatever the ordered_json holds, so output is schema-stable.
inline void dump_json(const nlohmann::ordered_json& j, std::string& out,
                      int indent, int level) {
  const std::string pad(static_cast<std::size_t>(indent) * level, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent) * (level + 1),
                           ' ');
  using value_t = nlohmann::ordered_json::value_t;
  switch (j.type()) {
    case value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in + nlohmann::json(it.key()).dump() + ": ";
        dump_json(it.value(), out, indent, level + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        dump_json(e, out, indent, level + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

inline std::string dump_json(const nlohmann::ordered_json& j,
                             int indent = 2) {
  std::string out;
  dump_json(j, out, indent, 0);
  out += "\n";
  return out;
}

}  // namespace nmfeb

#endif
