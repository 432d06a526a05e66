#ifndef DYSON_EQ_IO_HPP
#define DYSON_EQ_IO_HPP

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dyson_eq/errors.hpp"
#include "dyson_eq/linalg.hpp"

namespace dyson_eq {

struct CsvMatrix {
  DenseMatrix matrix{1, 1};
  bool skipped_header = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view tok, double& out) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

// Headerless dense CSV, one matrix row per line. A first line that does not parse as
// numbers is treated as a header and skipped.
inline CsvMatrix read_csv(std::istream& in) {
  CsvMatrix out;
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto toks = detail::split_commas(line);
    std::vector<double> row(toks.size());
    bool ok = true;
    for (std::size_t k = 0; k < toks.size() && ok; ++k) ok = detail::parse_double(toks[k], row[k]);
    if (!ok) {
      if (rows == 0 && !out.skipped_header) {
        out.skipped_header = true;
        continue;
      }
      throw ParseError("line " + std::to_string(lineno) + ": not a number");
    }
    if (rows == 0) cols = row.size();
    if (row.size() != cols)
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(cols) + " fields, got " +
                       std::to_string(row.size()));
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw EmptyInput("CSV contains no data rows");
  Eigen::MatrixXd m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = values[i * cols + j];
  out.matrix = DenseMatrix(std::move(m));
  return out;
}

inline CsvMatrix read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_csv(in);
}

// 17 significant digits, '.' decimal point regardless of locale.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  std::string line;
  for (Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) line += ',';
      line += format_double(m(i, j));
    }
    line += '\n';
    out << line;
  }
}

inline void write_csv_file(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  write_csv(out, m);
  if (!out) throw InvalidInput("write failed: " + path);
}

// Plain table with a header row; each row must have as many entries as the header.
inline void write_table_file(const std::string& path, const std::vector<std::string>& header,
                             const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  auto emit = [&out](const std::vector<std::string>& r) {
    for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << r[k];
    out << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  if (!out) throw InvalidInput("write failed: " + path);
}

}  // namespace dyson_eq

#endif  // DYSON_EQ_IO_HPP
