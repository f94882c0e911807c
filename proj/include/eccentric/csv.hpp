#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "eccentric/common.hpp"

namespace eccentric {

/// 17 significant digits, '.' separator, independent of the C locale.
inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string &what) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
    text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+')
    text.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ValidationError(what + ": '" + std::string(text) + "' is not a number");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    row(header);
  }

  void row(const std::vector<std::string> &cells) {
    require(cells.size() == columns_, "csv: row has " + std::to_string(cells.size()) +
                                          " cells, header has " + std::to_string(columns_));
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i)
        out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double> &values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values)
      cells.push_back(format_double(v));
    row(cells);
  }

  std::string str() const { return out_.str(); }

private:
  std::size_t columns_;
  std::ostringstream out_;
};

/// Matrix rows as CSV with columns named prefix0, prefix1, ...; an optional
/// trailing integer label column.
inline std::string matrix_csv(const Matrix &m, const std::string &prefix,
                              const std::vector<int> *labels = nullptr) {
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    header.push_back(prefix + std::to_string(j));
  if (labels)
    header.push_back("label");
  CsvWriter w(header);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> cells;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      cells.push_back(format_double(m(i, j)));
    if (labels)
      cells.push_back(std::to_string((*labels)[static_cast<std::size_t>(i)]));
    w.row(cells);
  }
  return w.str();
}

struct LabelledMatrix {
  Matrix values;
  std::vector<int> labels; // empty when the file had no label column
};

/// Reads a header + numeric rows CSV. A final column named "label" is split
/// off into integer labels.
inline LabelledMatrix read_matrix_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("'" + path + "': empty file, expected a header row");
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  auto header = split(line, ',');
  const bool has_label = header.back() == "label";
  const std::size_t width = header.size() - (has_label ? 1 : 0);

  std::vector<double> flat;
  LabelledMatrix out;
  std::size_t rows = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw ValidationError("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
    }
    const std::string where = "'" + path + "' line " + std::to_string(line_no);
    for (std::size_t j = 0; j < width; ++j)
      flat.push_back(parse_double(cells[j], where));
    if (has_label) {
      double v = parse_double(cells.back(), where);
      require(v == std::floor(v), where + ": label must be an integer");
      out.labels.push_back(static_cast<int>(v));
    }
    ++rows;
  }
  out.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  std::copy(flat.begin(), flat.end(), out.values.data());
  return out;
}

} // namespace eccentric
