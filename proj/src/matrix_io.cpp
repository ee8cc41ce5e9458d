#include "sthcss/matrix_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace sthcss {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_matrix_csv(const std::filesystem::path& path, const Tensor& m) {
  if (m.ndim() != 2) {
    throw DimensionError("write_matrix_csv expects a matrix, got " + m.shape_str());
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m.at(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t row_cols = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t next = std::min(line.find(',', pos), line.size());
      double v = 0.0;
      const auto res = std::from_chars(line.data() + pos, line.data() + next, v);
      if (res.ec != std::errc() || res.ptr != line.data() + next) {
        throw FormatError("bad numeric cell in " + path.string() + " row " +
                          std::to_string(rows + 1));
      }
      values.push_back(v);
      ++row_cols;
      if (next == line.size()) break;
      pos = next + 1;
    }
    if (rows == 0) {
      cols = row_cols;
    } else if (row_cols != cols) {
      throw FormatError("ragged row " + std::to_string(rows + 1) + " in " + path.string());
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("empty matrix file " + path.string());
  return Tensor({rows, cols}, std::move(values));
}

void write_matrix_pgm(const std::filesystem::path& path, const Tensor& m) {
  if (m.ndim() != 2) {
    throw DimensionError("write_matrix_pgm expects a matrix, got " + m.shape_str());
  }
  double lo = m.at(0);
  double hi = m.at(0);
  for (double v : m.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi - lo;

  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P2\n" << m.cols() << ' ' << m.rows() << "\n255\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      int gray = 128;  // degenerate range maps to mid-gray
      if (range > 0.0) {
        gray = static_cast<int>(std::lround((m.at(i, j) - lo) * 255.0 / range));
        gray = std::clamp(gray, 0, 255);
      }
      if (j) out << ' ';
      out << gray;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace sthcss
