#include "hsr/serialization.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <ostream>

namespace hsr {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw IoError("cannot format floating-point value");
  return std::string(buf.data(), end);
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw IoError("malformed number '" + std::string(text) + "'");
  }
  return v;
}

void write_scalar(std::ostream& out, double v) { out << format_double(v); }

void write_matrix(std::ostream& out, std::string_view name, const Matrix& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Matrix read_matrix(std::istream& in, std::string_view name) {
  std::string tag, got;
  long rows = -1, cols = -1;
  if (!(in >> tag >> got >> rows >> cols) || tag != "matrix" || got != name || rows < 0 ||
      cols < 0) {
    throw IoError("expected matrix block '" + std::string(name) + "'");
  }
  Matrix m(rows, cols);
  std::string token;
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      if (!(in >> token)) throw IoError("truncated matrix block '" + std::string(name) + "'");
      m(i, j) = parse_double(token);
    }
  }
  return m;
}

void expect_header(std::istream& in, std::string_view magic, int version) {
  std::string got;
  int v = 0;
  if (!(in >> got >> v) || got != magic) {
    throw IoError("not a '" + std::string(magic) + "' file");
  }
  if (v != version) throw IoError("unsupported " + std::string(magic) + " version " + std::to_string(v));
}

double read_keyed_scalar(std::istream& in, std::string_view key) {
  return parse_double(read_keyed<std::string>(in, key));
}

}  // namespace hsr
