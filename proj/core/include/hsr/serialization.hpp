#pragma once

#include <charconv>
#include <iosfwd>
#include <istream>
#include <string>
#include <string_view>

#include "hsr/error.hpp"
#include "hsr/types.hpp"

namespace hsr {

// Plain-text block format shared by model and dictionary files:
//
//   <magic> <version>
//   <key> <value>            (scalar fields)
//   matrix <name> <rows> <cols>
//   <row 0 values...>
//   ...
//
// Doubles use the shortest representation that round-trips exactly.

std::string format_double(double v);
double parse_double(std::string_view text);

void write_scalar(std::ostream& out, double v);
void write_matrix(std::ostream& out, std::string_view name, const Matrix& m);
Matrix read_matrix(std::istream& in, std::string_view name);

void expect_header(std::istream& in, std::string_view magic, int version);

template <typename T>
T read_keyed(std::istream& in, std::string_view key) {
  std::string k;
  T value{};
  if (!(in >> k) || k != key || !(in >> value)) {
    throw IoError("expected field '" + std::string(key) + "'");
  }
  return value;
}

double read_keyed_scalar(std::istream& in, std::string_view key);

}  // namespace hsr
