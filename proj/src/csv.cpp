#include "sgp/csv.hpp"

#include <charconv>
#include <ostream>
#include <stdexcept>

namespace sgp::csv {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_row(std::ostream& os, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) {
      os << ',';
    }
    os << fields[i];
  }
  os << '\n';
}

void write_table(std::ostream& os, std::span<const std::string> header,
                 const std::vector<std::vector<double>>& rows) {
  write_row(os, header);
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("CSV row width does not match its header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) {
        os << ',';
      }
      os << format_double(row[i]);
    }
    os << '\n';
  }
}

} // namespace sgp::csv
