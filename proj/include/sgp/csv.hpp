#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sgp::csv {

/// Shortest locale-independent rendering with 17 significant digits.
std::string format_double(double v);

/// Writes `fields` joined by commas followed by a newline.
void write_row(std::ostream& os, std::span<const std::string> fields);

/// Header plus rows of numbers; every row must match the header width.
void write_table(std::ostream& os, std::span<const std::string> header,
                 const std::vector<std::vector<double>>& rows);

} // namespace sgp::csv
