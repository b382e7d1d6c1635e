#pragma once

#include <optional>
#include <string>
#include <vector>

namespace grainrisk::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a comma-separated file with a header row. Cells are not unescaped
/// beyond trimming surrounding whitespace; the formats this project reads and
/// writes never quote fields.
Table read_file(const std::string& path);

void write_file(const std::string& path, const Table& table);

/// Formats a double with enough digits to round-trip (17 significant digits
/// would be exact; 12 are required by the CLI contract, 17 are emitted).
std::string format_number(double v);

}  // namespace grainrisk::csv
