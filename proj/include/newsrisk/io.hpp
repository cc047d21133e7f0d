#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace newsrisk::io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string> split_lines(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws ParseError when absent.
  std::size_t column(std::string_view name) const;
};

/// Minimal RFC-4180 reader: quoted fields, doubled quotes, no embedded newlines.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);

/// Shortest "%.*g" rendering; 17 significant digits round-trips a double.
std::string format_double(double value, int significant_digits = 17);

/// Parses a finite double, throwing ParseError with `context` in the message.
double parse_double(std::string_view text, std::string_view context);

}  // namespace newsrisk::io
