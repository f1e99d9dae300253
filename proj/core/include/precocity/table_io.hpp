#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace precocity {

// Shortest round-trippable decimal form of a double ("%.17g").
std::string format_real(double x);

std::string csv_escape(std::string_view field);
std::vector<std::string> split_csv_line(std::string_view line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based source line of each row, for error messages.
  std::vector<std::size_t> line_numbers;

  // Index of a header column; throws DataError when absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file and renames, so readers never observe a
// half-written table.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace precocity
