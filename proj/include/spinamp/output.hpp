#pragma once

// Locale-independent number formatting, CSV assembly and atomic file writes.

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace spinamp {

inline constexpr int kDefaultPrecision = 9;

/// Shortest %g-style rendering with `precision` significant digits.
/// NaN renders as "nan", infinities as "inf"/"-inf".
std::string format_number(double value, int precision = kDefaultPrecision);
std::string format_number(long long value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header, int precision = kDefaultPrecision);

  CsvTable& row(std::initializer_list<double> values);
  CsvTable& row(const std::vector<double>& values);
  /// First column printed as an integer.
  CsvTable& row(long long index, std::initializer_list<double> values);

  std::string str() const { return text_; }
  std::size_t rows() const { return rows_; }

 private:
  std::size_t columns_;
  int precision_;
  std::string text_;
  std::size_t rows_ = 0;
};

/// Writes via a temporary sibling file and rename, so readers never see a
/// partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace spinamp
