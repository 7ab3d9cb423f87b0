#include "spinamp/output.hpp"

#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <thread>

#include "spinamp/error.hpp"

namespace spinamp {

std::string format_number(double value, int precision) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) value = 0.0;  // drop the sign of negative zero
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, precision);
  return std::string(buf.data(), res.ptr);
}

std::string format_number(long long value) { return std::to_string(value); }

CsvTable::CsvTable(std::vector<std::string> header, int precision)
    : columns_(header.size()), precision_(precision) {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (k) text_ += ',';
    text_ += header[k];
  }
  text_ += '\n';
}

CsvTable& CsvTable::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw InvalidArgument("CSV row width does not match the header");
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) text_ += ',';
    text_ += format_number(values[k], precision_);
  }
  text_ += '\n';
  ++rows_;
  return *this;
}

CsvTable& CsvTable::row(std::initializer_list<double> values) { return row(std::vector<double>(values)); }

CsvTable& CsvTable::row(long long index, std::initializer_list<double> values) {
  if (values.size() + 1 != columns_) throw InvalidArgument("CSV row width does not match the header");
  text_ += format_number(index);
  for (double v : values) {
    text_ += ',';
    text_ += format_number(v, precision_);
  }
  text_ += '\n';
  ++rows_;
  return *this;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<unsigned long> counter{0};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move output into place at '" + path.string() + "'");
  }
}

}  // namespace spinamp
