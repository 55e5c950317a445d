#pragma once

// Plot-ready CSV: '.' decimal separator, LF line endings, mandatory header,
// shortest round-trip formatting of doubles.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

namespace csec {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

/// Fixed number of significant digits, "%.<p>g" style.
inline std::string format_significant(double v, int precision) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, precision);
  if (res.ec != std::errc{}) throw std::runtime_error("format_significant: conversion failed");
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::initializer_list<std::string_view> header) : os_(os), columns_(header.size()) {
    write_fields(std::vector<std::string_view>(header));
  }
  CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os), columns_(header.size()) {
    write_fields(std::vector<std::string_view>(header.begin(), header.end()));
  }

  template <typename... Ts>
  void row(const Ts&... values) {
    if (sizeof...(Ts) != columns_) throw std::invalid_argument("CsvWriter: wrong number of fields");
    std::size_t k = 0;
    ((os_ << (k++ ? "," : "") << field(values)), ...);
    os_ << '\n';
  }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_) throw std::invalid_argument("CsvWriter: wrong number of fields");
    for (std::size_t k = 0; k < values.size(); ++k) os_ << (k ? "," : "") << format_double(values[k]);
    os_ << '\n';
  }

 private:
  template <typename T>
  static std::string field(const T& v) {
    if constexpr (std::is_same_v<T, bool>) {
      return v ? "1" : "0";
    } else if constexpr (std::is_floating_point_v<T>) {
      return format_double(static_cast<double>(v));
    } else if constexpr (std::is_integral_v<T>) {
      return std::to_string(v);
    } else {
      return std::string(v);
    }
  }

  void write_fields(const std::vector<std::string_view>& f) {
    for (std::size_t k = 0; k < f.size(); ++k) os_ << (k ? "," : "") << f[k];
    os_ << '\n';
  }

  std::ostream& os_;
  std::size_t columns_;
};

}  // namespace csec
