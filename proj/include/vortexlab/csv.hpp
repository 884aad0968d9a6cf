#pragma once

#include <charconv>
#include <cmath>
#include <initializer_list>
#include <string>
#include <string_view>

namespace vortexlab {

/// Shortest decimal that round-trips; "inf"/"-inf"/"nan" for non-finite values.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  void header(std::initializer_list<std::string_view> cols) {
    for (auto c : cols) cell(c);
    end_row();
  }
  CsvWriter& cell(std::string_view s) {
    if (!first_) out_ += ',';
    out_ += s;
    first_ = false;
    return *this;
  }
  CsvWriter& cell(double v) { return cell(std::string_view(fmt(v))); }
  CsvWriter& cell(std::size_t v) { return cell(std::string_view(std::to_string(v))); }
  void end_row() {
    out_ += '\n';
    first_ = true;
  }
  const std::string& str() const { return out_; }

 private:
  std::string out_;
  bool first_ = true;
};

}  // namespace vortexlab
