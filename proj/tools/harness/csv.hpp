#pragma once

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

namespace harness {

// Shortest representation that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

class CsvRow {
 public:
  CsvRow& add(const std::string& v) {
    cells_.push_back(quote(v));
    return *this;
  }
  CsvRow& add(const char* v) { return add(std::string(v)); }
  CsvRow& add(double v) {
    cells_.push_back(format_double(v));
    return *this;
  }
  template <class I>
    requires std::is_integral_v<I>
  CsvRow& add(I v) {
    cells_.push_back(std::to_string(v));
    return *this;
  }

  const std::vector<std::string>& cells() const { return cells_; }

 private:
  static std::string quote(const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char ch : v) {
      if (ch == '"') out += '"';
      out += ch;
    }
    return out + '"';
  }

  std::vector<std::string> cells_;
};

inline void write_line(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

}  // namespace harness
