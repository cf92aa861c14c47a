#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hjnet {

/// RFC 4180 style writer: fields containing commas, quotes or line breaks are
/// quoted, embedded quotes doubled, rows end in CRLF-free "\n".
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& os_;
};

std::string csv_escape(const std::string& cell);

/// Parses quoted or bare fields; accepts "\n" and "\r\n" row endings.
std::vector<std::vector<std::string>> parse_csv(std::istream& is);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace hjnet
