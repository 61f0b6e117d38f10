#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bvc {

/// Shortest decimal text that round-trips to the same double; "inf", "-inf", "nan" otherwise.
std::string format_real(double value);

/// Minimal CSV table: a header row plus string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(std::string_view text);
std::string to_csv(const CsvTable& table);

/// Log-log scatter of (x, y) pairs as a standalone SVG document. Non-positive
/// values are skipped.
std::string svg_loglog(const std::vector<double>& x, const std::vector<double>& y, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

}  // namespace bvc
