#include "bvc/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bvc {

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  bool first = true;
  while (!text.empty()) {
    const auto end = text.find('\n');
    const std::string_view line = text.substr(0, end);
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != table.header.size()) throw std::runtime_error("parse_csv: ragged row");
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) throw std::runtime_error("parse_csv: missing header row");
  return table;
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto append_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      out += row[i];
    }
    out.push_back('\n');
  };
  append_row(table.header);
  for (const auto& row : table.rows) append_row(row);
  return out;
}

std::string svg_loglog(const std::vector<double>& x, const std::vector<double>& y, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
  constexpr double width = 640, height = 420, margin = 60;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
    if (x[i] > 0 && y[i] > 0 && std::isfinite(x[i]) && std::isfinite(y[i]))
      pts.emplace_back(std::log10(x[i]), std::log10(y[i]));

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << height - margin
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">log10 " << x_label
      << "</text>\n";
  svg << "<text x=\"15\" y=\"" << height / 2 << "\" transform=\"rotate(-90 15 " << height / 2
      << ")\" text-anchor=\"middle\">log10 " << y_label << "</text>\n";
  if (!pts.empty()) {
    auto [xmin, xmax] = std::minmax_element(pts.begin(), pts.end(),
                                            [](auto& a, auto& b) { return a.first < b.first; });
    auto [ymin, ymax] = std::minmax_element(pts.begin(), pts.end(),
                                            [](auto& a, auto& b) { return a.second < b.second; });
    const double x0 = xmin->first, x1 = std::max(xmax->first, x0 + 1e-12);
    const double y0 = ymin->second, y1 = std::max(ymax->second, y0 + 1e-12);
    svg << "<text x=\"" << margin << "\" y=\"" << height - margin + 16 << "\" font-size=\"11\">" << format_real(x0)
        << "</text>\n";
    svg << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 16
        << "\" font-size=\"11\" text-anchor=\"end\">" << format_real(x1) << "</text>\n";
    svg << "<text x=\"" << margin - 4 << "\" y=\"" << height - margin << "\" font-size=\"11\" text-anchor=\"end\">"
        << format_real(y0) << "</text>\n";
    svg << "<text x=\"" << margin - 4 << "\" y=\"" << margin + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
        << format_real(y1) << "</text>\n";
    for (const auto& [px, py] : pts) {
      const double cx = margin + (px - x0) / (x1 - x0) * (width - 2 * margin);
      const double cy = height - margin - (py - y0) / (y1 - y0) * (height - 2 * margin);
      svg << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"2.5\" fill=\"steelblue\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace bvc
