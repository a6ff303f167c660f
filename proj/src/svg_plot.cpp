#include "msino/errors.hpp"
#include "msino/metrics_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace msino {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_line_plot(const std::string& path, const std::string& title, const std::string& ylabel,
                     std::span<const double> x, std::span<const double> y, bool log_y) {
  constexpr double W = 640, H = 400, left = 70, right = 20, top = 40, bottom = 50;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    double v = y[i];
    if (log_y) v = v > 0.0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(x[i]) && std::isfinite(v)) pts.emplace_back(x[i], v);
  }
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts[0].first;
    y0 = y1 = pts[0].second;
    for (const auto& [px, py] : pts) {
      x0 = std::min(x0, px), x1 = std::max(x1, px);
      y0 = std::min(y0, py), y1 = std::max(y1, py);
    }
  }
  if (x1 - x0 <= 0) x1 = x0 + 1;
  if (y1 - y0 <= 0) y0 -= 0.5, y1 += 0.5;
  const auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * (W - left - right); };
  const auto sy = [&](double v) { return H - bottom - (v - y0) / (y1 - y0) * (H - top - bottom); };

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right
      << "\" y2=\"" << H - bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << H - bottom << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0, xv = x0 + (x1 - x0) * k / 4.0;
    const std::string ylab = format_number(log_y ? std::pow(10.0, yv) : yv);
    svg << "<text x=\"" << left - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">"
        << ylab << "</text>\n";
    svg << "<text x=\"" << sx(xv) << "\" y=\"" << H - bottom + 18 << "\" text-anchor=\"middle\">"
        << format_number(xv) << "</text>\n";
  }
  svg << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">epoch</text>\n";
  svg << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
      << ")\" text-anchor=\"middle\">" << escape(ylabel) << (log_y ? " (log)" : "") << "</text>\n";
  if (!pts.empty()) {
    svg << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"";
    for (const auto& [px, py] : pts) svg << sx(px) << ',' << sy(py) << ' ';
    svg << "\"/>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << svg.str();
}

}  // namespace msino
