#include "msino/metrics_io.hpp"

#include "msino/errors.hpp"

#include <cstdio>
#include <fstream>

namespace msino {

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << r.epoch << ',' << format_number(r.total) << ',' << format_number(r.val) << ','
        << format_number(r.sob) << ',' << format_number(r.lap) << ',' << format_number(r.lambda_k)
        << ',' << format_number(r.rho_k) << ',' << format_number(r.L_sob) << ','
        << format_number(r.lr_cap) << ',' << format_number(r.sigma_sample) << ','
        << format_number(r.sigma_transport) << ',' << (r.descent_ok ? 1 : 0) << ','
        << format_number(r.mu_hat) << '\n';
  }
}

void write_metrics_csv(const std::string& path, std::span<const MetricsRow> rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_metrics_csv(out, rows);
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

}  // namespace msino
