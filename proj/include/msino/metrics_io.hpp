#pragma once

#include "msino/optim.hpp"

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace msino {

inline constexpr const char* kMetricsHeader =
    "epoch,total,val,sob,lap,lambda_k,rho_k,L_sob,lr_cap,sigma_sample,sigma_transport,"
    "descent_ok,mu_hat";

/// Six significant digits, printf %g style.
std::string format_number(double x);

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);
void write_metrics_csv(const std::string& path, std::span<const MetricsRow> rows);

/// Generic numeric table with the same number formatting.
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

/// Polyline chart of y against x. Non-finite points are skipped.
void write_line_plot(const std::string& path, const std::string& title, const std::string& ylabel,
                     std::span<const double> x, std::span<const double> y, bool log_y = false);

}  // namespace msino
