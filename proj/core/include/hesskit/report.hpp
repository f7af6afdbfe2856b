#pragma once

#include <map>
#include <string>
#include <vector>

namespace hesskit {

/// Report directories: a config snapshot plus structured-text tables and
/// plot-data files (numeric columns with '#' metadata headers).
namespace report {

void ensure_dir(const std::string& path);
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

/// Numeric series, one row per line, '#' header lines first. Values print
/// with max_digits10 so reading them back is lossless.
void write_plot_data(const std::string& path,
                     const std::map<std::string, std::string>& header,
                     const std::vector<std::vector<double>>& columns);

/// Fixed-width text table.
std::string format_table(const std::vector<std::string>& column_names,
                         const std::vector<std::vector<std::string>>& rows);

std::string format_double(double v);

}  // namespace report

}  // namespace hesskit
