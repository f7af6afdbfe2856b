#include "hesskit/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hesskit::report {

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << content;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_plot_data(const std::string& path,
                     const std::map<std::string, std::string>& header,
                     const std::vector<std::vector<double>>& columns) {
  if (columns.empty()) throw std::invalid_argument("write_plot_data: no columns");
  const std::size_t rows = columns.front().size();
  for (const auto& col : columns) {
    if (col.size() != rows) throw std::invalid_argument("write_plot_data: ragged columns");
  }
  std::ostringstream out;
  for (const auto& [key, value] : header) out << "# " << key << ": " << value << "\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c > 0) out << " ";
      out << format_double(columns[c][r]);
    }
    out << "\n";
  }
  write_text(path, out.str());
}

std::string format_table(const std::vector<std::string>& column_names,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths(column_names.size());
  for (std::size_t c = 0; c < column_names.size(); ++c) widths[c] = column_names[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size() && c < widths.size(); ++c) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }
  std::ostringstream out;
  const auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < widths.size(); ++c) {
      const std::string& cell = c < cells.size() ? cells[c] : "";
      out << cell << std::string(widths[c] - cell.size() + 2, ' ');
    }
    out << "\n";
  };
  emit(column_names);
  for (const auto& row : rows) emit(row);
  return out.str();
}

}  // namespace hesskit::report
