#pragma once

// Permittivity spectrum CSV: header `f_hz,eps_real,eps_imag_lossfactor`, one
// row per frequency, loss factor stored positive.

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "dielscope/params_file.hpp"
#include "dielscope/spectra.hpp"

namespace dielscope {

inline constexpr const char* kSpectrumCsvHeader = "f_hz,eps_real,eps_imag_lossfactor";

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline double parse_cell(const std::string& cell, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    fail("campaign", "bad_csv_cell", "csv line " + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
  }
}

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline PermittivitySpectrum parse_spectrum_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  int col_f = -1, col_dc = -1, col_lf = -1;
  std::size_t n_cols = 0;
  std::vector<double> f, dc, lf;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto cells = detail::split_csv_line(line);
    if (col_f < 0) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c] == "f_hz") col_f = static_cast<int>(c);
        else if (cells[c] == "eps_real") col_dc = static_cast<int>(c);
        else if (cells[c] == "eps_imag_lossfactor") col_lf = static_cast<int>(c);
      }
      if (col_f < 0 || col_dc < 0 || col_lf < 0)
        detail::fail("campaign", "missing_columns", std::string("csv header must contain ") + kSpectrumCsvHeader);
      n_cols = cells.size();
      continue;
    }
    if (cells.size() != n_cols)
      detail::fail("campaign", "bad_csv_row", "csv line " + std::to_string(line_no) + ": wrong number of cells");
    const double fv = detail::parse_cell(cells[static_cast<std::size_t>(col_f)], line_no);
    if (!f.empty() && !(fv > f.back()))
      detail::fail("campaign", "non_monotone", "csv line " + std::to_string(line_no) + ": frequencies must increase");
    f.push_back(fv);
    dc.push_back(detail::parse_cell(cells[static_cast<std::size_t>(col_dc)], line_no));
    lf.push_back(detail::parse_cell(cells[static_cast<std::size_t>(col_lf)], line_no));
  }
  if (col_f < 0) detail::fail("campaign", "missing_columns", "csv file is empty");
  return PermittivitySpectrum(FrequencyGrid(std::move(f)), std::move(dc), std::move(lf));
}

inline PermittivitySpectrum import_csv_spectrum(const std::string& path) {
  return parse_spectrum_csv(read_text_file(path));
}

inline std::string render_spectrum_csv(const PermittivitySpectrum& s) {
  std::string out = std::string(kSpectrumCsvHeader) + "\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += detail::format_full(s.grid()[i]) + "," + detail::format_full(s.dielectric_constant()[i]) + "," +
           detail::format_full(s.loss_factor()[i]) + "\n";
  }
  return out;
}

inline void export_csv_spectrum(const PermittivitySpectrum& s, const std::string& path) {
  write_text_file(path, render_spectrum_csv(s));
}

}  // namespace dielscope
