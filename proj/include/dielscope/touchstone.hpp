#pragma once

// One-port Touchstone (.s1p) reader and writer.
//
// Option line: `# <Hz|kHz|MHz|GHz> S <RI|MA|DB> R <resistance>`; missing tokens
// take the Touchstone defaults (GHz, MA, 50 ohm). Comments start with '!'.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "dielscope/params_file.hpp"
#include "dielscope/spectra.hpp"

namespace dielscope {

enum class TouchstoneFormat { RI, MA, DB };

struct TouchstoneData {
  ReflectionSweep sweep;
  std::vector<std::string> comments;  // text after '!', in file order
  std::string frequency_unit = "GHz";
  TouchstoneFormat format = TouchstoneFormat::MA;
  double resistance_ohm = 50.0;
};

namespace detail {

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

[[noreturn]] inline void touchstone_error(const char* code, int line, const std::string& what) {
  fail("campaign", code, "touchstone line " + std::to_string(line) + ": " + what);
}

}  // namespace detail

inline TouchstoneData parse_touchstone(std::string_view text) {
  TouchstoneData out;
  double unit_scale = 1e9;
  bool have_option = false;
  std::vector<double> freqs;
  std::vector<Complex> gamma;

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto bang = line.find('!'); bang != std::string_view::npos) {
      out.comments.emplace_back(detail::trim(line.substr(bang + 1)));
      line = line.substr(0, bang);
    }
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      // Touchstone 2.0 keywords; only the port count matters here.
      const std::string up = detail::upper(line);
      if (up.rfind("[NUMBER OF PORTS]", 0) == 0) {
        std::istringstream ks(std::string(line.substr(17)));
        int ports = 0;
        if (!(ks >> ports)) detail::touchstone_error("malformed_touchstone", line_no, "bad port count");
        if (ports != 1) detail::touchstone_error("multiport_touchstone", line_no, "only one-port files are supported");
      }
      continue;
    }

    if (line.front() == '#') {
      if (have_option) detail::touchstone_error("malformed_touchstone", line_no, "duplicate option line");
      have_option = true;
      std::istringstream os(std::string(line.substr(1)));
      std::string tok;
      while (os >> tok) {
        const std::string up = detail::upper(tok);
        if (up == "HZ") { unit_scale = 1.0; out.frequency_unit = "Hz"; }
        else if (up == "KHZ") { unit_scale = 1e3; out.frequency_unit = "kHz"; }
        else if (up == "MHZ") { unit_scale = 1e6; out.frequency_unit = "MHz"; }
        else if (up == "GHZ") { unit_scale = 1e9; out.frequency_unit = "GHz"; }
        else if (up == "RI") out.format = TouchstoneFormat::RI;
        else if (up == "MA") out.format = TouchstoneFormat::MA;
        else if (up == "DB") out.format = TouchstoneFormat::DB;
        else if (up == "S") {}
        else if (up == "Y" || up == "Z" || up == "H" || up == "G")
          detail::touchstone_error("malformed_touchstone", line_no, "only S-parameter files are supported");
        else if (up == "R") {
          std::string r;
          if (!(os >> r)) detail::touchstone_error("malformed_touchstone", line_no, "R needs a value");
          try {
            out.resistance_ohm = std::stod(r);
          } catch (const std::exception&) {
            detail::touchstone_error("malformed_touchstone", line_no, "bad reference resistance '" + r + "'");
          }
        } else {
          detail::touchstone_error("malformed_touchstone", line_no, "unknown option token '" + tok + "'");
        }
      }
      continue;
    }

    if (!have_option) detail::touchstone_error("malformed_touchstone", line_no, "data before option line");
    std::istringstream ds{std::string(line)};
    std::vector<double> nums;
    std::string tok;
    while (ds >> tok) {
      try {
        std::size_t used = 0;
        nums.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        detail::touchstone_error("malformed_touchstone", line_no, "non-numeric token '" + tok + "'");
      }
    }
    if (nums.size() > 3) detail::touchstone_error("multiport_touchstone", line_no, "only one-port files are supported");
    if (nums.size() != 3) detail::touchstone_error("malformed_touchstone", line_no, "expected 3 values per line");

    const double f = nums[0] * unit_scale;
    if (!freqs.empty() && !(f > freqs.back()))
      detail::touchstone_error("non_monotone", line_no, "frequencies must be strictly increasing");
    freqs.push_back(f);
    switch (out.format) {
      case TouchstoneFormat::RI: gamma.emplace_back(nums[1], nums[2]); break;
      case TouchstoneFormat::MA:
        gamma.push_back(std::polar(nums[1], nums[2] * std::numbers::pi / 180.0));
        break;
      case TouchstoneFormat::DB:
        gamma.push_back(std::polar(std::pow(10.0, nums[1] / 20.0), nums[2] * std::numbers::pi / 180.0));
        break;
    }
  }
  if (!have_option) detail::fail("campaign", "malformed_touchstone", "touchstone file has no option line");
  out.sweep = ReflectionSweep(FrequencyGrid(std::move(freqs)), std::move(gamma));
  return out;
}

inline TouchstoneData read_touchstone(const std::string& path) { return parse_touchstone(read_text_file(path)); }

inline ReflectionSweep import_touchstone(const std::string& path) { return read_touchstone(path).sweep; }

/// RI format, frequencies in Hz, full precision.
inline std::string render_touchstone(const ReflectionSweep& sweep, std::span<const std::string> comments = {}) {
  std::string out;
  for (const auto& c : comments) out += "! " + c + "\n";
  out += "# Hz S RI R 50\n";
  char buf[96];
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", sweep.grid()[i], sweep[i].real(), sweep[i].imag());
    out += buf;
  }
  return out;
}

inline void export_touchstone(const ReflectionSweep& sweep, const std::string& path,
                              std::span<const std::string> comments = {}) {
  write_text_file(path, render_touchstone(sweep, comments));
}

}  // namespace dielscope
