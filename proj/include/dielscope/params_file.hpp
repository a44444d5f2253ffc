#pragma once

// Versioned key-value parameter files.
//
//   # comment
//   format = <document kind>
//   version = <integer>
//
//   [section]
//   key = value
//   text = "quoted strings keep inner spaces"
//
// Keys before the first section header belong to the header block.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dielscope/error.hpp"

namespace dielscope {

struct ParamSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;

  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }

  bool has(std::string_view key) const { return find(key) != nullptr; }

  const std::string& get_string(std::string_view key) const {
    if (const auto* v = find(key)) return *v;
    detail::fail("params", "missing_key", "section [" + name + "] lacks key '" + std::string(key) + "'");
  }

  double get_double(std::string_view key) const {
    const std::string& v = get_string(key);
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      detail::fail("params", "bad_number", "[" + name + "] " + std::string(key) + " = '" + v + "' is not a number");
    }
  }

  double get_double(std::string_view key, double fallback) const { return has(key) ? get_double(key) : fallback; }

  long long get_int(std::string_view key) const {
    const double d = get_double(key);
    const auto i = static_cast<long long>(d);
    if (static_cast<double>(i) != d)
      detail::fail("params", "bad_integer", "[" + name + "] " + std::string(key) + " must be an integer");
    return i;
  }

  void set(std::string key, std::string value) { entries.emplace_back(std::move(key), std::move(value)); }

  void set(std::string key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    set(std::move(key), std::string(buf));
  }
};

struct ParamDocument {
  std::string format;
  int version = 0;
  ParamSection header;
  std::vector<ParamSection> sections;

  const ParamSection* find_section(std::string_view name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }

  const ParamSection& section(std::string_view name) const {
    if (const auto* s = find_section(name)) return *s;
    detail::fail("params", "missing_section", "document lacks section [" + std::string(name) + "]");
  }

  ParamSection& add_section(std::string name) {
    sections.push_back(ParamSection{std::move(name), {}});
    return sections.back();
  }

  /// Throws unless the header names `expected_format` at `expected_version`.
  void require(std::string_view expected_format, int expected_version) const {
    if (format != expected_format)
      detail::fail("params", "wrong_format",
                   "expected format '" + std::string(expected_format) + "', got '" + format + "'");
    if (version != expected_version)
      detail::fail("params", "version_mismatch",
                   "expected version " + std::to_string(expected_version) + ", got " + std::to_string(version));
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline ParamDocument parse_params(std::string_view text) {
  ParamDocument doc;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  // doc.sections may reallocate, so the open section is tracked by index.
  std::optional<std::size_t> current_index;

  auto where = [&] { return "line " + std::to_string(line_no); };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']') detail::fail("params", "malformed", where() + ": unterminated section header");
      doc.sections.push_back(ParamSection{std::string(detail::trim(line.substr(1, line.size() - 2))), {}});
      current_index = doc.sections.size() - 1;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) detail::fail("params", "malformed", where() + ": expected 'key = value'");
    std::string key(detail::trim(line.substr(0, eq)));
    std::string_view value = detail::trim(line.substr(eq + 1));
    if (key.empty()) detail::fail("params", "malformed", where() + ": empty key");

    if (!value.empty() && value.front() == '"') {
      if (value.size() < 2 || value.back() != '"')
        detail::fail("params", "malformed", where() + ": unterminated string");
      value = value.substr(1, value.size() - 2);
    } else if (const auto hash = value.find('#'); hash != std::string_view::npos) {
      value = detail::trim(value.substr(0, hash));
    }

    ParamSection& current = current_index ? doc.sections[*current_index] : doc.header;
    current.set(std::move(key), std::string(value));
  }

  if (const auto* f = doc.header.find("format")) doc.format = *f;
  if (doc.header.has("version")) doc.version = static_cast<int>(doc.header.get_int("version"));
  return doc;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) detail::fail("io", "open_failed", "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) detail::fail("io", "open_failed", "cannot open '" + path + "' for writing");
  out << text;
  if (!out) detail::fail("io", "write_failed", "failed writing '" + path + "'");
}

inline ParamDocument load_params(const std::string& path) { return parse_params(read_text_file(path)); }

inline std::string render_params(const ParamDocument& doc) {
  std::ostringstream out;
  auto emit = [&out](const std::pair<std::string, std::string>& kv) {
    const bool quote = kv.second.find_first_of(" #\t") != std::string::npos || kv.second.empty();
    out << kv.first << " = " << (quote ? "\"" + kv.second + "\"" : kv.second) << '\n';
  };
  out << "format = " << doc.format << '\n' << "version = " << doc.version << '\n';
  for (const auto& kv : doc.header.entries)
    if (kv.first != "format" && kv.first != "version") emit(kv);
  for (const auto& s : doc.sections) {
    out << '\n' << '[' << s.name << "]\n";
    for (const auto& kv : s.entries) emit(kv);
  }
  return out.str();
}

}  // namespace dielscope
