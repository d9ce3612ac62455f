#pragma once

// CSV ingestion, input digests, gamma rules and series standardization used
// by the command-line front end.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "svp/costs.hpp"
#include "svp/validity.hpp"

namespace svp::io {

/// The file could not be opened or read.
struct read_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A cell that should be numeric is not (including empty and NaN cells).
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Row = std::vector<std::string>;

/// RFC-4180 records: quoted fields, doubled quotes, CRLF or LF line ends.
/// Blank lines are skipped.
inline std::vector<Row> parse_csv(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) throw parse_error("stray quote inside unquoted field");
        in_quotes = true;
        field_started = true;
        break;
      case ',': end_field(); break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_row();
        break;
      case '\n': end_row(); break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw parse_error("unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

/// Finite double or nothing.
inline std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

enum class HeaderMode { automatic, yes, no };

inline HeaderMode parse_header_mode(std::string_view s) {
  if (s == "auto") return HeaderMode::automatic;
  if (s == "yes") return HeaderMode::yes;
  if (s == "no") return HeaderMode::no;
  throw std::invalid_argument("header must be auto, yes or no");
}

struct Column {
  std::vector<double> values;
  std::size_t index = 0;
  std::string name;  // empty without a header
  bool had_header = false;
};

/// Extracts one numeric column. `column` is a 0-based index, a header name,
/// or empty for the first column whose first data cell is numeric.
inline Column read_column(std::string_view text, std::string_view column, HeaderMode header) {
  const std::vector<Row> rows = parse_csv(text);
  if (rows.empty()) throw parse_error("input has no rows");

  bool has_header = header == HeaderMode::yes;
  if (header == HeaderMode::automatic) {
    has_header = false;
    for (const std::string& cell : rows[0]) {
      if (!parse_number(cell)) {
        has_header = true;
        break;
      }
    }
  }
  const std::size_t first_data = has_header ? 1 : 0;
  if (rows.size() <= first_data) throw parse_error("input has a header but no data rows");

  Column out;
  out.had_header = has_header;
  if (!column.empty()) {
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(column.data(), column.data() + column.size(), idx);
    if (ec == std::errc{} && ptr == column.data() + column.size()) {
      out.index = idx;
    } else {
      if (!has_header) throw std::invalid_argument("column '" + std::string(column) + "' given by name but input has no header");
      bool found = false;
      for (std::size_t j = 0; j < rows[0].size(); ++j) {
        if (trim(rows[0][j]) == column) {
          out.index = j;
          found = true;
          break;
        }
      }
      if (!found) throw std::invalid_argument("no column named '" + std::string(column) + "'");
    }
  } else {
    bool found = false;
    for (std::size_t j = 0; j < rows[first_data].size(); ++j) {
      if (parse_number(rows[first_data][j])) {
        out.index = j;
        found = true;
        break;
      }
    }
    if (!found) throw parse_error("first data row has no numeric cell");
  }
  if (has_header && out.index < rows[0].size()) out.name = std::string(trim(rows[0][out.index]));

  out.values.reserve(rows.size() - first_data);
  for (std::size_t i = first_data; i < rows.size(); ++i) {
    const std::size_t line = i + 1;
    if (out.index >= rows[i].size()) {
      throw parse_error("row " + std::to_string(line) + " has no column " + std::to_string(out.index));
    }
    const auto v = parse_number(rows[i][out.index]);
    if (!v) {
      throw parse_error("row " + std::to_string(line) + ": non-numeric cell '" + rows[i][out.index] + "'");
    }
    out.values.push_back(*v);
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw read_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw read_error("cannot read '" + path + "'");
  return buf.str();
}

/// 64-bit FNV-1a over raw bytes, as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// Gamma rules

struct GammaRule {
  enum class Kind { bic, bic15, wilcoxon, mood } kind = Kind::bic;
  double param = 0.0;  // typical length for wilcoxon, alpha for mood
};

inline GammaRule parse_gamma_rule(std::string_view text) {
  auto number = [&](std::string_view s) {
    const auto v = parse_number(s);
    if (!v) throw std::invalid_argument("bad gamma rule parameter '" + std::string(s) + "'");
    return *v;
  };
  if (text == "bic") return {GammaRule::Kind::bic, 0.0};
  if (text == "bic15") return {GammaRule::Kind::bic15, 0.0};
  if (text.starts_with("wilcoxon:")) {
    const double len = number(text.substr(9));
    if (!(len > 0.0)) throw std::invalid_argument("wilcoxon typical length must be positive");
    return {GammaRule::Kind::wilcoxon, len};
  }
  if (text.starts_with("mood:")) {
    const double alpha = number(text.substr(5));
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("mood alpha must lie in (0, 1)");
    return {GammaRule::Kind::mood, alpha};
  }
  throw std::invalid_argument("unknown gamma rule '" + std::string(text) + "'");
}

/// Constant threshold for the rule; the mood rule is length dependent and
/// handled through ValidityTest::mood_sidak instead.
inline double resolve_gamma(const GammaRule& rule, std::size_t n) {
  const double log_n = std::log(static_cast<double>(n));
  switch (rule.kind) {
    case GammaRule::Kind::bic: return 2.0 * log_n;
    case GammaRule::Kind::bic15: return 1.5 * log_n;
    case GammaRule::Kind::wilcoxon: return wilcoxon_threshold(rule.param);
    case GammaRule::Kind::mood: break;
  }
  throw std::invalid_argument("the mood rule has no single gamma");
}

// ---------------------------------------------------------------------------
// Standardization

/// Robust noise scale from first differences: 1.4826 * median|dy| / sqrt(2).
inline double mad_diff_scale(std::span<const double> y) {
  if (y.size() < 2) return 0.0;
  std::vector<double> d(y.size() - 1);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) d[i] = std::abs(y[i + 1] - y[i]);
  return 1.4826 * detail::median_inplace(d) / std::sqrt(2.0);
}

/// Divides by the mad-diff scale; throws if the scale is zero.
inline std::vector<double> standardize_mad_diff(std::vector<double> y, double& scale) {
  scale = mad_diff_scale(y);
  if (!(scale > 0.0)) throw std::invalid_argument("mad-diff scale is zero, cannot standardize");
  for (double& v : y) v /= scale;
  return y;
}

}  // namespace svp::io
