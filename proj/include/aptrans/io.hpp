#pragma once

// Text formats: params/scale/fit documents as versioned JSON, transitions,
// counts, matrices, metrics and cashflows as headered CSV. Lines starting with
// '#' are comments (writers put the resolved run configuration there).

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "aptrans/errors.hpp"
#include "aptrans/estimator.hpp"
#include "aptrans/likelihood.hpp"
#include "aptrans/masterscale.hpp"
#include "aptrans/montecarlo.hpp"
#include "aptrans/process.hpp"
#include "aptrans/transition.hpp"

namespace aptrans::io {

using json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kParamsFormat = "aptrans.params";
inline constexpr const char* kScaleFormat = "aptrans.scale";

/// Rounds to 12 significant digits.
inline double round12(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

inline std::string fmt12(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// files

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("write failed for " + path);
}

// ---------------------------------------------------------------------------
// JSON documents

namespace detail {

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(what + ": " + e.what());
  }
}

inline double number_field(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key) || !j[key].is_number()) throw DataError(what + ": missing numeric field '" + key + "'");
  return j[key].get<double>();
}

inline void check_header(const json& j, const char* format, const std::string& what) {
  if (!j.is_object()) throw DataError(what + ": expected a JSON object");
  if (!j.contains("format") || j["format"] != format)
    throw DataError(what + ": 'format' must be \"" + std::string(format) + "\"");
  if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != kFormatVersion)
    throw DataError(what + ": unsupported or missing 'version'");
}

}  // namespace detail

inline json params_json(const ProcessParams& p) {
  json j;
  j["format"] = kParamsFormat;
  j["version"] = kFormatVersion;
  j["a0"] = round12(p.a0);
  j["a1"] = round12(p.a1);
  j["df"] = round12(p.df);
  return j;
}

inline json fit_json(const FitResult& r, const json& config) {
  json j = params_json(r.params);
  json f;
  f["log_likelihood"] = round12(r.log_likelihood);
  f["converged"] = r.converged;
  f["iterations"] = r.iterations;
  f["n_observations"] = r.n_observations;
  f["start_index"] = r.start_index;
  f["pd_max"] = round12(pd_max(r.params));
  f["pd_equilibrium"] = round12(pd_equilibrium(r.params));
  f["warnings"] = r.warnings;
  j["fit"] = f;
  j["config"] = config;
  return j;
}

/// Accepts a params document, with or without fit details.
inline ProcessParams params_from_json(const json& j) {
  detail::check_header(j, kParamsFormat, "params");
  ProcessParams p{detail::number_field(j, "a0", "params"), detail::number_field(j, "a1", "params"),
                  detail::number_field(j, "df", "params")};
  validate(p);
  return p;
}

inline json scale_json(const RatingScale& s) {
  json j;
  j["format"] = kScaleFormat;
  j["version"] = kFormatVersion;
  json rows = json::array();
  for (std::size_t k = 0; k < s.size(); ++k) {
    json r;
    r["index"] = k + 1;
    r["low"] = round12(s[k].low);
    r["assigned"] = round12(s[k].assigned);
    r["high"] = round12(s[k].high);
    rows.push_back(r);
  }
  j["ratings"] = rows;
  return j;
}

inline RatingScale scale_from_json(const json& j) {
  detail::check_header(j, kScaleFormat, "scale");
  if (!j.contains("ratings") || !j["ratings"].is_array()) throw DataError("scale: missing 'ratings' array");
  std::vector<RatingBand> bands;
  for (std::size_t k = 0; k < j["ratings"].size(); ++k) {
    const auto& r = j["ratings"][k];
    const std::string what = "scale rating " + std::to_string(k + 1);
    if (r.contains("index") && (!r["index"].is_number_integer() || r["index"].get<long>() != static_cast<long>(k + 1)))
      throw DataError(what + ": indices must run 1..N in order");
    bands.push_back({detail::number_field(r, "low", what), detail::number_field(r, "assigned", what),
                     detail::number_field(r, "high", what)});
  }
  return RatingScale(std::move(bands));
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline ProcessParams load_params(const std::string& path) {
  return params_from_json(detail::parse_json(read_file(path), path));
}
inline RatingScale load_scale(const std::string& path) {
  return scale_from_json(detail::parse_json(read_file(path), path));
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  ///< 1-based source line of each row
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

inline double to_double(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty())
    throw DataError(at_line(line) + "column '" + column + "': cannot parse '" + s + "' as a number");
  return v;
}

inline std::int64_t to_int(const std::string& s, std::size_t line, const std::string& column) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty())
    throw DataError(at_line(line) + "column '" + column + "': cannot parse '" + s + "' as an integer");
  return v;
}

}  // namespace detail

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto s = detail::trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto cells = detail::split(s);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw DataError(detail::at_line(n) + "expected " + std::to_string(t.header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(n);
  }
  if (t.header.empty()) throw DataError("empty CSV input (no header)");
  return t;
}

enum class Regime { continuous, interval, counts };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::continuous: return "continuous";
    case Regime::interval: return "interval";
    case Regime::counts: return "counts";
  }
  return "?";
}

inline std::optional<Regime> regime_from_string(std::string_view s) {
  if (s == "continuous") return Regime::continuous;
  if (s == "interval") return Regime::interval;
  if (s == "counts" || s == "rating") return Regime::counts;
  return std::nullopt;
}

inline std::optional<Regime> detect_regime(const CsvTable& t) {
  using V = std::vector<std::string>;
  if (t.header == V{"pd_from", "pd_to"}) return Regime::continuous;
  if (t.header == V{"pd_from", "to_low", "to_high", "is_default"}) return Regime::interval;
  if (!t.header.empty() && t.header[0] == "from") return Regime::counts;
  return std::nullopt;
}

namespace detail {
inline void require_header(const CsvTable& t, const std::vector<std::string>& want, const char* what) {
  if (t.header != want) {
    std::string h;
    for (const auto& c : want) h += (h.empty() ? "" : ",") + c;
    throw DataError(std::string(what) + ": header must be '" + h + "'");
  }
}

inline double probability_cell(const std::string& s, std::size_t line, const std::string& column, bool allow_one) {
  const double v = to_double(s, line, column);
  if (!(v > 0.0 && (allow_one ? v <= 1.0 : v < 1.0)))
    throw DataError(at_line(line) + "column '" + column + "': " + s + " outside " + (allow_one ? "(0,1]" : "(0,1)"));
  return v;
}
}  // namespace detail

inline std::vector<ContinuousTransition> continuous_from_csv(const CsvTable& t) {
  detail::require_header(t, {"pd_from", "pd_to"}, "continuous transitions");
  std::vector<ContinuousTransition> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto ln = t.line_numbers[i];
    out.push_back({detail::probability_cell(t.rows[i][0], ln, "pd_from", false),
                   detail::probability_cell(t.rows[i][1], ln, "pd_to", true)});
  }
  return out;
}

inline std::vector<IntervalTransition> interval_from_csv(const CsvTable& t) {
  detail::require_header(t, {"pd_from", "to_low", "to_high", "is_default"}, "interval transitions");
  std::vector<IntervalTransition> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto ln = t.line_numbers[i];
    const auto& r = t.rows[i];
    const double from = detail::probability_cell(r[0], ln, "pd_from", false);
    const double lo = detail::to_double(r[1], ln, "to_low");
    const double hi = detail::to_double(r[2], ln, "to_high");
    const auto d = detail::to_int(r[3], ln, "is_default");
    if (d != 0 && d != 1) throw DataError(detail::at_line(ln) + "column 'is_default' must be 0 or 1");
    if (!d && !(lo >= 0.0 && lo < hi && hi <= 1.0))
      throw DataError(detail::at_line(ln) + "requires 0 <= to_low < to_high <= 1");
    out.push_back({from, lo, hi, d == 1});
  }
  return out;
}

inline CountMatrix counts_from_csv(const CsvTable& t, const RatingScale& scale) {
  const std::size_t n = scale.size();
  std::vector<std::string> want{"from"};
  for (std::size_t j = 1; j <= n; ++j) want.push_back(std::to_string(j));
  detail::require_header(t, want, "counts");
  if (t.rows.size() != n)
    throw DataError("counts: expected " + std::to_string(n) + " rows for the scale, got " + std::to_string(t.rows.size()));
  std::vector<std::int64_t> cells;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ln = t.line_numbers[i];
    if (t.rows[i][0] != std::to_string(i + 1)) throw DataError(detail::at_line(ln) + "rows must be labelled 1..N in order");
    for (std::size_t j = 1; j <= n; ++j) cells.push_back(detail::to_int(t.rows[i][j], ln, t.header[j]));
  }
  return CountMatrix(scale, std::move(cells));
}

inline TransitionMatrix matrix_from_csv(const CsvTable& t) {
  if (t.header.size() < 3 || t.header[0] != "from" || t.header.back() != "D")
    throw DataError("matrix: header must be 'from,1,...,N,D'");
  const std::size_t n = t.header.size() - 2;
  for (std::size_t j = 1; j <= n; ++j)
    if (t.header[j] != std::to_string(j)) throw DataError("matrix: header must be 'from,1,...,N,D'");
  if (t.rows.size() != n + 1) throw DataError("matrix: expected " + std::to_string(n + 1) + " rows");
  std::vector<double> e;
  for (std::size_t i = 0; i <= n; ++i) {
    const auto ln = t.line_numbers[i];
    const std::string label = i == n ? "D" : std::to_string(i + 1);
    if (t.rows[i][0] != label) throw DataError(detail::at_line(ln) + "rows must be labelled 1..N,D in order");
    for (std::size_t j = 1; j <= n + 1; ++j) e.push_back(detail::to_double(t.rows[i][j], ln, t.header[j]));
  }
  TransitionMatrix m(n, std::move(e));
  // Entries are serialized with 12 significant digits, so rows sum to 1 only to
  // that precision; the rounding is removed by rescaling each row.
  if (const auto v = m.violations(1e-9); !v.empty()) throw DataError("matrix: " + v.front());
  for (std::size_t i = 0; i < n; ++i) {
    const double s = m.row_sum(i);
    for (std::size_t j = 0; j <= n; ++j) m(i, j) /= s;
  }
  return m;
}

inline ECLInput cashflows_from_csv(const CsvTable& t) {
  detail::require_header(t, {"year", "ead", "lgd", "discount"}, "cashflows");
  ECLInput in;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto ln = t.line_numbers[i];
    if (detail::to_int(t.rows[i][0], ln, "year") != static_cast<std::int64_t>(i + 1))
      throw DataError(detail::at_line(ln) + "years must run 1..T in order");
    in.ead.push_back(detail::to_double(t.rows[i][1], ln, "ead"));
    in.lgd.push_back(detail::to_double(t.rows[i][2], ln, "lgd"));
    in.discount.push_back(detail::to_double(t.rows[i][3], ln, "discount"));
  }
  try {
    validate(in);
  } catch (const ParameterError& e) {
    throw DataError(std::string("cashflows: ") + e.what());
  }
  return in;
}

/// '#'-prefixed header block from "key=value" lines.
inline std::string comment_block(const std::vector<std::pair<std::string, std::string>>& config) {
  std::string out;
  for (const auto& [k, v] : config) out += "# " + k + "=" + v + "\n";
  return out;
}

inline std::string continuous_csv(const std::vector<ContinuousTransition>& d) {
  std::string out = "pd_from,pd_to\n";
  for (const auto& r : d) out += fmt12(r.pd_from) + "," + fmt12(r.pd_to) + "\n";
  return out;
}

inline std::string counts_csv(const CountMatrix& c) {
  std::string out = "from";
  for (std::size_t j = 1; j <= c.size(); ++j) out += "," + std::to_string(j);
  out += "\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    out += std::to_string(i + 1);
    for (std::size_t j = 0; j < c.size(); ++j) out += "," + std::to_string(c(i, j));
    out += "\n";
  }
  return out;
}

inline std::string matrix_csv(const TransitionMatrix& m) {
  const std::size_t n = m.n_ratings();
  std::string out = "from";
  for (std::size_t j = 1; j <= n; ++j) out += "," + std::to_string(j);
  out += ",D\n";
  for (std::size_t i = 0; i <= n; ++i) {
    out += i == n ? "D" : std::to_string(i + 1);
    for (std::size_t j = 0; j <= n; ++j) out += "," + fmt12(m(i, j));
    out += "\n";
  }
  return out;
}

inline std::string metrics_csv(const MultiYearMetrics& m) {
  std::string out = "rating,year,cpd,sp,mpd,fpd\n";
  for (std::size_t r = 0; r < m.n_ratings(); ++r)
    for (int y = 0; y < m.horizon(); ++y)
      out += std::to_string(r + 1) + "," + std::to_string(y + 1) + "," + fmt12(m.cpd[r][y]) + "," + fmt12(m.sp[r][y]) +
             "," + fmt12(m.mpd[r][y]) + "," + fmt12(m.fpd[r][y]) + "\n";
  return out;
}

/// Reads rating,year,cpd,... back into metrics (cpd drives the rest).
inline MultiYearMetrics metrics_from_csv(const CsvTable& t) {
  detail::require_header(t, {"rating", "year", "cpd", "sp", "mpd", "fpd"}, "metrics");
  std::vector<std::vector<double>> cpd;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto ln = t.line_numbers[i];
    const auto r = detail::to_int(t.rows[i][0], ln, "rating");
    const auto y = detail::to_int(t.rows[i][1], ln, "year");
    if (r < 1 || y < 1) throw DataError(detail::at_line(ln) + "rating and year start at 1");
    if (static_cast<std::size_t>(r) == cpd.size() + 1 && y == 1) cpd.emplace_back();
    if (static_cast<std::size_t>(r) != cpd.size() || static_cast<std::size_t>(y) != cpd.back().size() + 1)
      throw DataError(detail::at_line(ln) + "rows must be ordered by rating then year without gaps");
    cpd.back().push_back(detail::to_double(t.rows[i][2], ln, "cpd"));
  }
  if (cpd.empty()) throw DataError("metrics: no rows");
  for (const auto& row : cpd)
    if (row.size() != cpd.front().size()) throw DataError("metrics: every rating needs the same horizon");
  return metrics_from_cpd(std::move(cpd));
}

inline std::string cashflows_csv(const ECLInput& in) {
  std::string out = "year,ead,lgd,discount\n";
  for (std::size_t t = 0; t < in.years(); ++t)
    out += std::to_string(t + 1) + "," + fmt12(in.ead[t]) + "," + fmt12(in.lgd[t]) + "," + fmt12(in.discount[t]) + "\n";
  return out;
}

/// Long format: rating,horizon,estimator,statistic,value.
inline std::string study_csv(const StudyReport& rep) {
  std::string out = "rating,horizon,estimator,statistic,value\n";
  auto row = [&out](std::size_t r, int h, const char* est, const char* stat, double v) {
    out += std::to_string(r + 1) + "," + std::to_string(h + 1) + "," + est + "," + stat + "," +
           (std::isnan(v) ? std::string("NA") : fmt12(v)) + "\n";
  };
  auto block = [&](const PredictorStats& s, const char* est, std::size_t r, int h) {
    row(r, h, est, "mean", s.mean[r][h]);
    row(r, h, est, "median", s.median[r][h]);
    row(r, h, est, "p25", s.p25[r][h]);
    row(r, h, est, "p75", s.p75[r][h]);
  };
  const std::size_t nr = rep.true_cpd.size();
  for (std::size_t r = 0; r < nr; ++r) {
    for (int h = 0; h < rep.config.horizon; ++h) {
      row(r, h, "truth", "cpd", rep.true_cpd[r][h]);
      row(r, h, "large_empirical", "cpd", rep.large_empirical.cpd[r][h]);
      row(r, h, "large_structural", "cpd", rep.large_structural.cpd[r][h]);
      block(rep.empirical, "empirical", r, h);
      block(rep.structural, "structural", r, h);
    }
  }
  return out;
}

}  // namespace aptrans::io
