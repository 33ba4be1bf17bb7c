#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rbergomi/asgq.hpp"
#include "rbergomi/errors.hpp"
#include "rbergomi/estimators.hpp"
#include "rbergomi/model.hpp"

namespace rbergomi {

// ---------------------------------------------------------------------------
// Parameter sets

struct ParameterSet {
  int id = 0;
  ModelParams params;
  double reference_price = 0.0;
  double reference_stat_error = 0.0;  // 1.96 * sigma / sqrt(M) of the reference run
  Hierarchy hierarchy = Hierarchy::kGeometric;
};

inline const std::array<ParameterSet, 4>& parameter_sets() {
  static const std::array<ParameterSet, 4> sets = [] {
    ModelParams p1;  // H .07, eta 1.9, rho -.9, xi0 .235^2, K 1
    ModelParams p2;
    p2.hurst = 0.02;
    p2.eta = 0.4;
    p2.rho = -0.7;
    p2.xi0 = 0.1;
    ModelParams p3 = p2;
    p3.strike = 0.8;
    ModelParams p4 = p2;
    p4.strike = 1.2;
    return std::array<ParameterSet, 4>{{
        {1, p1, 0.0791, 5.6e-5, Hierarchy::kLinear},
        {2, p2, 0.1246, 9.0e-5, Hierarchy::kGeometric},
        {3, p3, 0.2412, 5.4e-5, Hierarchy::kGeometric},
        {4, p4, 0.0570, 8.0e-5, Hierarchy::kGeometric},
    }};
  }();
  return sets;
}

inline const ParameterSet& parameter_set(int id) {
  if (id < 1 || id > 4) throw ConfigError("set", "must be 1, 2, 3 or 4 (got " + std::to_string(id) + ")");
  return parameter_sets()[static_cast<std::size_t>(id - 1)];
}

// ---------------------------------------------------------------------------
// Run configuration

enum class Method { kMonteCarlo, kQuasiMonteCarlo, kSparseGrid };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kMonteCarlo: return "mc";
    case Method::kQuasiMonteCarlo: return "qmc";
    case Method::kSparseGrid: return "asgq";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "mc") return Method::kMonteCarlo;
  if (s == "qmc") return Method::kQuasiMonteCarlo;
  if (s == "asgq") return Method::kSparseGrid;
  throw ConfigError("method", "expected mc, qmc or asgq (got '" + s + "')");
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "hybrid") return Scheme::kHybrid;
  if (s == "exact") return Scheme::kExact;
  throw ConfigError("scheme", "expected hybrid or exact (got '" + s + "')");
}

inline Hierarchy parse_hierarchy(const std::string& s) {
  if (s == "linear") return Hierarchy::kLinear;
  if (s == "geometric") return Hierarchy::kGeometric;
  throw ConfigError("hierarchy", "expected linear or geometric (got '" + s + "')");
}

/// Flat key/value settings of one run, as read from a config section and
/// overridden by command-line flags.
using Settings = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& field, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (!in || !(in >> std::ws).eof()) throw ConfigError(field, "cannot parse '" + text + "'");
  return value;
}

inline std::uint64_t parse_count(const std::string& field, const std::string& text) {
  // accepts 1000000, 1e6, 2^20
  const auto caret = text.find('^');
  if (caret != std::string::npos) {
    const auto base = parse_number<std::uint64_t>(field, text.substr(0, caret));
    const auto exp = parse_number<unsigned>(field, text.substr(caret + 1));
    if (base != 2 || exp > 62) throw ConfigError(field, "only 2^k with k <= 62 is supported");
    return std::uint64_t{1} << exp;
  }
  const double v = parse_number<double>(field, text);
  if (!(v >= 0.0) || v > 9.0e18 || v != std::floor(v)) {
    throw ConfigError(field, "expected a nonnegative integer (got '" + text + "')");
  }
  return static_cast<std::uint64_t>(v);
}

inline std::vector<std::size_t> parse_size_list(const std::string& field, const std::string& text) {
  std::vector<std::size_t> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<std::size_t>(parse_count(field, item)));
  }
  if (out.empty()) throw ConfigError(field, "empty list");
  return out;
}

inline bool parse_flag(const std::string& field, const std::string& text) {
  if (text == "on" || text == "true" || text == "1" || text == "yes") return true;
  if (text == "off" || text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(field, "expected on or off (got '" + text + "')");
}

}  // namespace detail

/// Typed view of a Settings map. Unknown keys are rejected so that typos in
/// config files do not pass silently.
struct RunConfig {
  int set_id = 1;
  ModelParams params = parameter_set(1).params;
  bool params_overridden = false;
  Method method = Method::kMonteCarlo;
  Scheme scheme = Scheme::kHybrid;
  std::size_t steps = 8;
  int richardson = 0;
  bool bridge = true;
  double tol = 1e-2;
  Hierarchy hierarchy = Hierarchy::kLinear;
  AsgqStop stop = AsgqStop::kRelativeSum;
  std::uint64_t samples = 100000;
  std::size_t shifts = 8;
  std::uint64_t seed = 20190101;
  std::uint64_t max_work = std::uint64_t{1} << 26;
  std::uint64_t threads = 0;
  // studies
  std::vector<std::size_t> steps_list{2, 4, 8, 16, 32};
  std::vector<Method> methods{Method::kMonteCarlo, Method::kQuasiMonteCarlo, Method::kSparseGrid};
  double target = 1e-2;
  std::uint64_t bias_samples = 1000000;
  std::uint64_t pilot_samples = 20000;
  std::uint64_t max_samples = std::uint64_t{1} << 24;
  int mc_richardson = 1;
  int qmc_richardson = 1;
  int asgq_richardson = 2;
  std::string name = "run";

  /// Canonical "key=value" lines of every resolved setting, sorted.
  Settings resolved;

  static RunConfig from_settings(const Settings& s) {
    static const std::vector<std::string> known = {
        "set", "method", "scheme", "steps", "richardson", "bridge", "tol", "hierarchy", "stop",
        "samples", "shifts", "seed", "max_work", "threads", "steps_list", "methods", "target",
        "bias_samples", "pilot_samples", "max_samples", "mc_richardson", "qmc_richardson",
        "asgq_richardson", "name", "hurst", "eta", "rho", "xi0", "spot", "strike", "maturity",
        "command", "out"};
    for (const auto& [k, v] : s) {
      if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError(k, "unknown setting");
    }
    auto get = [&](const char* key) -> std::optional<std::string> {
      const auto it = s.find(key);
      if (it == s.end()) return std::nullopt;
      return detail::trim(it->second);
    };
    RunConfig c;
    if (auto v = get("set")) c.set_id = detail::parse_number<int>("set", *v);
    const ParameterSet& ps = parameter_set(c.set_id);
    c.params = ps.params;
    c.hierarchy = ps.hierarchy;
    const std::pair<const char*, double ModelParams::*> fields[] = {
        {"hurst", &ModelParams::hurst}, {"eta", &ModelParams::eta},       {"rho", &ModelParams::rho},
        {"xi0", &ModelParams::xi0},     {"spot", &ModelParams::spot},     {"strike", &ModelParams::strike},
        {"maturity", &ModelParams::maturity}};
    for (const auto& [key, member] : fields) {
      if (auto v = get(key)) {
        c.params.*member = detail::parse_number<double>(key, *v);
        c.params_overridden = true;
      }
    }
    c.params.validate();
    if (auto v = get("method")) c.method = parse_method(*v);
    if (auto v = get("scheme")) c.scheme = parse_scheme(*v);
    if (auto v = get("steps")) c.steps = static_cast<std::size_t>(detail::parse_count("steps", *v));
    if (auto v = get("richardson")) c.richardson = detail::parse_number<int>("richardson", *v);
    if (auto v = get("bridge")) c.bridge = detail::parse_flag("bridge", *v);
    if (auto v = get("tol")) c.tol = detail::parse_number<double>("tol", *v);
    if (auto v = get("hierarchy")) c.hierarchy = parse_hierarchy(*v);
    if (auto v = get("stop")) {
      if (*v == "relative-sum") c.stop = AsgqStop::kRelativeSum;
      else if (*v == "absolute-max") c.stop = AsgqStop::kAbsoluteMax;
      else throw ConfigError("stop", "expected relative-sum or absolute-max");
    }
    if (auto v = get("samples")) c.samples = detail::parse_count("samples", *v);
    if (auto v = get("shifts")) c.shifts = static_cast<std::size_t>(detail::parse_count("shifts", *v));
    if (auto v = get("seed")) c.seed = detail::parse_count("seed", *v);
    if (auto v = get("max_work")) c.max_work = detail::parse_count("max_work", *v);
    if (auto v = get("threads")) c.threads = detail::parse_count("threads", *v);
    if (auto v = get("steps_list")) c.steps_list = detail::parse_size_list("steps_list", *v);
    if (auto v = get("methods")) {
      c.methods.clear();
      std::istringstream in(*v);
      std::string item;
      while (std::getline(in, item, ',')) {
        item = detail::trim(item);
        if (!item.empty()) c.methods.push_back(parse_method(item));
      }
      if (c.methods.empty()) throw ConfigError("methods", "empty list");
    }
    if (auto v = get("target")) c.target = detail::parse_number<double>("target", *v);
    if (auto v = get("bias_samples")) c.bias_samples = detail::parse_count("bias_samples", *v);
    if (auto v = get("pilot_samples")) c.pilot_samples = detail::parse_count("pilot_samples", *v);
    if (auto v = get("max_samples")) c.max_samples = detail::parse_count("max_samples", *v);
    if (auto v = get("mc_richardson")) c.mc_richardson = detail::parse_number<int>("mc_richardson", *v);
    if (auto v = get("qmc_richardson")) c.qmc_richardson = detail::parse_number<int>("qmc_richardson", *v);
    if (auto v = get("asgq_richardson")) c.asgq_richardson = detail::parse_number<int>("asgq_richardson", *v);
    if (auto v = get("name")) c.name = *v;
    c.validate();
    for (const auto& [k, v] : s) {
      if (k != "out" && k != "threads") c.resolved[k] = detail::trim(v);
    }
    c.resolved["set"] = std::to_string(c.set_id);
    return c;
  }

  void validate() const {
    if (steps == 0) throw ConfigError("steps", "must be >= 1");
    if (richardson < 0 || richardson > 2) throw ConfigError("richardson", "must be 0, 1 or 2");
    for (int d : {mc_richardson, qmc_richardson, asgq_richardson}) {
      if (d < 0 || d > 2) throw ConfigError("richardson", "per-method depth must be 0, 1 or 2");
    }
    if (bridge && scheme == Scheme::kHybrid && !std::has_single_bit(steps)) {
      throw ConfigError("steps", "the Brownian bridge needs a power-of-two step count");
    }
    if (bridge && scheme == Scheme::kExact && method != Method::kMonteCarlo) {
      throw ConfigError("bridge", "not available with the exact scheme; pass --bridge off");
    }
    if (!(tol > 0.0)) throw ConfigError("tol", "must be positive");
    if (!(target > 0.0)) throw ConfigError("target", "must be positive");
    if (samples < 2) throw ConfigError("samples", "must be >= 2");
    if (shifts < 2) throw ConfigError("shifts", "must be >= 2");
    if (name.empty() || name.find_first_of("/\\ ") != std::string::npos) {
      throw ConfigError("name", "must be a non-empty token without spaces or slashes");
    }
  }

  /// FNV-1a over the sorted resolved settings, as 16 hex digits.
  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [k, v] : resolved) {
      for (char ch : k + "=" + v + "\n") {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
      }
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
  }

  double reference_price() const {
    if (params_overridden) return std::nan("");
    return parameter_set(set_id).reference_price;
  }
  double reference_stat_error() const {
    if (params_overridden) return std::nan("");
    return parameter_set(set_id).reference_stat_error;
  }
};

/// Reads an INI-style config: top-level keys are defaults, every [section]
/// is one run (the section name becomes the run name). A file without
/// sections is a single run.
inline std::vector<Settings> load_config(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config", e.what());
  }
  Settings defaults;
  std::vector<std::pair<std::string, Settings>> sections;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      defaults[key] = node.data();
    } else {
      Settings s;
      for (const auto& [k, v] : node) s[k] = v.data();
      sections.emplace_back(key, std::move(s));
    }
  }
  std::vector<Settings> runs;
  if (sections.empty()) {
    runs.push_back(defaults);
    return runs;
  }
  for (auto& [name, s] : sections) {
    Settings merged = defaults;
    merged["name"] = name;
    for (auto& [k, v] : s) merged[k] = v;
    runs.push_back(std::move(merged));
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Records and CSV emission

struct RunRecord {
  Method method = Method::kMonteCarlo;
  int set_id = 0;
  std::size_t steps = 0;
  int richardson_depth = 0;
  bool bridge = false;
  std::optional<double> tolerance;
  std::optional<std::uint64_t> samples;
  std::optional<std::size_t> shifts;
  std::uint64_t seed = 0;
  std::string config_hash;
  EstimateResult result;
  std::optional<double> reference;
  std::optional<double> relative_error;
  std::optional<double> bias_estimate;  // relative, from the compare protocol
  std::string note;
};

namespace detail {

inline std::string fmt(double x) {
  if (!std::isfinite(x)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline std::string fmt(std::optional<double> x) { return x ? fmt(*x) : std::string(); }

template <typename T>
std::string fmt_int(std::optional<T> x) {
  return x ? std::to_string(*x) : std::string();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace detail

/// Fills reference / relative error from the config.
inline void attach_reference(RunRecord& r, double reference) {
  if (!std::isfinite(reference)) return;
  r.reference = reference;
  r.relative_error = std::abs(r.result.value - reference) / reference;
}

inline const char* const kRecordHeader =
    "method,set_id,steps,richardson,bridge,tol,samples,shifts,seed,config_hash,value,error_estimate,"
    "reference,relative_error,bias_estimate,work,converged,note";

inline const char* const kTimingHeader = "method,set_id,steps,richardson,config_hash,wall_seconds";

inline std::string record_row(const RunRecord& r) {
  std::ostringstream out;
  out << to_string(r.method) << ',' << r.set_id << ',' << r.steps << ',' << r.richardson_depth << ','
      << (r.bridge ? "on" : "off") << ',' << detail::fmt(r.tolerance) << ',' << detail::fmt_int(r.samples)
      << ',' << detail::fmt_int(r.shifts) << ',' << r.seed << ',' << r.config_hash << ','
      << detail::fmt(r.result.value) << ',' << detail::fmt(r.result.stat_error) << ','
      << detail::fmt(r.reference) << ',' << detail::fmt(r.relative_error) << ','
      << detail::fmt(r.bias_estimate) << ',' << r.result.work.evaluations << ','
      << (r.result.converged ? "true" : "false") << ',' << detail::csv_escape(r.note);
  return out.str();
}

inline std::string timing_row(const RunRecord& r) {
  std::ostringstream out;
  out << to_string(r.method) << ',' << r.set_id << ',' << r.steps << ',' << r.richardson_depth << ','
      << r.config_hash << ',' << detail::fmt(r.result.wall_seconds);
  return out.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

/// Record CSV (deterministic columns only) plus a separate timing CSV, since
/// wall-clock times differ between otherwise identical runs.
inline void emit_records(const std::vector<RunRecord>& records, const std::filesystem::path& csv,
                         const std::filesystem::path& timing_csv) {
  if (records.empty()) throw DomainError("emit_records: no records");
  std::string body = std::string(kRecordHeader) + "\n";
  std::string timing = std::string(kTimingHeader) + "\n";
  for (const auto& r : records) {
    body += record_row(r) + "\n";
    timing += timing_row(r) + "\n";
  }
  write_text(csv, body);
  write_text(timing_csv, timing);
}

struct PlotPoint {
  double x, y, y_lo, y_hi;
};

inline void emit_plot_data(const std::filesystem::path& path, const std::string& title,
                           const std::vector<PlotPoint>& points) {
  std::string text = "# " + title + "\n# x y y_lo y_hi\n";
  for (const auto& p : points) {
    text += detail::fmt(p.x) + " " + detail::fmt(p.y) + " " + detail::fmt(p.y_lo) + " " + detail::fmt(p.y_hi) + "\n";
  }
  write_text(path, text);
}

// ---------------------------------------------------------------------------
// Single price

inline RunRecord run_price(const RunConfig& c) {
  if (c.threads) worker_threads() = static_cast<unsigned>(c.threads);
  RunRecord r;
  r.method = c.method;
  r.set_id = c.set_id;
  r.steps = c.steps;
  r.richardson_depth = c.richardson;
  r.bridge = c.bridge;
  r.seed = c.seed;
  r.config_hash = c.hash();
  EstimatorOptions opts{c.scheme, c.bridge, c.richardson};
  switch (c.method) {
    case Method::kMonteCarlo:
      r.samples = c.samples;
      r.result = mc_estimate(c.params, c.steps, c.samples, c.seed, opts);
      break;
    case Method::kQuasiMonteCarlo: {
      const std::uint64_t n = c.samples / c.shifts;
      if (n * c.shifts != c.samples || !std::has_single_bit(n) || n < 2) {
        throw ConfigError("samples", "QMC needs samples = shifts * 2^m (got " + std::to_string(c.samples) +
                                         " with " + std::to_string(c.shifts) + " shifts)");
      }
      r.samples = c.samples;
      r.shifts = c.shifts;
      r.result = qmc_estimate(c.params, c.steps, {n, c.shifts}, c.seed, opts);
      break;
    }
    case Method::kSparseGrid: {
      r.tolerance = c.tol;
      AsgqOptions a{c.hierarchy, c.tol, c.stop, c.max_work};
      r.result = asgq_price(c.params, c.steps, a, opts);
      if (!r.result.converged) r.note = "work budget exhausted";
      break;
    }
  }
  attach_reference(r, c.reference_price());
  return r;
}

// ---------------------------------------------------------------------------
// Weak error

struct WeakErrorRow {
  int set_id = 0;
  Scheme scheme = Scheme::kHybrid;
  int richardson_depth = 0;
  std::size_t steps = 0;  // coarsest grid of the combination
  double value = 0.0;
  double stat_error = 0.0;
  double bias = 0.0;           // |reference - value|
  double ci_half_width = 0.0;  // 1.96 * combined standard error
  bool resolved = true;        // false when the CI contains zero bias
};

struct WeakErrorTable {
  std::vector<WeakErrorRow> rows;
  std::optional<double> slope_fit;  // least-squares slope of log bias against log dt
};

/// Least-squares slope of log(y) on log(x) over the positive pairs.
inline std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double den = n * sxx - sx * sx;
  if (den == 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / den;
}

/// Monte Carlo level values C^N for every grid in `grids`, each from an
/// independent stream keyed by N; shared by bias tables at all depths.
inline std::map<std::size_t, LevelEstimate> level_prices(const ModelParams& params, Scheme scheme,
                                                         const std::vector<std::size_t>& grids,
                                                         std::uint64_t samples, std::uint64_t seed) {
  std::map<std::size_t, LevelEstimate> out;
  for (std::size_t n : grids) {
    if (out.count(n)) continue;
    const SmoothedIntegrand f(params, n, scheme, false);
    LevelEstimate lvl = mc_level(f, samples, derive_seed(seed, 0x5eed0000ULL + n));
    lvl.steps = n;
    out.emplace(n, lvl);
  }
  return out;
}

/// Richardson combination of cached level prices on grids N, 2N, ..., 2^d N.
inline EstimateResult combine_cached(const std::map<std::size_t, LevelEstimate>& levels, std::size_t coarse,
                                     int depth) {
  std::vector<LevelEstimate> chosen;
  for (int j = 0; j <= depth; ++j) chosen.push_back(levels.at(detail::level_steps(coarse, j)));
  return detail::combine_levels(std::move(chosen), depth);
}

inline WeakErrorTable run_weak_error(const ModelParams& params, int set_id, double reference,
                                     double reference_stat_error, Scheme scheme,
                                     const std::vector<std::size_t>& steps_list, std::uint64_t samples,
                                     std::uint64_t seed, int richardson_depth) {
  if (!std::isfinite(reference)) throw ConfigError("reference", "weak-error study needs a reference price");
  detail::check_richardson_depth(richardson_depth);
  std::vector<std::size_t> grids;
  for (std::size_t n : steps_list) {
    for (int j = 0; j <= richardson_depth; ++j) grids.push_back(detail::level_steps(n, j));
  }
  const auto levels = level_prices(params, scheme, grids, samples, seed);
  WeakErrorTable table;
  std::vector<double> dts, biases;
  for (std::size_t n : steps_list) {
    const EstimateResult e = combine_cached(levels, n, richardson_depth);
    WeakErrorRow row;
    row.set_id = set_id;
    row.scheme = scheme;
    row.richardson_depth = richardson_depth;
    row.steps = n;
    row.value = e.value;
    row.stat_error = e.stat_error;
    row.bias = std::abs(reference - e.value);
    row.ci_half_width = std::hypot(e.stat_error, reference_stat_error);
    row.resolved = row.bias > row.ci_half_width;
    table.rows.push_back(row);
    dts.push_back(params.maturity / static_cast<double>(n));
    biases.push_back(row.bias);
  }
  table.slope_fit = loglog_slope(dts, biases);
  return table;
}

inline const char* const kWeakErrorHeader = "set_id,scheme,N,bias,ci_half_width,slope_fit";

inline std::string weak_error_csv(const WeakErrorTable& t) {
  std::string text = std::string(kWeakErrorHeader) + "\n";
  for (const auto& r : t.rows) {
    text += std::to_string(r.set_id) + "," + to_string(r.scheme) + "," + std::to_string(r.steps) + "," +
            detail::fmt(r.bias) + "," + detail::fmt(r.ci_half_width) + "," + detail::fmt(t.slope_fit) + "\n";
  }
  return text;
}

inline std::vector<PlotPoint> weak_error_plot(const WeakErrorTable& t) {
  std::vector<PlotPoint> pts;
  for (const auto& r : t.rows) {
    pts.push_back({static_cast<double>(r.steps), r.bias, std::max(0.0, r.bias - r.ci_half_width),
                   r.bias + r.ci_half_width});
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Method comparison

struct CompareResult {
  std::vector<RunRecord> records;
  std::vector<WeakErrorRow> bias_rows;          // step (i): per depth and coarse grid
  std::map<Method, double> time_ratio_to_mc;    // empty when MC did not reach the target
  std::vector<std::string> unreachable;         // methods that missed the target within budget
};

/// Three-step protocol.
///   (i)   MC level prices with `bias_samples` draws give the Richardson bias
///         E_B(N) of every coarse grid N in steps_list, for each method's depth.
///   (ii)  The method runs on the smallest N whose configuration can meet the
///         target: MC/QMC need 2 E_B <= target (statistical error set equal to
///         the bias); ASGQ needs E_B < target and gets tolerance target - E_B.
///   (iii) MC sample counts come from a pilot variance, QMC lattice sizes by
///         doubling n until the replicate error falls below E_B.
/// Only the final run of each method is timed.
inline CompareResult run_compare(const RunConfig& c) {
  if (c.methods.empty()) throw ConfigError("methods", "need at least one method");
  if (c.threads) worker_threads() = static_cast<unsigned>(c.threads);
  const double reference = c.reference_price();
  if (!std::isfinite(reference)) throw ConfigError("set", "comparison needs a tabulated reference price");
  CompareResult out;
  const auto depth_of = [&](Method m) {
    return m == Method::kMonteCarlo ? c.mc_richardson
                                    : m == Method::kQuasiMonteCarlo ? c.qmc_richardson : c.asgq_richardson;
  };
  std::vector<std::size_t> grids;
  for (Method m : c.methods) {
    for (std::size_t n : c.steps_list) {
      for (int j = 0; j <= depth_of(m); ++j) grids.push_back(detail::level_steps(n, j));
    }
  }
  const auto levels = level_prices(c.params, c.scheme, grids, c.bias_samples, c.seed);
  std::map<std::pair<int, std::size_t>, double> bias_abs;
  for (int d = 0; d <= 2; ++d) {
    bool used = false;
    for (Method m : c.methods) used = used || depth_of(m) == d;
    if (!used) continue;
    for (std::size_t n : c.steps_list) {
      const EstimateResult e = combine_cached(levels, n, d);
      WeakErrorRow row;
      row.set_id = c.set_id;
      row.scheme = c.scheme;
      row.richardson_depth = d;
      row.steps = n;
      row.value = e.value;
      row.stat_error = e.stat_error;
      row.bias = std::abs(reference - e.value);
      row.ci_half_width = std::hypot(e.stat_error, c.reference_stat_error());
      row.resolved = row.bias > row.ci_half_width;
      out.bias_rows.push_back(row);
      bias_abs[{d, n}] = row.bias;
    }
  }

  const double target_abs = c.target * reference;
  for (Method m : c.methods) {
    const int depth = depth_of(m);
    std::optional<std::size_t> chosen;
    for (std::size_t n : c.steps_list) {
      const double b = bias_abs.at({depth, n});
      const bool feasible = m == Method::kSparseGrid ? b < target_abs : 2.0 * b <= target_abs;
      if (feasible) {
        chosen = n;
        break;
      }
    }
    RunRecord r;
    r.method = m;
    r.set_id = c.set_id;
    r.richardson_depth = depth;
    r.bridge = c.bridge;
    r.seed = c.seed;
    r.config_hash = c.hash();
    if (!chosen) {
      r.note = "no grid in steps_list has a small enough bias";
      r.result.converged = false;
      out.unreachable.push_back(to_string(m));
      out.records.push_back(r);
      continue;
    }
    const std::size_t n = *chosen;
    const double bias = bias_abs.at({depth, n});
    r.steps = n;
    r.bias_estimate = bias / reference;
    const EstimatorOptions opts{c.scheme, c.bridge, depth};
    if (m == Method::kMonteCarlo) {
      // pilot: standard deviation of the Richardson-combined estimator
      const EstimateResult pilot = mc_estimate(c.params, n, c.pilot_samples, derive_seed(c.seed, 101), opts);
      const double sd = pilot.stat_error / kConfidenceFactor * std::sqrt(static_cast<double>(c.pilot_samples));
      const std::uint64_t samples = balance_samples(bias, sd);
      if (samples > c.max_samples) {
        r.note = "balanced sample count " + std::to_string(samples) + " exceeds max_samples";
        r.result.converged = false;
        out.unreachable.push_back(to_string(m));
        out.records.push_back(r);
        continue;
      }
      r.samples = samples;
      r.result = mc_estimate(c.params, n, samples, derive_seed(c.seed, 102), opts);
    } else if (m == Method::kQuasiMonteCarlo) {
      std::optional<EstimateResult> found;
      for (std::uint64_t pts = 1024; pts * c.shifts <= c.max_samples; pts *= 2) {
        EstimateResult e = qmc_estimate(c.params, n, {pts, c.shifts}, derive_seed(c.seed, 103), opts);
        if (e.stat_error <= bias) {
          r.samples = pts * c.shifts;
          found = std::move(e);
          break;
        }
      }
      if (!found) {
        r.note = "lattice size limit reached before the statistical error met the bias";
        r.result.converged = false;
        out.unreachable.push_back(to_string(m));
        out.records.push_back(r);
        continue;
      }
      r.shifts = c.shifts;
      // the accepted run is repeated once so its wall time excludes the search
      r.result = qmc_estimate(c.params, n, {*r.samples / c.shifts, c.shifts}, derive_seed(c.seed, 103), opts);
    } else {
      const double tol = (target_abs - bias) / reference;
      r.tolerance = tol;
      AsgqOptions a{c.hierarchy, tol, c.stop, c.max_work};
      r.result = asgq_price(c.params, n, a, opts);
      if (!r.result.converged) {
        r.note = "work budget exhausted";
        out.unreachable.push_back(to_string(m));
      }
    }
    attach_reference(r, reference);
    out.records.push_back(r);
  }

  const auto mc = std::find_if(out.records.begin(), out.records.end(), [](const RunRecord& r) {
    return r.method == Method::kMonteCarlo && r.result.converged && r.result.wall_seconds > 0.0;
  });
  if (mc != out.records.end() && out.records.size() > 1) {
    for (const auto& r : out.records) {
      if (r.method != Method::kMonteCarlo && r.result.converged) {
        out.time_ratio_to_mc[r.method] = r.result.wall_seconds / mc->result.wall_seconds;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference check

struct ReferenceCheck {
  int set_id = 0;
  double reference = 0.0;
  double reference_stat_error = 0.0;
  double recomputed = 0.0;
  double recomputed_stat_error = 0.0;
  double combined_standard_error = 0.0;  // sqrt(se_ref^2 + se_new^2), se = stat_error / 1.96
  double z_score = 0.0;
};

inline ReferenceCheck recompute_reference(int set_id, std::size_t steps, std::uint64_t samples,
                                          std::uint64_t seed) {
  const ParameterSet& ps = parameter_set(set_id);
  const EstimateResult e = mc_estimate(ps.params, steps, samples, seed);
  ReferenceCheck r;
  r.set_id = set_id;
  r.reference = ps.reference_price;
  r.reference_stat_error = ps.reference_stat_error;
  r.recomputed = e.value;
  r.recomputed_stat_error = e.stat_error;
  r.combined_standard_error = std::hypot(ps.reference_stat_error, e.stat_error) / kConfidenceFactor;
  r.z_score = (e.value - ps.reference_price) / r.combined_standard_error;
  return r;
}

}  // namespace rbergomi
