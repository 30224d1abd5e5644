// Experiment configuration: JSON in, validated ExperimentConfig out. Unknown
// keys are rejected; diagnostics carry the config line where the offending
// key first appears. The canonical re-serialization (sorted keys) is echoed
// into report.json and hashed for provenance.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aggfrag/errors.hpp"
#include "aggfrag/kernels.hpp"
#include "aggfrag/lambda_schedule.hpp"

namespace aggfrag {

enum class Method { Ar, Fdsmc, Fd };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::Ar: return "ar";
    case Method::Fdsmc: return "fdsmc";
    case Method::Fd: return "fd";
  }
  return "?";
}

struct ExperimentConfig {
  Method method = Method::Ar;
  KernelSpec kernel;
  LambdaSchedule lambda;
  std::vector<std::pair<std::uint64_t, double>> initial;  // (size, density), ascending
  double n0 = 1.0;                                        // sum of initial densities

  std::uint64_t n_particles = 0;   // N0, MC only
  std::uint32_t size_cutoff = 0;   // S, FD only
  double dt = 0.0;                 // FD only
  std::uint64_t bucket_threshold = 1000;
  double t_end = 0.0;
  std::vector<double> observe;
  std::vector<double> snapshots;
  std::vector<int> moment_orders = {0, 1, 2};
  std::vector<std::uint64_t> seeds;  // sorted, unique
  bool cloning = true;
  std::string output = "out";
  std::uint64_t max_size_guard = 1ull << 40;
  std::uint64_t rebuild_every = 1000;
  std::uint32_t workers = 1;
  double leak_tol = 1e-6;

  std::string canonical;   // sorted-key JSON echo of the parsed config
  std::uint64_t hash = 0;  // FNV-1a of `canonical`

  bool is_mc() const { return method != Method::Fd; }
};

namespace detail {

inline std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

// best-effort anchor: first occurrence of the quoted key in the source text
inline std::string anchor(const std::string& text, const std::string& key) {
  const std::string needle = "\"" + key + "\"";
  const std::size_t pos = text.find(needle);
  if (pos == std::string::npos) return "config";
  return "config:" + std::to_string(line_of_byte(text, pos));
}

[[noreturn]] inline void fail(const std::string& text, const std::string& key,
                              const std::string& msg) {
  throw ConfigError(anchor(text, key) + ": " + key + ": " + msg);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void require_keys(const std::string& text, const nlohmann::json& obj,
                         const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      fail(text, key, "unknown key" + (where.empty() ? "" : " in " + where));
}

inline double as_number(const std::string& text, const nlohmann::json& v,
                        const std::string& key) {
  if (!v.is_number()) fail(text, key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(text, key, "must be finite");
  return x;
}

inline std::uint64_t as_uint(const std::string& text, const nlohmann::json& v,
                             const std::string& key) {
  if (!v.is_number_integer() || v.get<double>() < 0)
    fail(text, key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace detail

inline KernelSpec parse_kernel(const std::string& text, const nlohmann::json& v) {
  using detail::fail;
  std::string family;
  double amplitude = 1.0;
  double a = 0.0;
  bool has_a = false;
  if (v.is_string()) {
    family = v.get<std::string>();
  } else if (v.is_object()) {
    detail::require_keys(text, v, {"family", "a", "amplitude"}, "kernel");
    if (!v.contains("family")) fail(text, "kernel", "missing family");
    if (!v["family"].is_string()) fail(text, "family", "expected a string");
    family = v["family"].get<std::string>();
    if (v.contains("amplitude")) amplitude = detail::as_number(text, v["amplitude"], "amplitude");
    if (v.contains("a")) {
      a = detail::as_number(text, v["a"], "a");
      has_a = true;
    }
  } else {
    fail(text, "kernel", "expected a string or an object");
  }
  if (!(amplitude > 0.0)) fail(text, "amplitude", "must be positive");

  KernelSpec spec;
  if (family == "constant") spec = KernelSpec::constant(amplitude);
  else if (family == "sum") spec = KernelSpec::sum(amplitude);
  else if (family == "product") spec = KernelSpec::product(amplitude);
  else if (family == "ballistic") spec = KernelSpec::ballistic(amplitude);
  else if (family == "generalized") {
    if (!has_a) fail(text, "kernel", "generalized kernel needs exponent a");
    spec = KernelSpec::generalized(a, amplitude);
    has_a = false;
  } else {
    fail(text, "family", "unknown kernel family '" + family + "'");
  }
  if (has_a) fail(text, "a", "only the generalized kernel takes an exponent");
  return spec;
}

inline LambdaSchedule parse_lambda(const std::string& text, const nlohmann::json& v) {
  using detail::fail;
  if (v.is_number()) {
    const double lam = detail::as_number(text, v, "lambda");
    if (lam < 0.0) fail(text, "lambda", "must be >= 0");
    return LambdaSchedule(lam);
  }
  if (v.is_array()) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : v) {
      if (!p.is_array() || p.size() != 2) fail(text, "lambda", "breakpoints are [t, value] pairs");
      pts.emplace_back(detail::as_number(text, p[0], "lambda"),
                       detail::as_number(text, p[1], "lambda"));
    }
    try {
      return LambdaSchedule(std::move(pts));
    } catch (const ConfigError& e) {
      fail(text, "lambda", e.what());
    }
  }
  fail(text, "lambda", "expected a number or an array of [t, value] pairs");
}

inline ExperimentConfig parse_config(const std::string& text) {
  using detail::fail;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config:" + std::to_string(detail::line_of_byte(text, e.byte)) +
                      ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  static const std::set<std::string> all_keys = {
      "method", "kernel", "lambda", "initial", "N0", "S", "dt", "B",
      "t_end", "observe", "snapshots", "moments", "seeds", "cloning",
      "output", "max_size_guard", "rebuild_every", "workers", "leak_tol"};
  detail::require_keys(text, j, all_keys, "");

  ExperimentConfig cfg;

  if (!j.contains("method")) fail(text, "method", "required");
  const std::string m = j["method"].is_string() ? j["method"].get<std::string>() : "";
  if (m == "ar") cfg.method = Method::Ar;
  else if (m == "fdsmc") cfg.method = Method::Fdsmc;
  else if (m == "fd") cfg.method = Method::Fd;
  else fail(text, "method", "expected one of ar, fdsmc, fd");

  if (!j.contains("kernel")) fail(text, "kernel", "required");
  cfg.kernel = parse_kernel(text, j["kernel"]);

  if (!j.contains("lambda")) fail(text, "lambda", "required");
  cfg.lambda = parse_lambda(text, j["lambda"]);

  if (!j.contains("t_end")) fail(text, "t_end", "required");
  cfg.t_end = detail::as_number(text, j["t_end"], "t_end");
  if (!(cfg.t_end > 0.0)) fail(text, "t_end", "must be positive");

  if (j.contains("initial")) {
    if (!j["initial"].is_object()) fail(text, "initial", "expected an object of size: density");
    std::map<std::uint64_t, double> dist;
    for (const auto& [key, val] : j["initial"].items()) {
      std::uint64_t size = 0;
      try {
        size = std::stoull(key);
      } catch (...) {
        fail(text, "initial", "size keys must be positive integers, got '" + key + "'");
      }
      if (size == 0) fail(text, "initial", "size keys must be >= 1");
      const double d = detail::as_number(text, val, "initial");
      if (d < 0.0) fail(text, "initial", "densities must be >= 0");
      if (d > 0.0) dist[size] += d;
    }
    if (dist.empty()) fail(text, "initial", "needs at least one positive density");
    cfg.initial.assign(dist.begin(), dist.end());
  } else {
    cfg.initial = {{1, 1.0}};
  }
  cfg.n0 = 0.0;
  for (const auto& [s, d] : cfg.initial) cfg.n0 += d;

  const bool mc = cfg.is_mc();
  if (mc) {
    for (const char* k : {"S", "dt", "leak_tol"})
      if (j.contains(k)) fail(text, k, "only valid when method is fd");
    if (!j.contains("N0")) fail(text, "N0", "required for Monte Carlo methods");
    cfg.n_particles = detail::as_uint(text, j["N0"], "N0");
    if (cfg.n_particles < 2) fail(text, "N0", "must be >= 2");
    if (!j.contains("seeds")) fail(text, "seeds", "required for Monte Carlo methods");
    if (!j["seeds"].is_array() || j["seeds"].empty())
      fail(text, "seeds", "expected a non-empty array");
    for (const auto& s : j["seeds"]) cfg.seeds.push_back(detail::as_uint(text, s, "seeds"));
    std::sort(cfg.seeds.begin(), cfg.seeds.end());
    if (std::adjacent_find(cfg.seeds.begin(), cfg.seeds.end()) != cfg.seeds.end())
      fail(text, "seeds", "duplicate seed values");
    if (j.contains("B")) {
      cfg.bucket_threshold = detail::as_uint(text, j["B"], "B");
      if (cfg.bucket_threshold < 1) fail(text, "B", "must be >= 1");
    }
    if (j.contains("cloning")) {
      if (!j["cloning"].is_boolean()) fail(text, "cloning", "expected a boolean");
      cfg.cloning = j["cloning"].get<bool>();
    }
    if (j.contains("max_size_guard")) {
      cfg.max_size_guard = detail::as_uint(text, j["max_size_guard"], "max_size_guard");
      if (cfg.max_size_guard < 2) fail(text, "max_size_guard", "must be >= 2");
    }
    if (j.contains("rebuild_every")) {
      cfg.rebuild_every = detail::as_uint(text, j["rebuild_every"], "rebuild_every");
      if (cfg.rebuild_every < 1) fail(text, "rebuild_every", "must be >= 1");
    }
  } else {
    for (const char* k : {"N0", "seeds", "B", "cloning", "max_size_guard", "rebuild_every"})
      if (j.contains(k)) fail(text, k, "only valid for Monte Carlo methods");
    if (!j.contains("S")) fail(text, "S", "required for the fd method");
    const std::uint64_t s = detail::as_uint(text, j["S"], "S");
    if (s < 2 || s > (1u << 20)) fail(text, "S", "must be in [2, 2^20]");
    cfg.size_cutoff = static_cast<std::uint32_t>(s);
    if (!j.contains("dt")) fail(text, "dt", "required for the fd method");
    cfg.dt = detail::as_number(text, j["dt"], "dt");
    if (!(cfg.dt > 0.0)) fail(text, "dt", "must be positive");
    if (j.contains("leak_tol")) {
      cfg.leak_tol = detail::as_number(text, j["leak_tol"], "leak_tol");
      if (cfg.leak_tol < 0.0) fail(text, "leak_tol", "must be >= 0");
    }
  }

  if (j.contains("observe")) {
    const auto& o = j["observe"];
    if (o.is_array()) {
      for (const auto& t : o) cfg.observe.push_back(detail::as_number(text, t, "observe"));
    } else if (o.is_object()) {
      detail::require_keys(text, o, {"from", "to", "points"}, "observe");
      const double from = o.contains("from") ? detail::as_number(text, o["from"], "observe") : 0.0;
      const double to = o.contains("to") ? detail::as_number(text, o["to"], "observe") : cfg.t_end;
      if (!o.contains("points")) fail(text, "observe", "grid form needs points");
      const std::uint64_t pts = detail::as_uint(text, o["points"], "observe");
      if (pts < 2 || to <= from) fail(text, "observe", "need points >= 2 and to > from");
      for (std::uint64_t i = 0; i < pts; ++i)
        cfg.observe.push_back(from + (to - from) * static_cast<double>(i) /
                                         static_cast<double>(pts - 1));
    } else {
      fail(text, "observe", "expected an array of times or {from, to, points}");
    }
  } else {
    for (int i = 0; i <= 100; ++i) cfg.observe.push_back(cfg.t_end * i / 100.0);
  }
  for (std::size_t i = 0; i < cfg.observe.size(); ++i) {
    if (cfg.observe[i] < 0.0 || cfg.observe[i] > cfg.t_end * (1.0 + 1e-12))
      fail(text, "observe", "times must lie in [0, t_end]");
    if (i > 0 && cfg.observe[i] <= cfg.observe[i - 1])
      fail(text, "observe", "times must be strictly increasing");
  }

  if (j.contains("snapshots")) {
    if (!j["snapshots"].is_array()) fail(text, "snapshots", "expected an array of times");
    for (const auto& t : j["snapshots"]) {
      const double v = detail::as_number(text, t, "snapshots");
      if (v < 0.0 || v > cfg.t_end * (1.0 + 1e-12))
        fail(text, "snapshots", "times must lie in [0, t_end]");
      cfg.snapshots.push_back(v);
    }
    std::sort(cfg.snapshots.begin(), cfg.snapshots.end());
  }

  if (j.contains("moments")) {
    if (!j["moments"].is_array() || j["moments"].empty())
      fail(text, "moments", "expected a non-empty array of orders");
    cfg.moment_orders.clear();
    for (const auto& k : j["moments"]) {
      const std::uint64_t v = detail::as_uint(text, k, "moments");
      if (v > 8) fail(text, "moments", "orders must be in [0, 8]");
      cfg.moment_orders.push_back(static_cast<int>(v));
    }
    std::sort(cfg.moment_orders.begin(), cfg.moment_orders.end());
    cfg.moment_orders.erase(
        std::unique(cfg.moment_orders.begin(), cfg.moment_orders.end()),
        cfg.moment_orders.end());
  }

  if (j.contains("output")) {
    if (!j["output"].is_string()) fail(text, "output", "expected a string");
    cfg.output = j["output"].get<std::string>();
  }
  if (j.contains("workers")) {
    const std::uint64_t w = detail::as_uint(text, j["workers"], "workers");
    if (w < 1 || w > 256) fail(text, "workers", "must be in [1, 256]");
    cfg.workers = static_cast<std::uint32_t>(w);
  }

  // canonical echo: semantic fields only, keys sorted by nlohmann's object order
  nlohmann::json canon;
  canon["method"] = method_name(cfg.method);
  canon["kernel"] = {{"family", kernel_family_name(cfg.kernel.family)},
                     {"amplitude", cfg.kernel.amplitude}};
  if (cfg.kernel.family == KernelFamily::Generalized) canon["kernel"]["a"] = cfg.kernel.a;
  if (cfg.lambda.constant()) {
    canon["lambda"] = cfg.lambda.breakpoints().front().second;
  } else {
    canon["lambda"] = nlohmann::json::array();
    for (const auto& [t, v] : cfg.lambda.breakpoints())
      canon["lambda"].push_back({t, v});
  }
  canon["initial"] = nlohmann::json::object();
  for (const auto& [s, d] : cfg.initial) canon["initial"][std::to_string(s)] = d;
  canon["t_end"] = cfg.t_end;
  canon["observe"] = cfg.observe;
  canon["snapshots"] = cfg.snapshots;
  canon["moments"] = cfg.moment_orders;
  canon["output"] = cfg.output;
  canon["workers"] = cfg.workers;
  if (mc) {
    canon["N0"] = cfg.n_particles;
    canon["seeds"] = cfg.seeds;
    canon["B"] = cfg.bucket_threshold;
    canon["cloning"] = cfg.cloning;
    canon["max_size_guard"] = cfg.max_size_guard;
    canon["rebuild_every"] = cfg.rebuild_every;
  } else {
    canon["S"] = cfg.size_cutoff;
    canon["dt"] = cfg.dt;
    canon["leak_tol"] = cfg.leak_tol;
  }
  cfg.canonical = canon.dump(2);
  cfg.hash = detail::fnv1a(cfg.canonical);
  return cfg;
}

// Largest-remainder rounding of the density profile onto exactly N0 simulated
// particles. Ties (equal fractional parts) go to the smaller size.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> initial_counts(
    const ExperimentConfig& cfg) {
  const double n0 = cfg.n0;
  const double total = static_cast<double>(cfg.n_particles);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> counts;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < cfg.initial.size(); ++i) {
    const double ideal = total * cfg.initial[i].second / n0;
    const std::uint64_t base = static_cast<std::uint64_t>(ideal);
    counts.emplace_back(cfg.initial[i].first, base);
    assigned += base;
    remainders.emplace_back(ideal - static_cast<double>(base), i);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  AGGFRAG_CHECK(assigned <= cfg.n_particles, "initial_counts: rounding overflow");
  std::uint64_t left = cfg.n_particles - assigned;
  for (std::size_t i = 0; left > 0; i = (i + 1) % remainders.size(), --left)
    ++counts[remainders[i].second].second;
  return counts;
}

}  // namespace aggfrag
