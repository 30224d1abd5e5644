// Canned experiment drivers behind the `repro` subcommand. Each preset bundles
// the published parameter set, runs the engines, and writes CSV/SVG artifacts
// plus a report.json with the choices that the source material leaves open.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aggfrag/analytics.hpp"
#include "aggfrag/csv.hpp"
#include "aggfrag/fd_solver.hpp"
#include "aggfrag/runner.hpp"
#include "aggfrag/svg_plot.hpp"

namespace aggfrag {

// ---------------------------------------------------------------------------
// Adaptive finite-difference driver.
//
// The explicit midpoint rule needs dt * (1+lambda) * R kept small, where R is
// the largest kernel row sum against the current state. For the generalized
// kernel R swings by an order of magnitude within each oscillation cycle, so
// a fixed dt must pay the worst-case price everywhere. The driver instead
// re-sizes dt before every step from the row-sum maximum the previous step
// already computed. Calibration runs that held the budget at 0.37 stayed
// stable over 500 time units while budgets above ~1 blew up in the collapse
// phase of the cycle; the default x_target = 0.35 keeps to the measured-safe
// side, and per-step resizing leaves no room for R to outgrow the step.

// max_k sum_j K(k, j) n_j over the truncated system.
inline double max_rowsum(const KernelSpec& spec, const std::vector<double>& n) {
  const std::size_t s = n.size();
  double best = 0.0;
  if (is_separable(spec.family)) {
    std::vector<double> u(s), v(s);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      const double x = static_cast<double>(i + 1);
      u[i] = kernel_factor_u(spec, x);
      v[i] = kernel_factor_v(spec, x);
      a += u[i] * n[i];
      b += v[i] * n[i];
    }
    for (std::size_t i = 0; i < s; ++i) best = std::max(best, u[i] * b + v[i] * a);
  } else {
    for (std::size_t k = 1; k <= s; ++k) {
      double acc = 0.0;
      for (std::size_t j = 1; j <= s; ++j) acc += evaluate(spec, k, j) * n[j - 1];
      best = std::max(best, acc);
    }
  }
  return best;
}

struct FdAdaptiveOptions {
  KernelSpec spec = KernelSpec::constant(1.0);
  LambdaSchedule lambda{0.0};
  std::vector<double> initial;  // n_k for k = 1..initial.size(); rest zero
  std::uint32_t size_cutoff = 0;
  double t_end = 0.0;
  double record_dt = 0.5;  // sample spacing for the moment traces
  double x_target = 0.35;  // dt * (1+lambda) * max_rowsum budget
  double dt_cap = 0.01;
  double dt_floor = 1e-8;
  std::vector<int> moment_orders = {0, 2};
};

struct FdAdaptiveResult {
  std::vector<double> times;
  std::vector<std::vector<double>> moments;  // [order index][time index]
  std::vector<double> final_concentrations;
  std::uint64_t steps = 0;
  std::uint64_t clamp_events = 0;
  double clamped_mass = 0.0;
  double leaked_mass = 0.0;
  double initial_mass = 0.0;
  double dt_min = 0.0;
  double dt_max = 0.0;
  double wall_s = 0.0;
};

inline FdAdaptiveResult run_fd_adaptive(const FdAdaptiveOptions& o) {
  AGGFRAG_CHECK(o.size_cutoff >= 2, "fd adaptive: size_cutoff must be >= 2");
  AGGFRAG_CHECK(o.t_end > 0.0 && o.record_dt > 0.0, "fd adaptive: bad horizon");
  AGGFRAG_CHECK(o.x_target > 0.0 && o.dt_cap > 0.0, "fd adaptive: bad step bounds");
  AGGFRAG_CHECK(o.initial.size() <= o.size_cutoff,
                "fd adaptive: initial distribution is longer than the size cutoff");
  const auto wall0 = std::chrono::steady_clock::now();

  FdOptions fo;
  fo.size_cutoff = o.size_cutoff;
  fo.dt = o.dt_cap;
  fo.spec = o.spec;
  fo.lambda = o.lambda;
  fo.initial = o.initial;
  FdSolver solver(fo);

  FdAdaptiveResult r;
  r.initial_mass = solver.initial_mass();
  r.moments.resize(o.moment_orders.size());
  auto record = [&] {
    r.times.push_back(solver.time());
    for (std::size_t oi = 0; oi < o.moment_orders.size(); ++oi)
      r.moments[oi].push_back(solver.moment(o.moment_orders[oi]));
  };
  record();

  double rs = max_rowsum(o.spec, solver.concentrations());
  r.dt_min = o.dt_cap;
  const auto samples =
      static_cast<std::uint64_t>(std::ceil(o.t_end / o.record_dt - 1e-9));
  for (std::uint64_t i = 1; i <= samples; ++i) {
    const double target = std::min(o.t_end, static_cast<double>(i) * o.record_dt);
    while (solver.time() < target - 1e-9) {
      double dt = o.dt_cap;
      if (rs > 0.0)
        dt = std::min(dt, o.x_target / ((1.0 + o.lambda(solver.time())) * rs));
      dt = std::max(dt, o.dt_floor);
      solver.set_dt(dt);
      solver.step();
      rs = solver.last_max_rowsum();
      r.dt_min = std::min(r.dt_min, dt);
      r.dt_max = std::max(r.dt_max, dt);
    }
    record();
  }
  r.steps = solver.steps();
  r.clamp_events = solver.clamp_events();
  r.clamped_mass = solver.clamped_mass();
  r.leaked_mass = solver.leaked_mass();
  r.final_concentrations = solver.concentrations();
  r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0)
                 .count();
  return r;
}

// ---------------------------------------------------------------------------
// Canned reproductions behind `repro <name>`. Each bundles one published
// parameter set, writes per-run artifacts into subdirectories of out_dir and
// a top-level CSV/SVG plus report.json. `scale` divides particle counts, seed
// lists and fd grids so the full set stays runnable on small machines.

struct ReproOutcome {
  bool ok = false;
  std::string summary;
  std::vector<std::string> artifacts;
};

namespace preset_detail {

using nlohmann::json;

inline std::uint64_t scaled_count(std::uint64_t v, std::uint64_t scale,
                                  std::uint64_t lo) {
  if (scale <= 1) return v;
  return std::max<std::uint64_t>(lo, v / scale);
}

inline json seed_array(std::uint64_t count) {
  auto a = json::array();
  for (std::uint64_t s = 1; s <= count; ++s) a.push_back(s);
  return a;
}

inline json poly_initial(std::uint64_t max_size, double density) {
  json j = json::object();
  for (std::uint64_t k = 1; k <= max_size; ++k) j[std::to_string(k)] = density;
  return j;
}

inline json grid(double from, double to, std::uint64_t points) {
  return json{{"from", from}, {"to", to}, {"points", points}};
}

inline RunResult run_into(const json& cfg_json, const std::string& dir,
                          std::vector<std::string> notes = {}) {
  auto cfg = parse_config(cfg_json.dump());
  return run_and_write(cfg, dir, std::move(notes));
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  AGGFRAG_CHECK(static_cast<bool>(f), "cannot open " + path + " for writing");
  f << j.dump(2) << "\n";
}

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  sd = std::sqrt(var / static_cast<double>(xs.size() - 1));
}

inline json metrics_json(const OscillationMetrics& m) {
  return json{{"classification", oscillation_class_name(m.classification)},
              {"mean_period", m.mean_period},
              {"mean_amplitude", m.mean_amplitude},
              {"amplitude_trend_ratio", m.amplitude_trend_ratio},
              {"noise_floor", m.noise_floor},
              {"peaks", m.peak_times.size()}};
}

inline json adaptive_json(const FdAdaptiveResult& r) {
  return json{{"steps", r.steps},
              {"dt_min", r.dt_min},
              {"dt_max", r.dt_max},
              {"clamp_events", r.clamp_events},
              {"leaked_mass", r.leaked_mass},
              {"leak_fraction",
               r.initial_mass > 0.0 ? r.leaked_mass / r.initial_mass : 0.0},
              {"wall_s", r.wall_s}};
}

// time,M... trace of an adaptive fd run
inline void write_trace_csv(const std::string& path, const FdAdaptiveResult& r,
                            const std::vector<int>& orders) {
  CsvWriter w(path);
  std::vector<std::string> head = {"time"};
  for (int k : orders) head.push_back("M" + std::to_string(k));
  w.header(head);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    std::vector<double> row = {r.times[i]};
    for (std::size_t oi = 0; oi < orders.size(); ++oi)
      row.push_back(r.moments[oi][i]);
    w.row(row);
  }
}

}  // namespace preset_detail

// Constant kernel, lambda = 0.1, monodisperse start: Euclidean error of each
// engine's size distribution against a finite-difference reference on a
// (N0, t) grid, plus per-horizon convergence slopes.
inline ReproOutcome repro_table1(const std::string& out_dir, std::uint64_t scale) {
  using preset_detail::json;
  const auto wall0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  ReproOutcome out;

  const std::vector<double> tgrid = {1.0, 10.0, 100.0};
  std::vector<std::uint64_t> n_grid = {1000, 10000, 100000, 1000000};
  for (auto& n : n_grid) n = preset_detail::scaled_count(n, scale, 2);
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
  const auto n_seeds = preset_detail::scaled_count(5, scale, 1);
  const auto s_fd = preset_detail::scaled_count(2048, scale, 256);

  json times = json::array();
  for (double t : tgrid) times.push_back(t);

  const json fd_cfg = {{"method", "fd"},    {"kernel", "constant"},
                       {"lambda", 0.1},     {"S", s_fd},
                       {"dt", 0.01},        {"t_end", 100.0},
                       {"observe", times},  {"snapshots", times},
                       {"moments", {0, 1, 2}}};
  auto fd_res = preset_detail::run_into(fd_cfg, out_dir + "/fd");
  if (!fd_res.fd.error.empty()) {
    out.summary = "table1: fd reference failed: " + fd_res.fd.error;
    return out;
  }

  CsvWriter w(out_dir + "/table1.csv");
  w.header({"method", "N0", "t", "err_mean", "err_se", "seeds"});
  bool ok = true;
  json slopes = json::object();
  std::string headline;
  for (const char* method : {"ar", "fdsmc"}) {
    std::vector<std::vector<std::pair<double, double>>> pts(tgrid.size());
    for (auto n0 : n_grid) {
      const json cfg = {{"method", method},   {"kernel", "constant"},
                        {"lambda", 0.1},      {"N0", n0},
                        {"t_end", 100.0},     {"observe", times},
                        {"snapshots", times}, {"moments", {0, 1, 2}},
                        {"seeds", preset_detail::seed_array(n_seeds)}};
      auto res = preset_detail::run_into(
          cfg, out_dir + "/" + method + "_n" + std::to_string(n0));
      ok = ok && !res.failed();
      for (std::size_t ti = 0; ti < tgrid.size(); ++ti) {
        std::vector<double> errs;
        for (const auto& s : res.per_seed)
          if (s.error.empty())
            errs.push_back(
                euclidean_error(s.snapshots[ti], fd_res.fd.snapshots[ti]));
        double mean = 0.0, sd = 0.0;
        preset_detail::mean_std(errs, mean, sd);
        const double se =
            errs.size() > 1 ? sd / std::sqrt(static_cast<double>(errs.size()))
                            : 0.0;
        w.row_strings({method, std::to_string(n0), format_double(tgrid[ti]),
                       format_double(mean), format_double(se),
                       std::to_string(errs.size())});
        pts[ti].emplace_back(static_cast<double>(n0), mean);
        if (n0 == n_grid.back() && ti == 0)
          headline += std::string(headline.empty() ? "" : ", ") + method + "=" +
                      format_double(mean);
      }
    }
    for (std::size_t ti = 0; ti < tgrid.size(); ++ti) {
      try {
        slopes[std::string(method) + "_t" + format_double(tgrid[ti])] =
            convergence_slope(pts[ti]);
      } catch (const std::domain_error&) {
        // scaled-down grids can be too narrow for a slope; skip the entry
      }
    }
  }

  preset_detail::write_json(
      out_dir + "/report.json",
      json{{"preset", "table1"},
           {"version", version_string},
           {"scale", scale},
           {"parameters",
            {{"kernel", "constant"},
             {"lambda", 0.1},
             {"N0_grid", n_grid},
             {"seeds_per_cell", n_seeds},
             {"t_grid", tgrid},
             {"fd_reference", {{"S", s_fd}, {"dt", 0.01}}}}},
           {"convergence_slopes", slopes},
           {"wall_s", detail::seconds_since(wall0)}});
  out.artifacts = {out_dir + "/table1.csv", out_dir + "/report.json"};
  out.ok = ok;
  out.summary = "table1: Euclidean error at (N0=" +
                std::to_string(n_grid.back()) + ", t=1): " + headline;
  return out;
}

// Ballistic kernel, lambda = 0.01: relative errors of M0/M2/M3 for both
// engines against an fd baseline (S=5000, dt=1e-3), plus coarser fd runs
// (dt=0.05, dt=0.005) against the same baseline.
inline ReproOutcome repro_table2(const std::string& out_dir, std::uint64_t scale) {
  using preset_detail::json;
  const auto wall0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  ReproOutcome out;

  const std::vector<double> tgrid = {1.0, 10.0, 100.0};
  const std::vector<int> morders = {0, 2, 3};
  std::vector<std::uint64_t> n_grid = {1000, 10000, 100000, 1000000};
  for (auto& n : n_grid) n = preset_detail::scaled_count(n, scale, 2);
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
  const auto n_seeds = preset_detail::scaled_count(5, scale, 1);
  const auto s_fd = preset_detail::scaled_count(5000, scale, 500);

  json times = json::array();
  for (double t : tgrid) times.push_back(t);
  json base_cfg = {{"method", "fd"},   {"kernel", "ballistic"},
                   {"lambda", 0.01},   {"S", s_fd},
                   {"dt", 0.001},      {"t_end", 100.0},
                   {"observe", times}, {"moments", morders},
                   {"leak_tol", 0.05}};
  auto base = preset_detail::run_into(base_cfg, out_dir + "/fd_base");
  if (!base.fd.error.empty()) {
    out.summary = "table2: fd baseline failed: " + base.fd.error;
    return out;
  }

  CsvWriter w(out_dir + "/table2.csv");
  w.header({"method", "param", "t", "moment", "rel_err_mean", "rel_err_std"});
  bool ok = true;
  std::string headline;

  for (const char* method : {"ar", "fdsmc"}) {
    for (auto n0 : n_grid) {
      const json cfg = {{"method", method}, {"kernel", "ballistic"},
                        {"lambda", 0.01},   {"N0", n0},
                        {"t_end", 100.0},   {"observe", times},
                        {"moments", morders},
                        {"seeds", preset_detail::seed_array(n_seeds)}};
      auto res = preset_detail::run_into(
          cfg, out_dir + "/" + method + "_n" + std::to_string(n0));
      ok = ok && !res.failed();
      for (std::size_t ti = 0; ti < tgrid.size(); ++ti)
        for (std::size_t mi = 0; mi < morders.size(); ++mi) {
          const double ref = base.fd.moments[mi][ti];
          std::vector<double> errs;
          for (const auto& s : res.per_seed)
            if (s.error.empty() && ref != 0.0)
              errs.push_back(std::abs(s.moments[mi][ti] - ref) / std::abs(ref));
          double mean = 0.0, sd = 0.0;
          preset_detail::mean_std(errs, mean, sd);
          w.row_strings({method, "N0=" + std::to_string(n0),
                         format_double(tgrid[ti]),
                         "M" + std::to_string(morders[mi]),
                         format_double(mean), format_double(sd)});
          if (std::string(method) == "ar" && n0 == n_grid.back() && ti == 1 &&
              morders[mi] == 2)
            headline = format_double(100.0 * mean) + "%";
        }
    }
  }

  for (double dt : {0.05, 0.005}) {
    json cfg = base_cfg;
    cfg["dt"] = dt;
    auto res =
        preset_detail::run_into(cfg, out_dir + "/fd_dt" + format_double(dt));
    ok = ok && !res.failed();
    for (std::size_t ti = 0; ti < tgrid.size(); ++ti)
      for (std::size_t mi = 0; mi < morders.size(); ++mi) {
        const double ref = base.fd.moments[mi][ti];
        const double err =
            ref != 0.0 ? std::abs(res.fd.moments[mi][ti] - ref) / std::abs(ref)
                       : 0.0;
        w.row_strings({"fd", "dt=" + format_double(dt), format_double(tgrid[ti]),
                       "M" + std::to_string(morders[mi]), format_double(err),
                       "0"});
      }
  }

  preset_detail::write_json(
      out_dir + "/report.json",
      json{{"preset", "table2"},
           {"version", version_string},
           {"scale", scale},
           {"parameters",
            {{"kernel", "ballistic"},
             {"lambda", 0.01},
             {"N0_grid", n_grid},
             {"seeds_per_cell", n_seeds},
             {"t_grid", tgrid},
             {"moments", morders},
             {"fd_baseline", {{"S", s_fd}, {"dt", 0.001}}}}},
           {"baseline_leak_fraction", base.fd.leak_fraction},
           {"baseline_within_leak_tol", base.fd.within_leak_tol},
           {"wall_s", detail::seconds_since(wall0)}});
  out.artifacts = {out_dir + "/table2.csv", out_dir + "/report.json"};
  out.ok = ok;
  out.summary =
      "table2: M2 error, A-R at (N0=" + std::to_string(n_grid.back()) +
      ", t=10): " + (headline.empty() ? "n/a" : headline);
  return out;
}

// Ballistic kernel, lambda = 0.01, N0 = 1e5: size distribution snapshot at
// t=10 from both engines over an fd line (S=5000, dt=1e-3), log-log.
inline ReproOutcome repro_fig1(const std::string& out_dir, std::uint64_t scale) {
  using preset_detail::json;
  const auto wall0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  ReproOutcome out;

  const auto n0 = preset_detail::scaled_count(100000, scale, 2);
  const auto s_fd = preset_detail::scaled_count(5000, scale, 500);
  const json obs = {0.0, 10.0};
  const json snaps = {10.0};

  const json fd_cfg = {{"method", "fd"},  {"kernel", "ballistic"},
                       {"lambda", 0.01},  {"S", s_fd},
                       {"dt", 0.001},     {"t_end", 10.0},
                       {"observe", obs},  {"snapshots", snaps},
                       {"moments", {0, 1, 2}}};
  auto fd_res = preset_detail::run_into(fd_cfg, out_dir + "/fd");
  if (!fd_res.fd.error.empty()) {
    out.summary = "fig1: fd run failed: " + fd_res.fd.error;
    return out;
  }

  std::vector<PlotSeries> series;
  {
    PlotSeries s;
    s.label = "fd S=" + std::to_string(s_fd);
    const auto& d = fd_res.fd.snapshots[0];
    for (std::size_t i = 0; i < d.sizes.size(); ++i) {
      s.x.push_back(static_cast<double>(d.sizes[i]));
      s.y.push_back(d.concentrations[i]);
    }
    series.push_back(std::move(s));
  }

  bool ok = true;
  CsvWriter w(out_dir + "/fig1.csv");
  w.header({"source", "size", "concentration"});
  {
    const auto& d = fd_res.fd.snapshots[0];
    for (std::size_t i = 0; i < d.sizes.size(); ++i)
      w.row_strings({"fd", std::to_string(d.sizes[i]),
                     format_double(d.concentrations[i])});
  }
  for (const char* method : {"ar", "fdsmc"}) {
    const json cfg = {{"method", method}, {"kernel", "ballistic"},
                      {"lambda", 0.01},   {"N0", n0},
                      {"t_end", 10.0},    {"observe", obs},
                      {"snapshots", snaps}, {"moments", {0, 1, 2}},
                      {"seeds", {1}}};
    auto res = preset_detail::run_into(cfg, out_dir + "/" + method);
    ok = ok && !res.failed();
    if (res.per_seed.empty() || !res.per_seed[0].error.empty()) continue;
    PlotSeries s;
    s.label = std::string(method) + " N0=" + std::to_string(n0);
    const auto& d = res.per_seed[0].snapshots[0];
    for (std::size_t i = 0; i < d.sizes.size(); ++i) {
      s.x.push_back(static_cast<double>(d.sizes[i]));
      s.y.push_back(d.concentrations[i]);
      w.row_strings({method, std::to_string(d.sizes[i]),
                     format_double(d.concentrations[i])});
    }
    series.push_back(std::move(s));
  }

  PlotOptions po;
  po.title = "size distribution at t=10, ballistic kernel, lambda=0.01";
  po.xlabel = "size k";
  po.ylabel = "n_k";
  po.logx = true;
  po.logy = true;
  write_line_plot(out_dir + "/fig1.svg", series, po);

  preset_detail::write_json(
      out_dir + "/report.json",
      json{{"preset", "fig1"},
           {"version", version_string},
           {"scale", scale},
           {"parameters",
            {{"kernel", "ballistic"},
             {"lambda", 0.01},
             {"N0", n0},
             {"snapshot_t", 10.0},
             {"fd", {{"S", s_fd}, {"dt", 0.001}}}}},
           {"fd_leak_fraction", fd_res.fd.leak_fraction},
           {"wall_s", detail::seconds_since(wall0)}});
  out.artifacts = {out_dir + "/fig1.svg", out_dir + "/fig1.csv",
                   out_dir + "/report.json"};
  out.ok = ok;
  out.summary = "fig1: wrote t=10 snapshot overlay (" +
                std::to_string(series.size()) + " series)";
  return out;
}

// Generalized kernel M2(t) oscillations, monodisperse start: panel a uses
// a=0.95, lambda=0.01; panel b a=0.98, lambda=0.005. Monte Carlo dots come
// from one fdsmc run, the line from the adaptive fd driver. The sources do
// not fix N0 or the horizon; defaults below are N0=1e5 (the fig1 value) and
// a horizon covering >= 10 measured fd periods, both echoed in report.json.
inline ReproOutcome repro_fig2(const std::string& out_dir, std::uint64_t scale) {
  using preset_detail::json;
  const auto wall0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  ReproOutcome out;
  out.ok = true;

  struct Panel {
    const char* name;
    double a, lam, t_end;
  };
  const Panel panels[] = {{"a", 0.95, 0.01, 460.0}, {"b", 0.98, 0.005, 850.0}};
  const auto n0 = preset_detail::scaled_count(100000, scale, 1000);
  const auto s_fd = preset_detail::scaled_count(8192, scale, 512);

  json rep = {{"preset", "fig2"},
              {"version", version_string},
              {"scale", scale},
              {"defaults",
               {{"N0", n0},
                {"horizon_rule", "covers >= 10 measured fd oscillation periods"}}}};
  std::string headline;

  for (const auto& p : panels) {
    FdAdaptiveOptions fo;
    fo.spec = KernelSpec::generalized(p.a, 1.0);
    fo.lambda = LambdaSchedule(p.lam);
    fo.initial = {1.0};
    fo.size_cutoff = static_cast<std::uint32_t>(s_fd);
    fo.t_end = p.t_end;
    FdAdaptiveResult fd;
    try {
      fd = run_fd_adaptive(fo);
    } catch (const NumericsError& e) {
      out.ok = false;
      rep[std::string("panel_") + p.name] = json{{"error", e.what()}};
      continue;
    }
    const std::string fd_csv =
        out_dir + "/fig2" + p.name + "_fd.csv";
    preset_detail::write_trace_csv(fd_csv, fd, fo.moment_orders);
    const auto met = oscillation_metrics(fd.times, fd.moments[1]);

    const json cfg = {{"method", "fdsmc"},
                      {"kernel", {{"family", "generalized"}, {"a", p.a}}},
                      {"lambda", p.lam},
                      {"N0", n0},
                      {"t_end", p.t_end},
                      {"observe", preset_detail::grid(
                                      0.0, p.t_end,
                                      static_cast<std::uint64_t>(p.t_end) * 2 + 1)},
                      {"moments", {0, 1, 2}},
                      {"seeds", {1}}};
    auto mc = preset_detail::run_into(
        cfg, out_dir + std::string("/fdsmc_") + p.name);
    out.ok = out.ok && !mc.failed();

    std::vector<PlotSeries> series;
    {
      PlotSeries s;
      s.label = "fd S=" + std::to_string(s_fd);
      s.x = fd.times;
      s.y = fd.moments[1];
      series.push_back(std::move(s));
    }
    json mc_met = nullptr;
    if (!mc.per_seed.empty() && mc.per_seed[0].error.empty()) {
      PlotSeries s;
      s.label = "fdsmc N0=" + std::to_string(n0);
      s.x = mc.cfg.observe;
      s.y = mc.per_seed[0].moments[2];
      mc_met = preset_detail::metrics_json(
          oscillation_metrics(s.x, s.y));
      series.push_back(std::move(s));
    }
    PlotOptions po;
    po.title = std::string("M2(t), a=") + format_double(p.a) +
               ", lambda=" + format_double(p.lam);
    po.xlabel = "t";
    po.ylabel = "M2";
    const std::string svg = out_dir + "/fig2" + p.name + ".svg";
    write_line_plot(svg, series, po);

    rep[std::string("panel_") + p.name] =
        json{{"a", p.a},
             {"lambda", p.lam},
             {"t_end", p.t_end},
             {"S", s_fd},
             {"fd_periods_covered",
              met.mean_period > 0.0 ? p.t_end / met.mean_period : 0.0},
             {"fd_metrics", preset_detail::metrics_json(met)},
             {"mc_metrics", mc_met},
             {"fd_run", preset_detail::adaptive_json(fd)}};
    out.artifacts.push_back(svg);
    out.artifacts.push_back(fd_csv);
    headline += std::string(headline.empty() ? "" : ", ") + p.name + "=" +
                oscillation_class_name(met.classification);
  }

  rep["wall_s"] = detail::seconds_since(wall0);
  preset_detail::write_json(out_dir + "/report.json", rep);
  out.artifacts.push_back(out_dir + "/report.json");
  out.summary = "fig2: fd classification " + headline;
  return out;
}

// Extinction-prone regime: a=0.95, lambda=0.005, polydisperse start
// n_k = 0.1 for k <= 10. M2(t) traces for two system sizes next to the
// fd line; extinction/collapse flags land in the report.
inline ReproOutcome repro_fig3a(const std::string& out_dir, std::uint64_t scale) {
  using preset_detail::json;
  const auto wall0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  ReproOutcome out;
  out.ok = true;

  const double t_end = 500.0;
  const double a = 0.95, lam = 0.005;
  std::vector<std::uint64_t> n_list = {
      preset_detail::scaled_count(10000, scale, 100),
      preset_detail::scaled_count(100000, scale, 100)};
  n_list.erase(std::unique(n_list.begin(), n_list.end()), n_list.end());
  const auto s_fd = preset_detail::scaled_count(4096, scale, 512);

  FdAdaptiveOptions fo;
  fo.spec = KernelSpec::generalized(a, 1.0);
  fo.lambda = LambdaSchedule(lam);
  fo.initial.assign(10, 0.1);
  fo.size_cutoff = static_cast<std::uint32_t>(s_fd);
  fo.t_end = t_end;
  json rep = {{"preset", "fig3a"},
              {"version", version_string},
              {"scale", scale},
              {"parameters",
               {{"a", a},
                {"lambda", lam},
                {"initial", "n_k=0.1 for k<=10"},
                {"t_end", t_end},
                {"cloning", true},
                {"S", s_fd}}}};

  std::vector<PlotSeries> series;
  try {
    const auto fd = run_fd_adaptive(fo);
    preset_detail::write_trace_csv(out_dir + "/fig3a_fd.csv", fd,
                                   fo.moment_orders);
    PlotSeries s;
    s.label = "fd S=" + std::to_string(s_fd);
    s.x = fd.times;
    s.y = fd.moments[1];
    series.push_back(std::move(s));
    rep["fd_run"] = preset_detail::adaptive_json(fd);
    out.artifacts.push_back(out_dir + "/fig3a_fd.csv");
  } catch (const NumericsError& e) {
    out.ok = false;
    rep["fd_run"] = json{{"error", e.what()}};
  }

  json mc_rep = json::array();
  for (auto n0 : n_list) {
    const json cfg = {
        {"method", "fdsmc"},
        {"kernel", {{"family", "generalized"}, {"a", a}}},
        {"lambda", lam},
        {"N0", n0},
        {"t_end", t_end},
        {"observe",
         preset_detail::grid(0.0, t_end,
                             static_cast<std::uint64_t>(t_end) * 2 + 1)},
        {"moments", {0, 1, 2}},
        {"initial", preset_detail::poly_initial(10, 0.1)},
        {"seeds", {1}}};
    auto res = preset_detail::run_into(
        cfg, out_dir + "/fdsmc_n" + std::to_string(n0));
    out.ok = out.ok && !res.failed();
    if (res.per_seed.empty() || !res.per_seed[0].error.empty()) continue;
    const auto& seed = res.per_seed[0];
    PlotSeries s;
    s.label = "fdsmc N0=" + std::to_string(n0);
    s.x = res.cfg.observe;
    s.y = seed.moments[2];
    series.push_back(std::move(s));
    mc_rep.push_back(json{{"N0", n0},
                          {"extinct", seed.extinct},
                          {"final_count", seed.final_count},
                          {"doublings", seed.final_doublings}});
  }
  rep["mc_runs"] = mc_rep;

  PlotOptions po;
  po.title = "M2(t), a=0.95, lambda=0.005, polydisperse start";
  po.xlabel = "t";
  po.ylabel = "M2";
  write_line_plot(out_dir + "/fig3a.svg", series, po);
  rep["wall_s"] = detail::seconds_since(wall0);
  preset_detail::write_json(out_dir + "/report.json", rep);
  out.artifacts.push_back(out_dir + "/fig3a.svg");
  out.artifacts.push_back(out_dir + "/report.json");
  out.summary =
      "fig3a: " + std::to_string(series.size()) + " M2 traces over [0," +
      format_double(t_end) + "]";
  return out;
}

// Time-dependent shattering: a=0.9 with lambda(t) = 0.01*(1 - t/400) on
// [0, 200], held at 0.005 after, polydisperse start. The fd trace first damps
// and then switches to steady oscillations; the report carries the
// classification of the full trace and of the t >= 250 tail.
inline ReproOutcome repro_fig3b(const std::string& out_dir, std::uint64_t scale) {
  using preset_detail::json;
  const auto wall0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  ReproOutcome out;

  const double t_end = 800.0, tail_from = 250.0;
  const auto s_fd = preset_detail::scaled_count(4096, scale, 512);
  FdAdaptiveOptions fo;
  fo.spec = KernelSpec::generalized(0.9, 1.0);
  fo.lambda = LambdaSchedule({{0.0, 0.01}, {200.0, 0.005}});
  fo.initial.assign(10, 0.1);
  fo.size_cutoff = static_cast<std::uint32_t>(s_fd);
  fo.t_end = t_end;

  FdAdaptiveResult fd;
  try {
    fd = run_fd_adaptive(fo);
  } catch (const NumericsError& e) {
    out.summary = std::string("fig3b: fd run failed: ") + e.what();
    return out;
  }
  preset_detail::write_trace_csv(out_dir + "/fig3b.csv", fd, fo.moment_orders);

  std::vector<double> tt, tv;
  for (std::size_t i = 0; i < fd.times.size(); ++i)
    if (fd.times[i] >= tail_from) {
      tt.push_back(fd.times[i]);
      tv.push_back(fd.moments[1][i]);
    }
  const auto full = oscillation_metrics(fd.times, fd.moments[1]);
  const auto tail = oscillation_metrics(tt, tv);

  std::vector<PlotSeries> series(1);
  series[0].label = "fd S=" + std::to_string(s_fd);
  series[0].x = fd.times;
  series[0].y = fd.moments[1];
  PlotOptions po;
  po.title = "M2(t), a=0.9, lambda ramping 0.01 -> 0.005 over [0,200]";
  po.xlabel = "t";
  po.ylabel = "M2";
  write_line_plot(out_dir + "/fig3b.svg", series, po);

  preset_detail::write_json(
      out_dir + "/report.json",
      json{{"preset", "fig3b"},
           {"version", version_string},
           {"scale", scale},
           {"parameters",
            {{"a", 0.9},
             {"lambda_breakpoints", {{0.0, 0.01}, {200.0, 0.005}}},
             {"initial", "n_k=0.1 for k<=10"},
             {"t_end", t_end},
             {"S", s_fd}}},
           {"full_trace", preset_detail::metrics_json(full)},
           {"tail_from", tail_from},
           {"tail", preset_detail::metrics_json(tail)},
           {"fd_run", preset_detail::adaptive_json(fd)},
           {"wall_s", detail::seconds_since(wall0)}});
  out.artifacts = {out_dir + "/fig3b.svg", out_dir + "/fig3b.csv",
                   out_dir + "/report.json"};
  out.ok = true;
  out.summary = std::string("fig3b: tail classified ") +
                oscillation_class_name(tail.classification) + " (period " +
                format_double(tail.mean_period) + ")";
  return out;
}

}  // namespace aggfrag
