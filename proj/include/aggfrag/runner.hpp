// Experiment orchestration: drives one engine per seed on a worker pool,
// samples observables on the configured grid (piecewise-constant hold for
// the event-driven engines), folds the ensemble deterministically in seed
// order, and writes moments.csv / dist_t{T}.csv / events.csv / report.json.
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aggfrag/analytics.hpp"
#include "aggfrag/config.hpp"
#include "aggfrag/csv.hpp"
#include "aggfrag/engine_ar.hpp"
#include "aggfrag/engine_fdsmc.hpp"
#include "aggfrag/errors.hpp"
#include "aggfrag/fd_solver.hpp"
#include "aggfrag/version.hpp"

namespace aggfrag {

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> moments;  // [order index][observation index]
  std::vector<SizeDistribution> snapshots;
  std::vector<EventRecord> notable;  // duplications and extinction
  EngineStats stats;
  double wall_s = 0.0;
  bool extinct = false;
  double extinct_time = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t final_count = 0;
  std::uint32_t final_doublings = 0;
  std::string error;
};

struct FdOutcome {
  std::vector<std::vector<double>> moments;
  std::vector<SizeDistribution> snapshots;
  std::vector<std::pair<double, std::uint64_t>> clamp_rows;  // (time, new clamps)
  std::uint64_t steps = 0;
  std::uint64_t clamp_events = 0;
  double clamped_mass = 0.0;
  double leaked_mass = 0.0;
  double leak_fraction = 0.0;
  bool within_leak_tol = true;
  double wall_s = 0.0;
  std::string error;
};

struct RunResult {
  ExperimentConfig cfg;
  std::vector<SeedOutcome> per_seed;
  FdOutcome fd;
  std::vector<std::vector<double>> mean, se;  // [order][observation]; empty until aggregated
  bool aggregated = false;
  double setup_s = 0.0;
  double simulate_s = 0.0;
  double output_s = 0.0;
  std::vector<std::string> notes;

  bool failed() const {
    if (!fd.error.empty()) return true;
    for (const auto& s : per_seed)
      if (!s.error.empty()) return true;
    return false;
  }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Walk the union of observation and snapshot grids in time order; both are
// sorted, observations first on ties.
template <class Observe, class Snapshot>
void walk_timeline(const ExperimentConfig& cfg, Observe&& obs, Snapshot&& snap) {
  std::size_t oi = 0, si = 0;
  while (oi < cfg.observe.size() || si < cfg.snapshots.size()) {
    const bool take_obs = si >= cfg.snapshots.size() ||
                          (oi < cfg.observe.size() && cfg.observe[oi] <= cfg.snapshots[si]);
    if (take_obs) {
      obs(cfg.observe[oi], oi);
      ++oi;
    } else {
      snap(cfg.snapshots[si], si);
      ++si;
    }
  }
}

template <class Engine>
void drive_engine(Engine& eng, const ExperimentConfig& cfg, SeedOutcome& out) {
  out.moments.assign(cfg.moment_orders.size(), {});
  walk_timeline(
      cfg,
      [&](double t, std::size_t) {
        eng.advance_until(t);
        const SizeDistribution d = eng.store().size_distribution(t);
        for (std::size_t k = 0; k < cfg.moment_orders.size(); ++k)
          out.moments[k].push_back(moment(d, cfg.moment_orders[k]));
      },
      [&](double t, std::size_t) {
        eng.advance_until(t);
        SizeDistribution d = eng.store().size_distribution(t);
        d.method = method_name(cfg.method);
        d.seed = out.seed;
        d.particle_count = eng.store().count();
        d.doublings = eng.store().doublings();
        out.snapshots.push_back(std::move(d));
      });
  out.stats = eng.stats();
  out.extinct = eng.extinct();
  out.final_count = eng.store().count();
  out.final_doublings = eng.store().doublings();
  for (const auto& ev : eng.events()) {
    if (ev.kind == EventKind::Duplication || ev.kind == EventKind::Extinction)
      out.notable.push_back(ev);
    if (ev.kind == EventKind::Extinction) out.extinct_time = ev.time;
  }
}

inline SeedOutcome run_mc_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ParticleStore store(initial_counts(cfg), cfg.bucket_threshold, cfg.n0);
    EngineOptions opts;
    opts.cloning = cfg.cloning;
    opts.max_size_guard = cfg.max_size_guard;
    opts.rebuild_every = cfg.rebuild_every;
    if (cfg.method == Method::Ar) {
      ArEngine eng(cfg.kernel, cfg.lambda, std::move(store), seed, 0, opts);
      drive_engine(eng, cfg, out);
    } else {
      FdsmcEngine eng(cfg.kernel, cfg.lambda, std::move(store), seed, 0, opts);
      drive_engine(eng, cfg, out);
    }
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.wall_s = seconds_since(t0);
  return out;
}

inline FdOutcome run_fd(const ExperimentConfig& cfg) {
  FdOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  FdOptions opt;
  opt.size_cutoff = cfg.size_cutoff;
  opt.dt = cfg.dt;
  opt.spec = cfg.kernel;
  opt.lambda = cfg.lambda;
  opt.initial.assign(cfg.size_cutoff, 0.0);
  for (const auto& [size, density] : cfg.initial) {
    if (size > cfg.size_cutoff)
      throw ConfigError("initial: size " + std::to_string(size) + " exceeds the cutoff S");
    opt.initial[size - 1] = density;
  }
  try {
    FdSolver solver(opt);
    out.moments.assign(cfg.moment_orders.size(), {});
    std::uint64_t clamps_seen = 0;
    auto note_clamps = [&](double t) {
      if (solver.clamp_events() > clamps_seen) {
        out.clamp_rows.emplace_back(t, solver.clamp_events() - clamps_seen);
        clamps_seen = solver.clamp_events();
      }
    };
    walk_timeline(
        cfg,
        [&](double t, std::size_t) {
          solver.advance_until(t);
          note_clamps(t);
          for (std::size_t k = 0; k < cfg.moment_orders.size(); ++k)
            out.moments[k].push_back(solver.moment(cfg.moment_orders[k]));
        },
        [&](double t, std::size_t) {
          solver.advance_until(t);
          note_clamps(t);
          SizeDistribution d = solver.size_distribution();
          d.time = t;
          d.method = "fd";
          out.snapshots.push_back(std::move(d));
        });
    out.steps = solver.steps();
    out.clamp_events = solver.clamp_events();
    out.clamped_mass = solver.clamped_mass();
    out.leaked_mass = solver.leaked_mass();
    out.leak_fraction =
        solver.initial_mass() > 0.0 ? solver.leaked_mass() / solver.initial_mass() : 0.0;
    out.within_leak_tol = std::fabs(out.leak_fraction) <= cfg.leak_tol;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.wall_s = seconds_since(t0);
  return out;
}

}  // namespace detail

// Execute every seed (or the FD solve), then fold the ensemble in seed order.
// Per-seed failures are recorded, not thrown; aggregation is skipped if any
// seed failed. Output writing is a separate step (write_outputs).
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  RunResult res;
  res.cfg = cfg;
  const auto t_setup = std::chrono::steady_clock::now();
  if (cfg.is_mc()) res.per_seed.resize(cfg.seeds.size());
  res.setup_s = detail::seconds_since(t_setup);

  const auto t_sim = std::chrono::steady_clock::now();
  if (cfg.is_mc()) {
    const std::size_t workers =
        std::min<std::size_t>(cfg.workers, cfg.seeds.size());
    if (workers <= 1) {
      for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
        res.per_seed[i] = detail::run_mc_seed(cfg, cfg.seeds[i]);
    } else {
      std::atomic<std::size_t> next{0};
      auto work = [&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cfg.seeds.size()) return;
          res.per_seed[i] = detail::run_mc_seed(cfg, cfg.seeds[i]);
        }
      };
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& th : pool) th.join();
    }
  } else {
    res.fd = detail::run_fd(cfg);
  }
  res.simulate_s = detail::seconds_since(t_sim);

  if (cfg.is_mc() && !res.failed()) {
    const std::size_t orders = cfg.moment_orders.size();
    const std::size_t times = cfg.observe.size();
    const double n = static_cast<double>(res.per_seed.size());
    res.mean.assign(orders, std::vector<double>(times, 0.0));
    res.se.assign(orders, std::vector<double>(times, 0.0));
    for (std::size_t k = 0; k < orders; ++k)
      for (std::size_t t = 0; t < times; ++t) {
        double m = 0.0;
        for (const auto& s : res.per_seed) m += s.moments[k][t];
        m /= n;
        double var = 0.0;
        for (const auto& s : res.per_seed) {
          const double d = s.moments[k][t] - m;
          var += d * d;
        }
        res.mean[k][t] = m;
        res.se[k][t] = n > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
      }
    res.aggregated = true;
  }
  return res;
}

namespace detail {

inline std::string time_label(double t) {
  std::string s = format_double(t);
  for (auto& c : s)
    if (c == '+') c = 'p';
  return s;
}

inline nlohmann::json hash_hex(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace detail

inline void write_outputs(RunResult& res, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  const ExperimentConfig& cfg = res.cfg;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  {
    CsvWriter w(out_dir + "/moments.csv");
    std::vector<std::string> head = {"time"};
    if (cfg.is_mc()) {
      for (const int k : cfg.moment_orders) {
        for (const auto& s : res.per_seed)
          head.push_back("M" + std::to_string(k) + "_s" + std::to_string(s.seed));
        head.push_back("M" + std::to_string(k) + "_mean");
        head.push_back("M" + std::to_string(k) + "_se");
      }
    } else {
      for (const int k : cfg.moment_orders) head.push_back("M" + std::to_string(k));
    }
    w.header(head);
    for (std::size_t t = 0; t < cfg.observe.size(); ++t) {
      std::vector<double> row = {cfg.observe[t]};
      if (cfg.is_mc()) {
        for (std::size_t k = 0; k < cfg.moment_orders.size(); ++k) {
          for (const auto& s : res.per_seed)
            row.push_back(t < s.moments[k].size() ? s.moments[k][t] : nan);
          row.push_back(res.aggregated ? res.mean[k][t] : nan);
          row.push_back(res.aggregated ? res.se[k][t] : nan);
        }
      } else {
        for (std::size_t k = 0; k < cfg.moment_orders.size(); ++k)
          row.push_back(t < res.fd.moments[k].size() ? res.fd.moments[k][t] : nan);
      }
      w.row(row);
    }
    w.close();
  }

  for (std::size_t si = 0; si < cfg.snapshots.size(); ++si) {
    CsvWriter w(out_dir + "/dist_t" + detail::time_label(cfg.snapshots[si]) + ".csv");
    w.header({"source", "size", "concentration"});
    auto emit = [&](const std::string& source, const SizeDistribution& d) {
      for (std::size_t i = 0; i < d.sizes.size(); ++i)
        w.row_strings({source, std::to_string(d.sizes[i]),
                       format_double(d.concentrations[i])});
    };
    if (cfg.is_mc()) {
      for (const auto& s : res.per_seed)
        if (si < s.snapshots.size()) emit(std::to_string(s.seed), s.snapshots[si]);
    } else if (si < res.fd.snapshots.size()) {
      emit("fd", res.fd.snapshots[si]);
    }
    w.close();
  }

  {
    CsvWriter w(out_dir + "/events.csv");
    w.header({"source", "time", "kind", "value"});
    if (cfg.is_mc()) {
      for (const auto& s : res.per_seed)
        for (const auto& ev : s.notable)
          w.row_strings({std::to_string(s.seed), format_double(ev.time),
                         event_kind_name(ev.kind), std::to_string(ev.value)});
    } else {
      for (const auto& [t, count] : res.fd.clamp_rows)
        w.row_strings({"fd", format_double(t), "clamp", std::to_string(count)});
    }
    w.close();
  }

  res.output_s = detail::seconds_since(t0);

  nlohmann::json rep;
  rep["version"] = version_string;
  rep["config"] = nlohmann::json::parse(cfg.canonical);
  rep["config_hash"] = detail::hash_hex(cfg.hash);
  rep["method"] = method_name(cfg.method);
  rep["cloning"] = cfg.is_mc() ? nlohmann::json(cfg.cloning) : nlohmann::json();
  rep["phases"] = {{"setup_s", res.setup_s},
                   {"simulate_s", res.simulate_s},
                   {"output_s", res.output_s}};
  if (cfg.is_mc()) {
    rep["seeds"] = nlohmann::json::array();
    for (const auto& s : res.per_seed) {
      nlohmann::json js = {{"seed", s.seed},
                           {"wall_s", s.wall_s},
                           {"trials", s.stats.trials},
                           {"acceptances", s.stats.acceptances},
                           {"p_acc", s.stats.acceptance_fraction()},
                           {"aggregations", s.stats.aggregations},
                           {"shatterings", s.stats.shatterings},
                           {"duplications", s.stats.duplications},
                           {"extinct", s.extinct},
                           {"final_count", s.final_count},
                           {"final_doublings", s.final_doublings}};
      js["extinct_time"] =
          std::isnan(s.extinct_time) ? nlohmann::json() : nlohmann::json(s.extinct_time);
      if (!s.error.empty()) js["error"] = s.error;
      rep["seeds"].push_back(std::move(js));
    }
    rep["aggregated"] = res.aggregated;
  } else {
    nlohmann::json jf = {{"steps", res.fd.steps},
                         {"clamp_events", res.fd.clamp_events},
                         {"clamped_mass", res.fd.clamped_mass},
                         {"leaked_mass", res.fd.leaked_mass},
                         {"leak_fraction", res.fd.leak_fraction},
                         {"within_leak_tol", res.fd.within_leak_tol},
                         {"wall_s", res.fd.wall_s}};
    if (!res.fd.error.empty()) jf["error"] = res.fd.error;
    rep["fd"] = std::move(jf);
  }
  if (!res.notes.empty()) rep["notes"] = res.notes;

  std::ofstream out(out_dir + "/report.json");
  if (!out) throw ConfigError("cannot open " + out_dir + "/report.json for writing");
  out << rep.dump(2) << '\n';
  out.close();
  if (!out) throw ConfigError("write failed for " + out_dir + "/report.json");
}

// Convenience wrapper used by the CLI: run, write, and surface failures.
inline RunResult run_and_write(const ExperimentConfig& cfg, const std::string& out_dir,
                               std::vector<std::string> notes = {}) {
  RunResult res = run_experiment(cfg);
  res.notes = std::move(notes);
  write_outputs(res, out_dir);
  return res;
}

}  // namespace aggfrag
