// Command-line front end: config-driven runs, canned reproductions of the
// published tables/figures, and a CSV line plotter.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aggfrag/presets.hpp"
#include "aggfrag/runner.hpp"
#include "aggfrag/version.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw aggfrag::ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --scale k divides the work: N0 and the seed list for Monte Carlo methods,
// S for the finite-difference method. Applied to the JSON before parsing so
// the canonical echo and hash describe what actually ran.
std::string apply_scale(const std::string& text, std::uint64_t scale) {
  if (scale <= 1) return text;
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.contains("N0") && j["N0"].is_number_integer()) {
    const auto n0 = j["N0"].get<std::uint64_t>();
    j["N0"] = std::max<std::uint64_t>(2, n0 / scale);
  }
  if (j.contains("S") && j["S"].is_number_integer()) {
    const auto s = j["S"].get<std::uint64_t>();
    j["S"] = std::max<std::uint64_t>(4, s / scale);
  }
  if (j.contains("seeds") && j["seeds"].is_array()) {
    const std::size_t keep =
        std::max<std::size_t>(1, j["seeds"].size() / static_cast<std::size_t>(scale));
    nlohmann::json trimmed = nlohmann::json::array();
    for (std::size_t i = 0; i < keep; ++i) trimmed.push_back(j["seeds"][i]);
    j["seeds"] = std::move(trimmed);
  }
  return j.dump();
}

int do_run(const std::string& config_path, std::uint64_t scale,
           const std::string& out_override, unsigned workers_override) {
  auto cfg = aggfrag::parse_config(apply_scale(slurp(config_path), scale));
  if (!out_override.empty()) cfg.output = out_override;
  if (workers_override > 0) cfg.workers = workers_override;

  std::vector<std::string> notes;
  if (scale > 1) notes.push_back("scaled down by --scale " + std::to_string(scale));
  const auto res = aggfrag::run_and_write(cfg, cfg.output, notes);

  if (cfg.is_mc()) {
    for (const auto& s : res.per_seed) {
      if (!s.error.empty()) {
        std::fprintf(stderr, "seed %llu failed: %s\n",
                     static_cast<unsigned long long>(s.seed), s.error.c_str());
      } else {
        std::printf("seed %llu: %llu events%s in %.2fs\n",
                    static_cast<unsigned long long>(s.seed),
                    static_cast<unsigned long long>(s.stats.acceptances),
                    s.extinct ? ", extinct" : "", s.wall_s);
      }
    }
  } else if (res.fd.error.empty()) {
    std::printf("fd: %llu steps, leak fraction %.3g%s in %.2fs\n",
                static_cast<unsigned long long>(res.fd.steps), res.fd.leak_fraction,
                res.fd.within_leak_tol ? "" : " (exceeds leak_tol)", res.fd.wall_s);
  } else {
    std::fprintf(stderr, "fd failed: %s\n", res.fd.error.c_str());
  }
  std::printf("wrote %s\n", cfg.output.c_str());
  return res.failed() ? 1 : 0;
}

int do_repro(const std::string& name, std::uint64_t scale, std::string out_dir) {
  if (out_dir.empty()) out_dir = "repro_" + name;
  aggfrag::ReproOutcome r;
  if (name == "table1") r = aggfrag::repro_table1(out_dir, scale);
  else if (name == "table2") r = aggfrag::repro_table2(out_dir, scale);
  else if (name == "fig1") r = aggfrag::repro_fig1(out_dir, scale);
  else if (name == "fig2") r = aggfrag::repro_fig2(out_dir, scale);
  else if (name == "fig3a") r = aggfrag::repro_fig3a(out_dir, scale);
  else if (name == "fig3b") r = aggfrag::repro_fig3b(out_dir, scale);
  else {
    std::fprintf(stderr, "unknown repro target '%s'\n", name.c_str());
    return 2;
  }
  std::printf("%s\n", r.summary.c_str());
  for (const auto& f : r.artifacts) std::printf("  %s\n", f.c_str());
  return r.ok ? 0 : 1;
}

int do_plot(const std::vector<std::string>& inputs, const std::string& out_file,
            const aggfrag::PlotOptions& opt) {
  std::vector<aggfrag::PlotSeries> series;
  for (const auto& arg : inputs) {
    std::string path = arg, column;
    if (const auto pos = arg.rfind(':');
        pos != std::string::npos && arg.find(".csv") < pos) {
      path = arg.substr(0, pos);
      column = arg.substr(pos + 1);
    }
    const auto table = aggfrag::read_csv(path);
    if (table.columns.size() < 2 || table.data[0].empty())
      throw aggfrag::ConfigError(path + ": need a time column plus data");
    const std::string stem = std::filesystem::path(path).stem().string();
    for (std::size_t c = 1; c < table.columns.size(); ++c) {
      if (!column.empty() && table.columns[c] != column) continue;
      series.push_back({stem + ":" + table.columns[c], table.data[0], table.data[c]});
    }
    if (!column.empty() && (series.empty() || series.back().x != table.data[0]))
      throw aggfrag::ConfigError(path + ": no column named '" + column + "'");
  }
  if (series.empty()) throw aggfrag::ConfigError("nothing to plot");
  aggfrag::write_line_plot(out_file, series, opt);
  std::printf("wrote %s (%zu series)\n", out_file.c_str(), series.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aggregation-fragmentation kinetics simulator"};
  app.set_version_flag("--version", aggfrag::version_string);
  app.require_subcommand(1);

  std::string config_path, out_dir, repro_name, plot_out;
  std::uint64_t scale = 1;
  unsigned workers = 0;
  std::vector<std::string> plot_inputs;
  aggfrag::PlotOptions plot_opt;

  auto* run = app.add_subcommand("run", "run one experiment from a JSON config");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--scale", scale, "divide N0/S and the seed list by this factor");
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--workers", workers, "worker threads (overrides config)");

  auto* repro = app.add_subcommand("repro", "reproduce a published table or figure");
  repro->add_option("name", repro_name, "table1|table2|fig1|fig2|fig3a|fig3b")
      ->required()
      ->check(CLI::IsMember({"table1", "table2", "fig1", "fig2", "fig3a", "fig3b"}));
  repro->add_option("--scale", scale, "divide particle counts and seed lists");
  repro->add_option("--out", out_dir, "output directory");

  auto* plot = app.add_subcommand("plot", "line-plot CSV columns into an SVG");
  plot->add_option("csv", plot_inputs, "input files, optionally file.csv:column")
      ->required();
  plot->add_option("--out", plot_out, "output SVG path")->required();
  plot->add_option("--title", plot_opt.title, "plot title");
  plot->add_option("--xlabel", plot_opt.xlabel, "x axis label");
  plot->add_option("--ylabel", plot_opt.ylabel, "y axis label");
  plot->add_flag("--logx", plot_opt.logx, "logarithmic x axis");
  plot->add_flag("--logy", plot_opt.logy, "logarithmic y axis");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return do_run(config_path, scale, out_dir, workers);
    if (repro->parsed()) return do_repro(repro_name, scale, out_dir);
    if (plot->parsed()) return do_plot(plot_inputs, plot_out, plot_opt);
  } catch (const aggfrag::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
