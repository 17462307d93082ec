#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pslb/bounds.hpp"
#include "pslb/env.hpp"
#include "pslb/errors.hpp"
#include "pslb/harness.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& profile, const std::uint64_t* seed,
            const std::string& out, std::size_t jobs, bool allow_violation, std::size_t trials) {
  pslb::ExperimentConfig config;
  if (profile == "paper-scaled")
    config = pslb::paper_scaled_profile();
  else if (!profile.empty())
    throw pslb::ConfigError("unknown profile '" + profile + "' (valid: paper-scaled)");
  else
    config.eps_grid = pslb::default_eps_grid();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open " + config_path);
    config = pslb::config_from_json(nlohmann::json::parse(in), config);
  }
  if (seed) config.base_seed = *seed;
  if (allow_violation) config.allow_violation = true;
  if (trials) config.trials = trials;
  if (config.instance.arms.size() == 0) throw pslb::ConfigError("no instance given (use --config or --profile)");

  const pslb::ResultTable table = pslb::run_experiment(config, jobs, out);
  fmt::print("{:<12} {:>3} {:>9} {:>14} {:>12} {:>8} {:>5}\n", "algorithm", "k", "epsilon", "mean_tau",
             "mean_l", "correct", "caps");
  for (const auto& c : table.summary)
    fmt::print("{:<12} {:>3} {:>9.4f} {:>14.1f} {:>12.2f} {:>8.3f} {:>5}\n", pslb::to_string(c.algo), c.eps_index,
               c.epsilon, c.mean_tau, c.mean_segments, c.correct_rate, c.cap_hits);
  if (!out.empty()) fmt::print("wrote {}/results.csv\n", out);
  return 0;
}

int cmd_bounds(const std::string& instance_path, double eps, double delta, double gamma, double w) {
  const pslb::Instance inst = pslb::load_instance(instance_path);
  if (!(w > 0.0)) {
    const double raw = std::floor(static_cast<double>(inst.l_min) / (3.0 * gamma));
    w = raw - std::fmod(raw, 2.0);
  }
  const pslb::BoundReport report = pslb::bound_report(inst, eps, delta, gamma, w);
  std::cout << pslb::format_report_text(report) << "\n" << pslb::format_report_kv(report);
  return 0;
}

int cmd_plot(const std::string& in_dir, const std::string& kind, const std::string& out) {
  const pslb::PlotKind k = pslb::parse_plot_kind(kind);
  const pslb::ResultTable table = pslb::load_results(in_dir);
  for (const auto& p : pslb::emit_plot_data(table, k, out.empty() ? in_dir : out)) std::cout << p << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best-arm identification in piecewise-stationary linear bandits"};
  app.require_subcommand(1);

  std::string config_path, profile, out, instance_path, in_dir, kind, plot_out;
  std::uint64_t seed = 0;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  std::size_t trials = 0;
  bool allow_violation = false;
  double eps = 0.1, delta = 0.05, gamma = 6.0, w = 0.0;

  auto* run = app.add_subcommand("run", "run an experiment sweep");
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--profile", profile, "preset profile (paper-scaled)");
  auto* seed_opt = run->add_option("--seed", seed, "base seed");
  run->add_option("--out", out, "output directory")->default_val("results");
  run->add_option("--jobs", jobs, "worker threads");
  run->add_option("--trials", trials, "override trials per cell");
  run->add_flag("--allow-violation", allow_violation, "skip the detectability check");

  auto* bounds = app.add_subcommand("bounds", "print the bound report for an instance");
  bounds->add_option("--instance", instance_path, "instance JSON file")->required();
  bounds->add_option("--eps", eps)->required();
  bounds->add_option("--delta", delta, "confidence parameter")->capture_default_str();
  bounds->add_option("--gamma", gamma, "CD period")->capture_default_str();
  bounds->add_option("--w", w, "window size (default L_min/(3 gamma), even)");

  auto* plot = app.add_subcommand("plot-data", "emit plot series from a results directory");
  plot->add_option("--in", in_dir, "results directory")->required();
  plot->add_option("--kind", kind, "complexity_vs_eps | context_samples_vs_invgap")->required();
  plot->add_option("--out", plot_out, "output directory (default: --in)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, profile, *seed_opt ? &seed : nullptr, out, jobs, allow_violation, trials);
    if (*bounds) return cmd_bounds(instance_path, eps, delta, gamma, w);
    if (*plot) return cmd_plot(in_dir, kind, plot_out);
  } catch (const pslb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
