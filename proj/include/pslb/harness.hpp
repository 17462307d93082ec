#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pslb/algos.hpp"
#include "pslb/env.hpp"

namespace pslb {

enum class Algo { nebai, psebai, psebai_plus, debai, debai_beta };
std::string to_string(Algo algo);
Algo parse_algo(const std::string& name);  // throws ConfigError listing valid names
const std::vector<std::string>& algo_names();

struct ExperimentConfig {
  Instance instance;
  std::vector<Algo> algorithms{Algo::nebai, Algo::psebai_plus, Algo::debai, Algo::debai_beta};
  std::vector<double> eps_grid;  // default: 0.03 * 1.35^k, k = 1..12
  double delta = 0.05;
  std::size_t gamma = 6;
  std::optional<std::size_t> w;  // default: L~_min / (3 gamma), rounded down to even
  std::optional<double> b;       // default: the closed-form threshold
  double nu = 1.0;               // L_min, L_max misspecification
  std::size_t trials = 20;
  std::uint64_t base_seed = 1;
  RadiusMode radius = RadiusMode::tight;
  ZetaMode zeta = ZetaMode::minimizer;
  BetaForm beta_form = BetaForm::bernstein;
  std::size_t lcd_multiplier = 1;
  bool allow_violation = false;
  std::uint64_t step_cap = 1'000'000'000ULL;
  std::map<Algo, std::uint64_t> algo_step_caps;
  bool write_logs = true;

  std::size_t assumed_l_min() const;
  std::size_t assumed_l_max() const;
  std::size_t window() const;
  double threshold(double epsilon) const;
  std::uint64_t cap_for(Algo algo) const;
  PsParams psebai_params(double epsilon) const;
  // Throws ConfigError; checks the distinguishability assumption unless allowed.
  void validate() const;
};

std::vector<double> default_eps_grid();
// Example 5.1 (d = 2, phi = pi/8) at L_min = 3000, L_max = 5000.
ExperimentConfig paper_scaled_profile();
// Applies the keys present in `j` on top of `base`.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct TrialKey {
  Algo algo;
  std::size_t eps_index;  // 1-based
  std::size_t trial;      // 0-based
};

std::uint64_t schedule_seed(std::uint64_t base_seed, std::size_t trial);
std::uint64_t trial_seed(std::uint64_t base_seed, Algo algo, std::size_t eps_index, std::size_t trial);

struct TrialRecord {
  Algo algo = Algo::nebai;
  std::size_t eps_index = 0;
  double epsilon = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  AlgoResult result;
  bool correct = false;
  double wall_ms = 0.0;
  std::string log_path;
};

// One run with harness seeding. Never throws for algorithm outcomes.
TrialRecord run_trial(const ExperimentConfig& config, const Allocation& allocation, const TrialKey& key);

struct CellSummary {
  Algo algo;
  std::size_t eps_index;
  double epsilon;
  std::size_t trials;
  double mean_tau, sd_tau;
  double mean_segments, sd_segments;
  double mean_exp_steps;
  double correct_rate;
  std::size_t cap_hits, failures;
};

struct ResultTable {
  std::vector<TrialRecord> records;  // ordered by (algo, eps_index, trial)
  std::vector<CellSummary> summary;
  double delta_min = 0.0;
};

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records);

// Runs every (algorithm, epsilon, trial) cell on `jobs` threads. When
// `out_dir` is nonempty, writes results.csv, summary.csv, timing.csv,
// run.json, series_*.dat and (optionally) logs/.
ResultTable run_experiment(const ExperimentConfig& config, std::size_t jobs = 1,
                           const std::string& out_dir = "");

enum class PlotKind { complexity_vs_eps, context_samples_vs_invgap };
PlotKind parse_plot_kind(const std::string& name);
// Writes one series file per algorithm; returns the paths written.
std::vector<std::string> emit_plot_data(const ResultTable& table, PlotKind kind, const std::string& out_dir);
// Reloads results.csv and run.json written by run_experiment.
ResultTable load_results(const std::string& dir);

std::string results_csv(const std::vector<TrialRecord>& records);
std::string summary_csv(const std::vector<CellSummary>& summary);
std::string format_sig(double v);  // 9 significant digits

}  // namespace pslb
