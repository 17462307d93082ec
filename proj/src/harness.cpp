#include "pslb/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pslb/bounds.hpp"
#include "pslb/errors.hpp"

namespace pslb {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& algo_names() {
  static const std::vector<std::string> names{"nebai", "psebai", "psebai_plus", "debai", "debai_beta"};
  return names;
}

std::string to_string(Algo algo) { return algo_names()[static_cast<std::size_t>(algo)]; }

Algo parse_algo(const std::string& name) {
  const auto& names = algo_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Algo>(i);
  std::string valid;
  for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown algorithm '" + name + "' (valid: " + valid + ")");
}

std::vector<double> default_eps_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 12; ++k) g.push_back(0.03 * std::pow(1.35, k));
  return g;
}

std::size_t ExperimentConfig::assumed_l_min() const {
  return static_cast<std::size_t>(std::llround(nu * static_cast<double>(instance.l_min)));
}

std::size_t ExperimentConfig::assumed_l_max() const {
  return static_cast<std::size_t>(std::llround(nu * static_cast<double>(instance.l_max)));
}

std::size_t ExperimentConfig::window() const {
  if (w) return *w;
  const std::size_t raw = assumed_l_min() / (3 * gamma);
  return raw - raw % 2;
}

double ExperimentConfig::threshold(double epsilon) const {
  if (b) return *b;
  const double k = static_cast<double>(instance.num_arms());
  const double ts = tau_star(static_cast<double>(instance.num_contexts()), k,
                             static_cast<double>(assumed_l_max()), epsilon, delta);
  return threshold_b(static_cast<double>(window() * lcd_multiplier), static_cast<double>(instance.dim()),
                     delta_fae(static_cast<double>(gamma), delta, ts, k));
}

std::uint64_t ExperimentConfig::cap_for(Algo algo) const {
  auto it = algo_step_caps.find(algo);
  return it == algo_step_caps.end() ? step_cap : it->second;
}

PsParams ExperimentConfig::psebai_params(double epsilon) const {
  PsParams p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.num_contexts = instance.num_contexts();
  p.l_min = assumed_l_min();
  p.l_max = assumed_l_max();
  p.gamma = gamma;
  p.w = window();
  p.b = threshold(epsilon);
  p.lcd_multiplier = lcd_multiplier;
  p.radius = radius;
  p.zeta = zeta;
  p.beta_form = beta_form;
  p.allow_violation = allow_violation;
  return p;
}

void ExperimentConfig::validate() const {
  instance.validate();
  if (algorithms.empty()) {
    std::string valid;
    for (const auto& n : algo_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("no algorithms selected (valid: " + valid + ")");
  }
  if (eps_grid.empty()) throw ConfigError("empty epsilon grid");
  for (double e : eps_grid)
    if (!(e > 0.0)) throw ConfigError("epsilon values must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(nu > 0.0)) throw ConfigError("nu must be positive");
  if (trials == 0) throw ConfigError("trials must be positive");
  if (gamma < 2) throw ConfigError("gamma must be at least 2");
  const bool needs_ps = std::any_of(algorithms.begin(), algorithms.end(),
                                    [](Algo a) { return a == Algo::psebai || a == Algo::psebai_plus; });
  if (needs_ps) {
    for (double e : eps_grid) psebai_params(e).validate();
    if (!allow_violation) {
      const double bmax = threshold(*std::min_element(eps_grid.begin(), eps_grid.end()));
      const AssumptionCheck c = check_assumption(instance, bmax, static_cast<double>(window()),
                                                 static_cast<double>(gamma));
      if (!c.separation_ok)
        throw ConfigError(fmt::format("2b = {:.4g} exceeds Delta_c = {:.4g}; set allow_violation to run anyway",
                                      2.0 * bmax, c.delta_c));
    }
  }
}

ExperimentConfig paper_scaled_profile() {
  ExperimentConfig c;
  c.instance = make_example_5_1(2, std::acos(-1.0) / 8.0);
  c.instance.l_min = 3000;
  c.instance.l_max = 5000;
  c.instance.schedule = {Schedule::Kind::two_point, 0.8, {}};
  c.eps_grid = default_eps_grid();
  c.delta = 0.05;
  c.gamma = 6;
  c.trials = 20;
  c.radius = RadiusMode::tight;
  c.lcd_multiplier = 3;
  // The closed-form b is about 4 here, far above Delta_c / 2, so LCD would
  // never fire. 0.45 sits between the null and cross-context statistics at
  // w_d = 498; it breaks 2b < Delta_c, hence allow_violation.
  c.b = 0.45;
  c.allow_violation = true;
  return c;
}

namespace {

RadiusMode parse_radius(const std::string& s) {
  if (s == "theory") return RadiusMode::theory;
  if (s == "tight") return RadiusMode::tight;
  throw ConfigError("unknown radius mode '" + s + "' (valid: theory, tight)");
}

ZetaMode parse_zeta(const std::string& s) {
  if (s == "minimizer") return ZetaMode::minimizer;
  if (s == "epsilon") return ZetaMode::epsilon;
  throw ConfigError("unknown zeta mode '" + s + "' (valid: minimizer, epsilon)");
}

BetaForm parse_beta(const std::string& s) {
  if (s == "bernstein") return BetaForm::bernstein;
  if (s == "printed") return BetaForm::printed;
  throw ConfigError("unknown beta form '" + s + "' (valid: bernstein, printed)");
}

std::uint64_t as_count(const json& v) {
  return v.is_number_float() ? static_cast<std::uint64_t>(std::llround(v.get<double>())) : v.get<std::uint64_t>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  static const std::vector<std::string> known{
      "instance", "instance_file", "algorithms", "eps_grid", "delta", "gamma", "w", "b", "nu", "trials",
      "base_seed", "radius_mode", "zeta", "beta_form", "lcd_multiplier", "allow_violation", "step_cap",
      "step_caps", "write_logs"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("unknown config key '" + it.key() + "'");
  if (j.contains("instance")) c.instance = instance_from_json(j.at("instance"));
  if (j.contains("instance_file")) c.instance = load_instance(j.at("instance_file").get<std::string>());
  if (j.contains("algorithms")) {
    c.algorithms.clear();
    for (const auto& a : j.at("algorithms")) c.algorithms.push_back(parse_algo(a.get<std::string>()));
  }
  if (j.contains("eps_grid")) c.eps_grid = j.at("eps_grid").get<std::vector<double>>();
  if (j.contains("delta")) c.delta = j.at("delta").get<double>();
  if (j.contains("gamma")) c.gamma = j.at("gamma").get<std::size_t>();
  if (j.contains("w")) {
    if (j.at("w").is_string() && j.at("w").get<std::string>() == "auto")
      c.w.reset();
    else
      c.w = j.at("w").get<std::size_t>();
  }
  if (j.contains("b")) {
    if (j.at("b").is_string() && j.at("b").get<std::string>() == "formula")
      c.b.reset();
    else
      c.b = j.at("b").get<double>();
  }
  if (j.contains("nu")) c.nu = j.at("nu").get<double>();
  if (j.contains("trials")) c.trials = j.at("trials").get<std::size_t>();
  if (j.contains("base_seed")) c.base_seed = j.at("base_seed").get<std::uint64_t>();
  if (j.contains("radius_mode")) c.radius = parse_radius(j.at("radius_mode").get<std::string>());
  if (j.contains("zeta")) c.zeta = parse_zeta(j.at("zeta").get<std::string>());
  if (j.contains("beta_form")) c.beta_form = parse_beta(j.at("beta_form").get<std::string>());
  if (j.contains("lcd_multiplier")) c.lcd_multiplier = j.at("lcd_multiplier").get<std::size_t>();
  if (j.contains("allow_violation")) c.allow_violation = j.at("allow_violation").get<bool>();
  if (j.contains("step_cap")) c.step_cap = as_count(j.at("step_cap"));
  if (j.contains("step_caps"))
    for (auto it = j.at("step_caps").begin(); it != j.at("step_caps").end(); ++it)
      c.algo_step_caps[parse_algo(it.key())] = as_count(it.value());
  if (j.contains("write_logs")) c.write_logs = j.at("write_logs").get<bool>();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["instance"] = instance_to_json(c.instance);
  j["algorithms"] = json::array();
  for (Algo a : c.algorithms) j["algorithms"].push_back(to_string(a));
  j["eps_grid"] = c.eps_grid;
  j["delta"] = c.delta;
  j["gamma"] = c.gamma;
  j["w"] = c.w ? json(*c.w) : json("auto");
  j["b"] = c.b ? json(*c.b) : json("formula");
  j["nu"] = c.nu;
  j["trials"] = c.trials;
  j["base_seed"] = c.base_seed;
  j["radius_mode"] = c.radius == RadiusMode::tight ? "tight" : "theory";
  j["zeta"] = c.zeta == ZetaMode::minimizer ? "minimizer" : "epsilon";
  j["beta_form"] = c.beta_form == BetaForm::bernstein ? "bernstein" : "printed";
  j["lcd_multiplier"] = c.lcd_multiplier;
  j["allow_violation"] = c.allow_violation;
  j["step_cap"] = c.step_cap;
  json caps = json::object();
  for (const auto& [a, v] : c.algo_step_caps) caps[to_string(a)] = v;
  j["step_caps"] = caps;
  j["write_logs"] = c.write_logs;
  return j;
}

std::uint64_t schedule_seed(std::uint64_t base_seed, std::size_t trial) {
  return hash_words({base_seed, 0x5C4EDULL, trial});
}

std::uint64_t trial_seed(std::uint64_t base_seed, Algo algo, std::size_t eps_index, std::size_t trial) {
  return hash_words({base_seed, static_cast<std::uint64_t>(algo) + 1, eps_index, trial});
}

TrialRecord run_trial(const ExperimentConfig& c, const Allocation& allocation, const TrialKey& key) {
  TrialRecord rec;
  rec.algo = key.algo;
  rec.eps_index = key.eps_index;
  rec.epsilon = c.eps_grid.at(key.eps_index - 1);
  rec.trial = key.trial;
  rec.seed = trial_seed(c.base_seed, key.algo, key.eps_index, key.trial);

  const bool full = key.algo == Algo::debai || key.algo == Algo::debai_beta;
  Env env(c.instance, schedule_seed(c.base_seed, key.trial), rec.seed,
          full ? Dynamics::full_info : Dynamics::hidden);
  RunOptions opts;
  opts.arm_seed = rec.seed;
  opts.step_cap = c.cap_for(key.algo);

  const auto start = std::chrono::steady_clock::now();
  try {
    switch (key.algo) {
      case Algo::nebai:
        rec.result = run_nebai(env, {rec.epsilon, c.delta, static_cast<double>(c.assumed_l_max())}, allocation, opts);
        break;
      case Algo::psebai:
        rec.result = run_psebai(env, c.psebai_params(rec.epsilon), allocation, opts);
        break;
      case Algo::psebai_plus:
        rec.result = run_psebai_plus(env, c.psebai_params(rec.epsilon), allocation, opts);
        break;
      case Algo::debai:
        rec.result = run_debai(env, {rec.epsilon, c.delta, static_cast<double>(c.assumed_l_max()), c.beta_form}, opts);
        break;
      case Algo::debai_beta:
        rec.result = run_debai_beta(env, {rec.epsilon, c.delta, static_cast<double>(c.assumed_l_max()), c.beta_form}, opts);
        break;
    }
  } catch (const std::exception& e) {
    rec.result = AlgoResult{};
    rec.result.outcome = Outcome::failed;
    rec.result.tau = env.time();
    rec.result.segments = env.segments();
    rec.result.stopped_by = std::string("error: ") + e.what();
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  rec.correct = rec.result.arm != kNoIndex && is_eps_best(c.instance, rec.result.arm, rec.epsilon);
  return rec;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

std::string event_log(const AlgoResult& r) {
  std::string s = "t,event,value\n";
  for (const Event& e : r.events) s += fmt::format("{},{},{}\n", e.t, to_string(e.kind), e.value);
  return s;
}

}  // namespace

std::string format_sig(double v) { return fmt::format("{:.9g}", v); }

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records) {
  std::vector<CellSummary> out;
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    std::vector<double> tau, seg, exp;
    std::size_t correct = 0, caps = 0, fails = 0;
    while (j < records.size() && records[j].algo == records[i].algo && records[j].eps_index == records[i].eps_index) {
      const TrialRecord& r = records[j];
      tau.push_back(static_cast<double>(r.result.tau));
      seg.push_back(static_cast<double>(r.result.segments));
      exp.push_back(static_cast<double>(r.result.exp_steps));
      correct += r.correct ? 1 : 0;
      caps += r.result.outcome == Outcome::cap_hit ? 1 : 0;
      fails += r.result.outcome == Outcome::failed ? 1 : 0;
      ++j;
    }
    out.push_back({records[i].algo, records[i].eps_index, records[i].epsilon, j - i, mean_of(tau), sd_of(tau),
                   mean_of(seg), sd_of(seg), mean_of(exp),
                   static_cast<double>(correct) / static_cast<double>(j - i), caps, fails});
    i = j;
  }
  return out;
}

namespace {

std::string csv_safe(std::string v) {
  for (char& ch : v)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return v;
}

}  // namespace

std::string results_csv(const std::vector<TrialRecord>& records) {
  std::string s = "algorithm,eps_index,epsilon,trial,seed,outcome,arm,correct,cap_hit,tau,exp_steps,segments,stopped_by,log\n";
  for (const TrialRecord& r : records) {
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(r.algo), r.eps_index,
                     format_sig(r.epsilon), r.trial, r.seed, to_string(r.result.outcome),
                     r.result.arm == kNoIndex ? std::string("-1") : std::to_string(r.result.arm), r.correct ? 1 : 0,
                     r.result.outcome == Outcome::cap_hit ? 1 : 0, r.result.tau, r.result.exp_steps,
                     r.result.segments, csv_safe(r.result.stopped_by), csv_safe(r.log_path));
  }
  return s;
}

std::string summary_csv(const std::vector<CellSummary>& summary) {
  std::string s =
      "algorithm,eps_index,epsilon,trials,mean_tau,sd_tau,mean_segments,sd_segments,mean_exp_steps,correct_rate,cap_hits,failures\n";
  for (const CellSummary& c : summary) {
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(c.algo), c.eps_index, format_sig(c.epsilon),
                     c.trials, format_sig(c.mean_tau), format_sig(c.sd_tau), format_sig(c.mean_segments),
                     format_sig(c.sd_segments), format_sig(c.mean_exp_steps), format_sig(c.correct_rate), c.cap_hits,
                     c.failures);
  }
  return s;
}

ResultTable run_experiment(const ExperimentConfig& c, std::size_t jobs, const std::string& out_dir) {
  c.validate();
  const Allocation allocation = compute_g_optimal(c.instance.arms);
  std::vector<TrialKey> keys;
  for (Algo a : c.algorithms)
    for (std::size_t e = 1; e <= c.eps_grid.size(); ++e)
      for (std::size_t t = 0; t < c.trials; ++t) keys.push_back({a, e, t});

  ResultTable table;
  table.records.resize(keys.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++) table.records[i] = run_trial(c, allocation, keys[i]);
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, keys.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  table.summary = summarize(table.records);
  table.delta_min = min_gap(c.instance);

  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    if (c.write_logs) {
      fs::create_directories(dir / "logs");
      for (TrialRecord& r : table.records) {
        r.log_path = fmt::format("logs/{}_e{:02d}_t{:03d}.csv", to_string(r.algo), r.eps_index, r.trial);
        write_file(dir / r.log_path, event_log(r.result));
      }
    }
    write_file(dir / "results.csv", results_csv(table.records));
    write_file(dir / "summary.csv", summary_csv(table.summary));
    std::string timing = "algorithm,eps_index,trial,wall_ms\n";
    for (const TrialRecord& r : table.records)
      timing += fmt::format("{},{},{},{:.3f}\n", to_string(r.algo), r.eps_index, r.trial, r.wall_ms);
    write_file(dir / "timing.csv", timing);
    write_file(dir / "run.json", config_to_json(c).dump(2) + "\n");
    emit_plot_data(table, PlotKind::complexity_vs_eps, out_dir);
    emit_plot_data(table, PlotKind::context_samples_vs_invgap, out_dir);
  }
  return table;
}

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "complexity_vs_eps") return PlotKind::complexity_vs_eps;
  if (name == "context_samples_vs_invgap") return PlotKind::context_samples_vs_invgap;
  throw ConfigError("unknown plot kind '" + name + "' (valid: complexity_vs_eps, context_samples_vs_invgap)");
}

std::vector<std::string> emit_plot_data(const ResultTable& table, PlotKind kind, const std::string& out_dir) {
  if (table.summary.empty()) throw ConfigError("result table is empty");
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  std::vector<std::string> written;
  std::size_t i = 0;
  while (i < table.summary.size()) {
    const Algo a = table.summary[i].algo;
    const bool ctx = kind == PlotKind::context_samples_vs_invgap;
    std::string body = ctx ? "# inv_gap_sq mean_segments sd_segments\n" : "# epsilon mean_tau sd_tau\n";
    for (; i < table.summary.size() && table.summary[i].algo == a; ++i) {
      const CellSummary& s = table.summary[i];
      if (ctx) {
        const double g = table.delta_min + s.epsilon;
        body += fmt::format("{} {} {}\n", format_sig(1.0 / (g * g)), format_sig(s.mean_segments), format_sig(s.sd_segments));
      } else {
        body += fmt::format("{} {} {}\n", format_sig(s.epsilon), format_sig(s.mean_tau), format_sig(s.sd_tau));
      }
    }
    const fs::path p = dir / fmt::format("series_{}_{}.dat", ctx ? "contexts" : "complexity", to_string(a));
    write_file(p, body);
    written.push_back(p.string());
  }
  return written;
}

ResultTable load_results(const std::string& dir) {
  const fs::path d(dir);
  std::ifstream cfg(d / "run.json");
  if (!cfg) throw std::runtime_error("missing run.json in " + dir);
  const ExperimentConfig c = config_from_json(json::parse(cfg), ExperimentConfig{});
  std::ifstream in(d / "results.csv");
  if (!in) throw std::runtime_error("missing results.csv in " + dir);
  ResultTable table;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() < 12) throw std::runtime_error("malformed results.csv line: " + line);
    TrialRecord r;
    r.algo = parse_algo(f[0]);
    r.eps_index = std::stoul(f[1]);
    r.epsilon = std::stod(f[2]);
    r.trial = std::stoul(f[3]);
    r.seed = std::stoull(f[4]);
    r.result.outcome = f[5] == "recommended" ? Outcome::recommended : f[5] == "cap_hit" ? Outcome::cap_hit : Outcome::failed;
    const long long arm = std::stoll(f[6]);
    r.result.arm = arm < 0 ? kNoIndex : static_cast<std::size_t>(arm);
    r.correct = f[7] == "1";
    r.result.tau = std::stoull(f[9]);
    r.result.exp_steps = std::stoull(f[10]);
    r.result.segments = std::stoul(f[11]);
    if (f.size() > 12) r.result.stopped_by = f[12];
    if (f.size() > 13) r.log_path = f[13];
    table.records.push_back(r);
  }
  table.summary = summarize(table.records);
  table.delta_min = min_gap(c.instance);
  return table;
}

}  // namespace pslb
