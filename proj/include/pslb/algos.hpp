#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pslb/changedetect.hpp"
#include "pslb/design.hpp"
#include "pslb/env.hpp"
#include "pslb/estimation.hpp"
#include "pslb/naive.hpp"

namespace pslb {

enum class EventKind { alarm, align, record, cancel, recommend, failure, cap, nebai_stop, fallback };
std::string to_string(EventKind kind);

struct Event {
  std::uint64_t t = 0;
  EventKind kind = EventKind::alarm;
  std::int64_t value = 0;  // arm or context index, kind-dependent (1-based contexts)
};

struct PhaseCounts {
  std::uint64_t warmup = 0;
  std::uint64_t exp = 0;
  std::uint64_t cd = 0;
  std::uint64_t ca = 0;
};

enum class Outcome { recommended, failed, cap_hit };
std::string to_string(Outcome outcome);

struct AlgoResult {
  Outcome outcome = Outcome::failed;
  std::size_t arm = kNoIndex;  // for cap_hit: the current empirical leader, if any
  std::uint64_t tau = 0;
  std::uint64_t exp_steps = 0;  // S_tau
  std::size_t segments = 0;     // l_tau
  PhaseCounts phases;
  std::vector<Event> events;
  std::string stopped_by;
};

struct PsParams {
  double epsilon = 0.1;
  double delta = 0.05;
  std::size_t num_contexts = 1;  // N
  std::size_t l_min = 1;
  std::size_t l_max = 1;
  std::size_t gamma = 6;
  std::size_t w = 2;  // base window; even
  double b = 0.0;
  std::size_t lcd_multiplier = 1;
  RadiusMode radius = RadiusMode::tight;
  ZetaMode zeta = ZetaMode::minimizer;
  BetaForm beta_form = BetaForm::bernstein;
  bool allow_violation = false;
  // Diagnostics: never evaluate the stopping rule.
  bool never_stop = false;

  // Window used by detection, alignment and reversion.
  std::size_t detection_window() const { return w * lcd_multiplier; }
  std::size_t revert_depth() const { return detection_window() * (gamma + 1) / 2; }
  // Throws ConfigError on odd w, gamma < 2, or 3 w gamma > L_min without allow_violation.
  void validate() const;
};

// PSεBAI as a step-driven state machine: feed it every pull in order.
class PsebaiMachine {
 public:
  enum class Mode { warmup, main, align, done };
  enum class Status { running, recommended, failed, capped };

  PsebaiMachine(const ArmMatrix& arms, const Allocation& allocation, const PsParams& params);

  Status on_pull(std::size_t arm, double reward);

  Mode mode() const { return mode_; }
  Status status() const { return status_; }
  std::uint64_t time() const { return t_; }
  double tau_star() const { return tau_star_; }
  std::size_t estimated_context() const { return j_hat_; }  // 0-based
  std::optional<std::uint64_t> t_cd() const { return t_cd_; }
  std::size_t cd_count() const { return cd_count_; }
  std::size_t recommended_arm() const { return arm_; }
  const RunningStats& stats() const { return stats_; }
  const CaArchive& archive() const { return archive_; }
  const std::vector<Event>& events() const { return events_; }
  const PhaseCounts& phases() const { return phases_; }
  const PsParams& params() const { return params_; }
  // Evaluates the stopping condition on the current estimates.
  bool stopping_condition();

 private:
  void after_update();

  ArmMatrix arms_;
  PsParams params_;
  RadiusParams radius_;
  RunningStats stats_;
  Detector detector_;
  CaArchive archive_;
  std::vector<Sample> cd_;  // recent CD samples (at least the last window)
  std::size_t cd_count_ = 0;
  std::vector<Sample> pending_;  // warm-up or alignment samples
  double tau_star_;
  Mode mode_ = Mode::warmup;
  Status status_ = Status::running;
  std::uint64_t t_ = 0;
  std::uint64_t t_ca_ = 0;
  std::size_t j_hat_ = 0;
  std::optional<std::uint64_t> t_cd_;
  std::size_t arm_ = kNoIndex;
  std::vector<Event> events_;
  PhaseCounts phases_;
  // Scratch space for the stopping rule.
  RadiusTerms terms_;
  Eigen::MatrixXd theta_hat_;
  Eigen::MatrixXd context_scores_;
  std::vector<double> gaps_;
};

struct RunOptions {
  std::uint64_t arm_seed = 0;
  std::uint64_t step_cap = 1'000'000'000ULL;
  // Called with each pulled arm, in order.
  std::function<void(std::size_t)> on_pull;
};

struct NebaiParams {
  double epsilon = 0.1;
  double delta = 0.05;
  double l_max = 1.0;
};

AlgoResult run_nebai(Env& env, const NebaiParams& params, const Allocation& allocation,
                     const RunOptions& options);
AlgoResult run_psebai(Env& env, const PsParams& params, const Allocation& allocation,
                      const RunOptions& options);
// Shared pull stream: every pull feeds the baseline; while t <= tau* and
// the piecewise-stationary machine has not failed, it is fed too.
AlgoResult run_psebai_plus(Env& env, const PsParams& params, const Allocation& allocation,
                           const RunOptions& options);

struct DebaiParams {
  double epsilon = 0.1;
  double delta = 0.05;
  double l_max = 1.0;  // DebaiBeta only
  BetaForm beta_form = BetaForm::bernstein;
};

// Full-information baselines. Theta (the instance's context vectors) is known
// to the agent; only the context distribution is estimated.
AlgoResult run_debai(Env& env, const DebaiParams& params, const RunOptions& options);
AlgoResult run_debai_beta(Env& env, const DebaiParams& params, const RunOptions& options);

}  // namespace pslb
