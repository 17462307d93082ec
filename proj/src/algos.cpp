#include "pslb/algos.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "pslb/bounds.hpp"
#include "pslb/errors.hpp"

namespace pslb {

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::alarm: return "alarm";
    case EventKind::align: return "align";
    case EventKind::record: return "record";
    case EventKind::cancel: return "cancel";
    case EventKind::recommend: return "recommend";
    case EventKind::failure: return "failure";
    case EventKind::cap: return "cap";
    case EventKind::nebai_stop: return "nebai_stop";
    case EventKind::fallback: return "fallback";
  }
  return "?";
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::recommended: return "recommended";
    case Outcome::failed: return "failed";
    case Outcome::cap_hit: return "cap_hit";
  }
  return "?";
}

void PsParams::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (num_contexts == 0) throw ConfigError("N must be positive");
  if (l_min == 0 || l_min > l_max) throw ConfigError("need 0 < L_min <= L_max");
  if (gamma < 2) throw ConfigError("gamma must be at least 2");
  if (w == 0 || w % 2 != 0) throw ConfigError("w must be positive and even");
  if (lcd_multiplier == 0) throw ConfigError("LCD window multiplier must be positive");
  if (!(b > 0.0)) throw ConfigError("threshold b must be positive");
  if (!allow_violation && 3 * w * gamma > l_min)
    throw ConfigError("3 w gamma > L_min violates the distinguishability assumption");
}

PsebaiMachine::PsebaiMachine(const ArmMatrix& arms, const Allocation& allocation, const PsParams& params)
    : arms_(arms),
      params_((params.validate(), params)),
      stats_(arms, allocation, params.num_contexts, params.revert_depth()),
      detector_(arms, allocation, params.detection_window(), params.b) {
  radius_.num_arms = static_cast<std::size_t>(arms.cols());
  radius_.num_contexts = params.num_contexts;
  radius_.dim = static_cast<std::size_t>(arms.rows());
  radius_.l_max = static_cast<double>(params.l_max);
  radius_.delta = params.delta;
  radius_.mode = params.radius;
  radius_.zeta = params.zeta;
  radius_.beta_form = params.beta_form;
  radius_.epsilon = params.epsilon;
  tau_star_ = pslb::tau_star(static_cast<double>(params.num_contexts), static_cast<double>(arms.cols()),
                       static_cast<double>(params.l_max), params.epsilon, params.delta);
  theta_hat_.resize(arms.rows(), static_cast<Eigen::Index>(params.num_contexts));
  context_scores_.resize(arms.cols(), static_cast<Eigen::Index>(params.num_contexts));
  gaps_.resize(params.num_contexts);
  cd_.reserve(4 * params.detection_window());
}

PsebaiMachine::Status PsebaiMachine::on_pull(std::size_t arm, double reward) {
  if (status_ != Status::running) return status_;
  ++t_;
  const Sample s{static_cast<std::uint32_t>(arm), reward};
  const std::size_t wd = params_.detection_window();

  switch (mode_) {
    case Mode::warmup:
      ++phases_.warmup;
      pending_.push_back(s);
      if (pending_.size() == wd / 2) {
        archive_.append(std::move(pending_));
        pending_.clear();
        t_ca_ = t_;
        j_hat_ = 0;
        mode_ = Mode::main;
      }
      break;

    case Mode::main:
      if ((t_ - t_ca_) % params_.gamma != 0) {
        ++phases_.exp;
        stats_.update(j_hat_, arm, reward);
      } else {
        ++phases_.cd;
        stats_.record_noop();
        cd_.push_back(s);
        ++cd_count_;
        if (cd_.size() >= 4 * wd) cd_.erase(cd_.begin(), cd_.end() - static_cast<std::ptrdiff_t>(wd));
        if (cd_count_ >= wd &&
            detector_.alarm(std::span<const Sample>(cd_.data() + cd_.size() - wd, wd))) {
          events_.push_back({t_, EventKind::alarm, static_cast<std::int64_t>(j_hat_ + 1)});
          if (t_cd_) events_.push_back({t_, EventKind::cancel, static_cast<std::int64_t>(arm_)});
          cd_.clear();
          cd_count_ = 0;
          t_cd_.reset();
          arm_ = kNoIndex;
          pending_.clear();
          mode_ = Mode::align;
          break;
        }
      }
      after_update();
      break;

    case Mode::align:
      ++phases_.ca;
      stats_.record_noop();
      pending_.push_back(s);
      if (pending_.size() == wd / 2) {
        const std::size_t index = archive_.align(pending_, detector_);
        pending_.clear();
        events_.push_back({t_, EventKind::align, static_cast<std::int64_t>(index)});
        if (index > params_.num_contexts) {
          events_.push_back({t_, EventKind::failure, static_cast<std::int64_t>(index)});
          status_ = Status::failed;
          mode_ = Mode::done;
          return status_;
        }
        j_hat_ = index - 1;
        stats_.revert(params_.revert_depth());
        t_ca_ = t_;
        mode_ = Mode::main;
        after_update();
      }
      break;

    case Mode::done:
      break;
  }

  if (status_ == Status::running && static_cast<double>(t_) > tau_star_) {
    events_.push_back({t_, EventKind::cap, 0});
    status_ = Status::capped;
    mode_ = Mode::done;
  }
  return status_;
}

void PsebaiMachine::after_update() {
  if (params_.never_stop) return;
  if (!t_cd_) {
    if (stopping_condition()) {
      arm_ = empirical_best_arm(stats_, arms_);
      t_cd_ = cd_count_;
      events_.push_back({t_, EventKind::record, static_cast<std::int64_t>(arm_)});
    }
  } else if (*t_cd_ + params_.detection_window() / 2 == cd_count_) {
    events_.push_back({t_, EventKind::recommend, static_cast<std::int64_t>(arm_)});
    status_ = Status::recommended;
    mode_ = Mode::done;
  }
}

bool PsebaiMachine::stopping_condition() {
  const std::uint64_t s = stats_.total();
  if (s == 0) return false;
  const double sd = static_cast<double>(s);
  const LogSplits lg = log_splits(radius_, sd);
  if (sd < 2.0 * radius_.l_max / 9.0 * lg.d) return false;

  fill_radius_terms(stats_, radius_, terms_);
  const std::size_t n = params_.num_contexts;
  for (std::size_t j = 0; j < n; ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    if (stats_.count(j) == 0)
      theta_hat_.col(c).setZero();
    else
      theta_hat_.col(c) = stats_.sums().col(c) / static_cast<double>(stats_.count(j));
  }
  context_scores_.noalias() = arms_.transpose() * theta_hat_;
  const Eigen::VectorXd scores = arms_.transpose() * stats_.mixed_theta();
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < scores.size(); ++k)
    if (scores[k] > scores[best]) best = k;
  for (Eigen::Index x = 0; x < scores.size(); ++x) {
    if (x == best) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      gaps_[j] = context_scores_(best, c) - context_scores_(x, c);
    }
    const double rho = radius_from_gaps(terms_, radius_, gaps_.data(), n);
    if (scores[best] - scores[x] - rho < -params_.epsilon) return false;
  }
  return true;
}

namespace {

AlgoResult cap_result(const Env& env, std::size_t arm) {
  AlgoResult r;
  r.outcome = Outcome::cap_hit;
  r.arm = arm;
  r.tau = env.time();
  r.segments = env.segments();
  r.events.push_back({env.time(), EventKind::cap, static_cast<std::int64_t>(arm)});
  return r;
}

void fill_from_machine(AlgoResult& r, const PsebaiMachine& m, const Env& env) {
  r.tau = env.time();
  r.segments = env.segments();
  r.exp_steps = m.stats().total();
  r.phases = m.phases();
  r.events.insert(r.events.begin(), m.events().begin(), m.events().end());
}

}  // namespace

AlgoResult run_nebai(Env& env, const NebaiParams& p, const Allocation& allocation, const RunOptions& options) {
  const ArmMatrix& arms = env.instance().arms;
  check_allocation(arms, allocation);
  NaiveState naive(arms, allocation, p.epsilon, p.delta, p.l_max);
  Stream stream(options.arm_seed, Substream::arms);
  for (;;) {
    if (env.time() >= options.step_cap) {
      AlgoResult r = cap_result(env, naive.past_warmup() ? naive.leader() : kNoIndex);
      r.exp_steps = env.time();
      return r;
    }
    const std::size_t arm = sample_arm(allocation, stream);
    const Observation obs = env.step(arm);
    if (options.on_pull) options.on_pull(arm);
    naive.update(arm, obs.reward);
    if (naive.check()) break;
  }
  AlgoResult r;
  r.outcome = Outcome::recommended;
  r.arm = naive.leader();
  r.tau = env.time();
  r.exp_steps = env.time();
  r.segments = env.segments();
  r.stopped_by = "nebai";
  r.events.push_back({env.time(), EventKind::nebai_stop, static_cast<std::int64_t>(r.arm)});
  return r;
}

AlgoResult run_psebai(Env& env, const PsParams& p, const Allocation& allocation, const RunOptions& options) {
  check_allocation(env.instance().arms, allocation);
  PsebaiMachine machine(env.instance().arms, allocation, p);
  Stream stream(options.arm_seed, Substream::arms);
  PsebaiMachine::Status status = PsebaiMachine::Status::running;
  while (status == PsebaiMachine::Status::running) {
    if (env.time() >= options.step_cap) {
      AlgoResult r = cap_result(env, kNoIndex);
      fill_from_machine(r, machine, env);
      return r;
    }
    const std::size_t arm = sample_arm(allocation, stream);
    const Observation obs = env.step(arm);
    if (options.on_pull) options.on_pull(arm);
    status = machine.on_pull(arm, obs.reward);
  }
  AlgoResult r;
  fill_from_machine(r, machine, env);
  r.stopped_by = "psebai";
  if (status == PsebaiMachine::Status::recommended) {
    r.outcome = Outcome::recommended;
    r.arm = machine.recommended_arm();
  } else {
    r.outcome = Outcome::failed;
  }
  return r;
}

AlgoResult run_psebai_plus(Env& env, const PsParams& p, const Allocation& allocation,
                           const RunOptions& options) {
  const ArmMatrix& arms = env.instance().arms;
  check_allocation(arms, allocation);
  PsebaiMachine machine(arms, allocation, p);
  NaiveState naive(arms, allocation, p.epsilon, p.delta, static_cast<double>(p.l_max));
  Stream stream(options.arm_seed, Substream::arms);
  bool active = true;
  std::vector<Event> own;
  AlgoResult r;
  for (;;) {
    if (env.time() >= options.step_cap) {
      r = cap_result(env, naive.past_warmup() ? naive.leader() : kNoIndex);
      break;
    }
    const std::size_t arm = sample_arm(allocation, stream);
    const Observation obs = env.step(arm);
    if (options.on_pull) options.on_pull(arm);
    naive.update(arm, obs.reward);
    if (machine.mode() != PsebaiMachine::Mode::warmup && naive.check()) {
      r.outcome = Outcome::recommended;
      r.arm = naive.leader();
      r.stopped_by = "nebai";
      own.push_back({env.time(), EventKind::nebai_stop, static_cast<std::int64_t>(r.arm)});
      break;
    }
    if (!active) continue;
    const auto status = machine.on_pull(arm, obs.reward);
    if (status == PsebaiMachine::Status::recommended) {
      r.outcome = Outcome::recommended;
      r.arm = machine.recommended_arm();
      r.stopped_by = "psebai";
      break;
    }
    if (status != PsebaiMachine::Status::running) {
      active = false;
      own.push_back({env.time(), EventKind::fallback, 0});
    }
  }
  const std::vector<Event> cap_events = r.events;
  r.events.clear();
  fill_from_machine(r, machine, env);
  r.events.insert(r.events.end(), own.begin(), own.end());
  r.events.insert(r.events.end(), cap_events.begin(), cap_events.end());
  std::stable_sort(r.events.begin(), r.events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  return r;
}

namespace {

std::size_t match_context(const Eigen::MatrixXd& thetas, const double* theta) {
  const Eigen::Index d = thetas.rows();
  for (Eigen::Index j = 0; j < thetas.cols(); ++j) {
    bool same = true;
    for (Eigen::Index i = 0; i < d && same; ++i) same = thetas(i, j) == theta[i];
    if (same) return static_cast<std::size_t>(j);
  }
  throw std::runtime_error("observed context vector is not a column of Theta");
}

// Stopping test shared by both full-information baselines. `beta` weights
// each context; zeta is the beta-weighted minimizer.
bool distribution_condition(const Eigen::MatrixXd& means, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& beta, double eps, std::size_t& leader) {
  const Eigen::VectorXd scores = means * p;
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < scores.size(); ++k)
    if (scores[k] > scores[best]) best = k;
  leader = static_cast<std::size_t>(best);
  const double bsum = beta.sum();
  for (Eigen::Index x = 0; x < scores.size(); ++x) {
    if (x == best) continue;
    const Eigen::VectorXd gaps = (means.row(best) - means.row(x)).transpose();
    const double zeta = bsum > 0.0 ? -beta.dot(gaps) / bsum : 0.0;
    const double rho = (beta.array() * (gaps.array() + zeta).abs()).sum();
    if (scores[best] - scores[x] - rho < -eps) return false;
  }
  return true;
}

void require_full_info(const Env& env) {
  if (env.dynamics() != Dynamics::full_info)
    throw DynamicsMismatchError("distribution baselines need full_info dynamics");
}

AlgoResult distribution_result(const Env& env, std::size_t arm, const char* name) {
  AlgoResult r;
  r.outcome = Outcome::recommended;
  r.arm = arm;
  r.tau = env.time();
  r.segments = env.segments();
  r.stopped_by = name;
  r.events.push_back({env.time(), EventKind::recommend, static_cast<std::int64_t>(arm)});
  return r;
}

}  // namespace

AlgoResult run_debai(Env& env, const DebaiParams& p, const RunOptions& options) {
  require_full_info(env);
  const Instance& inst = env.instance();
  const Eigen::MatrixXd means = inst.mean_table();
  const auto n = static_cast<Eigen::Index>(inst.num_contexts());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
  std::size_t leader = kNoIndex;
  for (;;) {
    // Estimates only move at changepoints, so jump straight to the next one.
    if (env.time() > 0 && env.next_changepoint() > options.step_cap) {
      AlgoResult r = cap_result(env, leader);
      r.tau = options.step_cap;
      return r;
    }
    Observation obs;
    do {
      obs = env.advance();
    } while (!obs.changepoint);
    counts[static_cast<Eigen::Index>(match_context(inst.thetas, obs.theta))] += 1.0;
    const double l = static_cast<double>(env.segments());
    const double beta = std::sqrt(1.0 / (2.0 * l) * std::log(2.0 * kApery * static_cast<double>(n) * l * l * l / p.delta));
    if (distribution_condition(means, counts / l, Eigen::VectorXd::Constant(n, beta), p.epsilon, leader))
      return distribution_result(env, leader, "debai");
  }
}

AlgoResult run_debai_beta(Env& env, const DebaiParams& p, const RunOptions& options) {
  require_full_info(env);
  const Instance& inst = env.instance();
  const Eigen::MatrixXd means = inst.mean_table();
  const auto n = static_cast<Eigen::Index>(inst.num_contexts());
  Eigen::VectorXd time_in = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd beta(n);
  std::size_t current = 0;
  std::size_t leader = kNoIndex;
  const double log_const = std::log(2.0 * kApery * static_cast<double>(n) / p.delta);
  for (;;) {
    if (env.time() >= options.step_cap) return cap_result(env, leader);
    const Observation obs = env.advance();
    if (obs.changepoint) current = match_context(inst.thetas, obs.theta);
    time_in[static_cast<Eigen::Index>(current)] += 1.0;
    const double t = static_cast<double>(env.time());
    const double lg = log_const + 3.0 * std::log(t);
    const Eigen::VectorXd share = time_in / t;
    for (Eigen::Index j = 0; j < n; ++j) beta[j] = beta_tight(share[j], t, p.l_max, lg, p.beta_form);
    if (distribution_condition(means, share, beta, p.epsilon, leader))
      return distribution_result(env, leader, "debai_beta");
  }
}

}  // namespace pslb
