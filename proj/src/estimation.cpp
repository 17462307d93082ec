#include "pslb/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "pslb/errors.hpp"

namespace pslb {

RunningStats::RunningStats(const ArmMatrix& arms, const Allocation& allocation,
                           std::size_t num_contexts, std::size_t journal_capacity)
    : z_(allocation.info_inverse * arms),
      sums_(Eigen::MatrixXd::Zero(arms.rows(), static_cast<Eigen::Index>(num_contexts))),
      counts_(num_contexts, 0),
      journal_ctx_(journal_capacity, -1),
      journal_prev_(journal_capacity * static_cast<std::size_t>(arms.rows()), 0.0) {}

void RunningStats::push(std::int64_t context) {
  const std::size_t cap = journal_ctx_.size();
  if (cap == 0) return;
  journal_ctx_[journal_head_] = context;
  if (context >= 0) {
    const auto d = sums_.rows();
    Eigen::Map<Eigen::VectorXd>(journal_prev_.data() + journal_head_ * static_cast<std::size_t>(d), d) =
        sums_.col(context);
  }
  journal_head_ = (journal_head_ + 1) % cap;
  journal_size_ = std::min(journal_size_ + 1, cap);
}

void RunningStats::update(std::size_t context, std::size_t arm, double reward) {
  push(static_cast<std::int64_t>(context));
  sums_.col(static_cast<Eigen::Index>(context)) += reward * z_.col(static_cast<Eigen::Index>(arm));
  ++counts_[context];
  ++total_;
}

void RunningStats::record_noop() { push(-1); }

void RunningStats::revert(std::size_t steps) {
  if (steps > journal_size_)
    throw ReversionDepthError("reversion needs " + std::to_string(steps) + " steps, journal holds " +
                              std::to_string(journal_size_));
  const std::size_t cap = journal_ctx_.size();
  const auto d = sums_.rows();
  for (std::size_t i = 0; i < steps; ++i) {
    journal_head_ = (journal_head_ + cap - 1) % cap;
    const std::int64_t c = journal_ctx_[journal_head_];
    if (c < 0) continue;
    sums_.col(c) = Eigen::Map<const Eigen::VectorXd>(
        journal_prev_.data() + journal_head_ * static_cast<std::size_t>(d), d);
    --counts_[static_cast<std::size_t>(c)];
    --total_;
  }
  clear_journal();
}

void RunningStats::clear_journal() {
  journal_head_ = 0;
  journal_size_ = 0;
}

double RunningStats::p_hat(std::size_t j) const {
  return total_ == 0 ? 0.0 : static_cast<double>(counts_[j]) / static_cast<double>(total_);
}

Eigen::VectorXd RunningStats::theta_hat(std::size_t j) const {
  if (counts_[j] == 0) return Eigen::VectorXd::Zero(sums_.rows());
  return sums_.col(static_cast<Eigen::Index>(j)) / static_cast<double>(counts_[j]);
}

Eigen::MatrixXd RunningStats::theta_hat_matrix() const {
  Eigen::MatrixXd m(sums_.rows(), sums_.cols());
  for (std::size_t j = 0; j < counts_.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = theta_hat(j);
  return m;
}

Eigen::VectorXd RunningStats::mixed_theta() const {
  if (total_ == 0) return Eigen::VectorXd::Zero(sums_.rows());
  return sums_.rowwise().sum() / static_cast<double>(total_);
}

bool RunningStats::same_estimates(const RunningStats& other) const {
  return total_ == other.total_ && counts_ == other.counts_ && sums_ == other.sums_;
}

DeltaSplits delta_splits(const RadiusParams& p, double s) {
  const double s3 = s * s * s;
  const double k = static_cast<double>(p.num_arms), n = static_cast<double>(p.num_contexts);
  return {p.delta / (15.0 * k * s3), p.delta / (15.0 * n * s3), p.delta / (15.0 * k * n * s3)};
}

LogSplits log_splits(const RadiusParams& p, double s) {
  const double k = static_cast<double>(p.num_arms), n = static_cast<double>(p.num_contexts);
  const double ls = 3.0 * std::log(s);
  return {std::log(30.0 * k / p.delta) + ls, std::log(30.0 * n / p.delta) + ls,
          std::log(30.0 * k * n / p.delta) + ls};
}

double phi_term(double p, double n, double l_max, double log_term) {
  return std::min(4.0 * std::max(p, 6.25 * l_max / n * log_term), 0.25);
}

double beta_tight(double p, double n, double l_max, double log_term, BetaForm form) {
  const double phi = phi_term(p, n, l_max, log_term);
  const double a = l_max * log_term / 3.0;
  const double var = form == BetaForm::bernstein ? 2.0 * n * phi * l_max * log_term
                                                 : 2.0 * phi * l_max / n * log_term;
  return std::min((a + std::sqrt(a * a + var)) / n, 1.0);
}

RadiusTerms radius_terms(const RunningStats& stats, const RadiusParams& p) {
  RadiusTerms r;
  fill_radius_terms(stats, p, r);
  return r;
}

void fill_radius_terms(const RunningStats& stats, const RadiusParams& p, RadiusTerms& r) {
  const std::size_t n_ctx = stats.num_contexts();
  r.beta.assign(n_ctx, 0.0);
  r.phi.assign(n_ctx, 0.0);
  const double s = static_cast<double>(stats.total());
  const double d = static_cast<double>(p.dim);
  const double l = p.l_max;
  const LogSplits lg = log_splits(p, s);

  for (std::size_t j = 0; j < n_ctx; ++j) {
    const double ph = stats.p_hat(j);
    r.phi[j] = phi_term(ph, s, l, lg.d);
    if (p.mode == RadiusMode::theory) {
      r.beta[j] = std::min(2.5 * std::sqrt(2.0 * r.phi[j] * l / s * lg.d), 1.0);
    } else {
      r.beta[j] = beta_tight(ph, s, l, lg.d, p.beta_form);
    }
  }

  if (p.mode == RadiusMode::theory) {
    r.alpha = 5.0 * std::sqrt(d / s * lg.v);
    r.xi = 25.0 * std::sqrt(2.0) * static_cast<double>(p.num_contexts) * l / s * lg.m;
    return;
  }

  const double qv = d / s * lg.v;
  r.alpha = qv + std::sqrt(qv * qv + 4.0 * qv);
  double xi = 0.0;
  for (std::size_t j = 0; j < n_ctx; ++j) {
    const double ph = stats.p_hat(j);
    const double psi1 = std::max(ph, d / (4.0 * s) * lg.m);
    const double psi2 = std::max(ph, 6.25 * l / s * lg.d);
    if (psi1 > ph) {
      xi += 4.0 * r.beta[j];
    } else if (psi2 > ph) {
      const double q = d / static_cast<double>(stats.count(j)) * lg.m;
      const double xt = q + std::sqrt(q * q + 4.0 * q);
      xi += std::min(4.0, 2.0 * xt) * r.beta[j];
    } else {
      xi += 10.0 * std::sqrt(d / static_cast<double>(stats.count(j)) * lg.m) * r.beta[j];
    }
  }
  r.xi = xi;
}

double radius_from_gaps(const RadiusTerms& terms, const RadiusParams& p, const double* gaps,
                        std::size_t n) {
  double zeta = p.epsilon;
  if (p.zeta == ZetaMode::minimizer) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      num += terms.beta[j] * clip2(gaps[j]);
      den += terms.beta[j];
    }
    zeta = den > 0.0 ? -num / den : 0.0;
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += terms.beta[j] * std::abs(clip2(gaps[j]) + zeta);
  return 2.0 * (terms.alpha + terms.xi) + acc;
}

double confidence_radius(const RunningStats& stats, const RadiusParams& params, const ArmMatrix& arms,
                         std::size_t x, std::size_t x_tilde) {
  const RadiusTerms terms = radius_terms(stats, params);
  const Eigen::VectorXd diff = arms.col(static_cast<Eigen::Index>(x)) - arms.col(static_cast<Eigen::Index>(x_tilde));
  std::vector<double> gaps(stats.num_contexts());
  for (std::size_t j = 0; j < gaps.size(); ++j) gaps[j] = diff.dot(stats.theta_hat(j));
  return radius_from_gaps(terms, params, gaps.data(), gaps.size());
}

std::size_t empirical_best_arm(const RunningStats& stats, const ArmMatrix& arms) {
  const Eigen::VectorXd scores = arms.transpose() * stats.mixed_theta();
  std::size_t best = 0;
  for (Eigen::Index k = 1; k < scores.size(); ++k)
    if (scores[k] > scores[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(k);
  return best;
}

}  // namespace pslb
