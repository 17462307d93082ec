#include "pslb/naive.hpp"

#include <cmath>
#include <limits>

namespace pslb {

namespace {
constexpr std::uint64_t kBlock = 4096;
}

NaiveState::NaiveState(const ArmMatrix& arms, const Allocation& allocation, double epsilon,
                       double delta, double l_max)
    : gram_(arms.transpose() * allocation.info_inverse * arms),
      z_(allocation.info_inverse * arms),
      reward_sums_(Eigen::VectorXd::Zero(arms.cols())),
      weighted_(Eigen::VectorXd::Zero(arms.cols())),
      epsilon_(epsilon),
      delta_(delta),
      l_max_(l_max),
      d_(static_cast<double>(arms.rows())),
      k_(static_cast<double>(arms.cols())) {
  t_star_ = 3.0 * d_ * std::log(6.0 * d_ * k_ * kApery / delta_);
  // ln(c t^3)/t decreases for t >= 1 once ln c > 3.
  monotone_ = std::log(4.0 * k_ * kApery / delta_) > 3.0;
}

void NaiveState::update(std::size_t arm, double reward) {
  ++t_;
  reward_sums_[static_cast<Eigen::Index>(arm)] += reward;
  weighted_ += reward * gram_.col(static_cast<Eigen::Index>(arm));
}

double NaiveState::rho_at(std::uint64_t t) const {
  const double tt = static_cast<double>(t);
  if (tt < t_star_) return 2.0 * epsilon_;
  const double lg = std::log(4.0 * k_ * kApery * tt * tt * tt / delta_);
  return std::sqrt(8.0 * l_max_ / tt * lg) + 5.0 * std::sqrt(d_ / tt * lg);
}

std::size_t NaiveState::leader() const {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < weighted_.size(); ++k)
    if (weighted_[k] > weighted_[best]) best = k;
  return static_cast<std::size_t>(best);
}

bool NaiveState::check() {
  if (static_cast<double>(t_) < t_star_) return false;
  const Eigen::Index n = weighted_.size();
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < n; ++k)
    if (weighted_[k] > weighted_[best]) best = k;
  double second = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k)
    if (k != best && weighted_[k] > second) second = weighted_[k];
  if (n == 1) return true;
  const double inv_t = 1.0 / static_cast<double>(t_);
  const double top = weighted_[best] * inv_t;
  const double next = second * inv_t;
  if (monotone_) {
    // rho~ is decreasing, so rho~(block end) bounds every rho~ in the block
    // from below; skip the exact test while even that bound fails.
    if (t_ > block_end_ || block_end_ == 0) {
      block_end_ = t_ + kBlock;
      block_rho_ = rho_at(block_end_);
    }
    if (top - next + epsilon_ < 2.0 * block_rho_ - 1e-9) return false;
  }
  const double r = rho_at(t_);
  return top - r + epsilon_ >= next + r;
}

Eigen::VectorXd NaiveState::theta() const {
  if (t_ == 0) return Eigen::VectorXd::Zero(z_.rows());
  return z_ * reward_sums_ / static_cast<double>(t_);
}

Eigen::VectorXd NaiveState::scores() const {
  if (t_ == 0) return Eigen::VectorXd::Zero(weighted_.size());
  return weighted_ / static_cast<double>(t_);
}

}  // namespace pslb
