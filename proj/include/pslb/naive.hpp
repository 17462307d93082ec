#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "pslb/design.hpp"

namespace pslb {

inline constexpr double kApery = 1.2020569031595942;  // sum_n n^-3

// Running state of the uniform-design baseline: theta~_t averages
// A^-1 x_s Y_s over every pull. Scores x^T theta~ are kept as G R / t with
// G = X^T A^-1 X and R the per-arm reward sums.
class NaiveState {
 public:
  NaiveState(const ArmMatrix& arms, const Allocation& allocation, double epsilon, double delta,
             double l_max);

  void update(std::size_t arm, double reward);
  // Stopping test at the current t. Always false before t*.
  bool check();

  std::uint64_t time() const { return t_; }
  double t_star() const { return t_star_; }
  bool past_warmup() const { return static_cast<double>(t_) >= t_star_; }
  // argmax_x x^T theta~ (lowest index on ties).
  std::size_t leader() const;
  // rho~ at time t; 2 epsilon before t*.
  double rho_at(std::uint64_t t) const;
  double rho() const { return rho_at(t_); }
  Eigen::VectorXd theta() const;
  Eigen::VectorXd scores() const;

 private:
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd z_;
  Eigen::VectorXd reward_sums_;
  Eigen::VectorXd weighted_;  // gram_ * reward_sums_
  double epsilon_;
  double delta_;
  double l_max_;
  double d_;
  double k_;
  double t_star_;
  bool monotone_;
  std::uint64_t t_ = 0;
  std::uint64_t block_end_ = 0;
  double block_rho_ = 0.0;
};

}  // namespace pslb
