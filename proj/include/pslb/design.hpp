#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "pslb/rng.hpp"

namespace pslb {

// Arms are stored column-wise: a d x K matrix.
using ArmMatrix = Eigen::MatrixXd;

struct Allocation {
  Eigen::VectorXd weights;      // one per arm, sums to 1
  Eigen::MatrixXd info_matrix;  // A(lambda) = sum_x lambda_x x x^T
  Eigen::MatrixXd info_inverse;
  Eigen::VectorXd cdf;          // running sums of weights, last entry exactly 1
};

struct DesignOptions {
  double tolerance = 1e-6;
  std::size_t max_iterations = 100000;
  std::size_t refactor_every = 256;
  double prune_below = 1e-12;
};

// Builds A(lambda) and its inverse for the given weights.
// Throws RankDeficientError when A(lambda) is singular.
Allocation make_allocation(const ArmMatrix& arms, const Eigen::VectorXd& weights);
// Throws ConfigError unless `allocation` was built for an arm set of this shape.
void check_allocation(const ArmMatrix& arms, const Allocation& allocation);

// G-optimal design by Wolfe-Atwood (Frank-Wolfe with away steps) from a
// Kumar-Yildirim style start. On return max_x ||x||^2_{A^-1} <= d(1 + tolerance)
// and the support has at most d(d+1)/2 arms.
Allocation compute_g_optimal(const ArmMatrix& arms, const DesignOptions& options = {});
Allocation compute_g_optimal(const ArmMatrix& arms, double tolerance);

// ||x_k||^2_{A^-1} for every arm.
Eigen::VectorXd design_norms(const Allocation& allocation, const ArmMatrix& arms);
double max_design_norm(const Allocation& allocation, const ArmMatrix& arms);

// One uniform draw, inverted against the weight CDF.
std::size_t sample_arm(const Allocation& allocation, Stream& stream);
std::size_t sample_arm(const Allocation& allocation, double u);

struct TransductiveDesign {
  Allocation allocation;
  double value = 0.0;  // max_y ||y||^2_{A^-1}
};

// Approximately minimizes max_y ||y||^2_{A(lambda)^-1} over allocations on
// `arms`, where y ranges over the columns of `targets`.
TransductiveDesign transductive_design(const ArmMatrix& arms, const Eigen::MatrixXd& targets,
                                       std::size_t iterations = 4000);

// In-place rank-one update (sign > 0) or downdate (sign < 0) of a lower
// Cholesky factor: L L^T +/- x x^T. Returns false if a downdate loses
// positive definiteness; L is then unspecified.
bool cholesky_rank_one(Eigen::MatrixXd& lower, Eigen::VectorXd x, double sign);

}  // namespace pslb
