#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "pslb/design.hpp"

namespace pslb {

// Per-context estimator sums over Exp-phase pulls, with an undo journal so
// the last few steps can be rolled back exactly.
class RunningStats {
 public:
  RunningStats(const ArmMatrix& arms, const Allocation& allocation, std::size_t num_contexts,
               std::size_t journal_capacity);

  // Exp-phase sample attributed to `context`.
  void update(std::size_t context, std::size_t arm, double reward);
  // A step that does not touch the estimates (CD or CA pull). Still occupies
  // a journal slot so reversion depth is counted in time steps.
  void record_noop();
  // Undoes the last `steps` journal entries and clears the journal.
  // Throws ReversionDepthError when fewer entries are held.
  void revert(std::size_t steps);
  void clear_journal();

  std::size_t num_contexts() const { return counts_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(sums_.rows()); }
  std::uint64_t count(std::size_t j) const { return counts_[j]; }
  std::uint64_t total() const { return total_; }
  double p_hat(std::size_t j) const;
  Eigen::VectorXd theta_hat(std::size_t j) const;
  // d x N matrix of theta_hat columns.
  Eigen::MatrixXd theta_hat_matrix() const;
  // Theta_hat p_hat, which equals (sum_j u_j) / S.
  Eigen::VectorXd mixed_theta() const;
  const Eigen::MatrixXd& sums() const { return sums_; }
  std::size_t journal_size() const { return journal_size_; }
  std::size_t journal_capacity() const { return journal_ctx_.size(); }

  bool same_estimates(const RunningStats& other) const;

 private:
  void push(std::int64_t context);

  Eigen::MatrixXd z_;     // d x K, A^-1 x_k
  Eigen::MatrixXd sums_;  // d x N
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
  // Ring buffer: context touched (-1 for no-op) and that column's prior value.
  std::vector<std::int64_t> journal_ctx_;
  std::vector<double> journal_prev_;
  std::size_t journal_head_ = 0;  // next write position
  std::size_t journal_size_ = 0;
};

enum class RadiusMode { theory, tight };
enum class ZetaMode { minimizer, epsilon };
// bernstein: variance term 2 S phi L ln(.) under the root (dimensionally
// consistent). printed: 2 phi L / S ln(.) as typeset for the tight radius.
enum class BetaForm { bernstein, printed };

struct RadiusParams {
  std::size_t num_arms = 0;      // K
  std::size_t num_contexts = 0;  // N
  std::size_t dim = 0;           // d
  double l_max = 1.0;
  double delta = 0.05;
  RadiusMode mode = RadiusMode::tight;
  ZetaMode zeta = ZetaMode::minimizer;
  BetaForm beta_form = BetaForm::bernstein;
  double epsilon = 0.0;  // used by ZetaMode::epsilon
};

struct DeltaSplits {
  double v = 0.0;  // delta / (15 K S^3)
  double d = 0.0;  // delta / (15 N S^3)
  double m = 0.0;  // delta / (15 K N S^3)
};
DeltaSplits delta_splits(const RadiusParams& params, double s);
// ln(2 / delta_x) evaluated without forming the tiny delta.
struct LogSplits {
  double v = 0.0, d = 0.0, m = 0.0;
};
LogSplits log_splits(const RadiusParams& params, double s);

// The pair-independent pieces of rho_t at the current statistics.
struct RadiusTerms {
  double alpha = 0.0;
  double xi = 0.0;
  std::vector<double> beta;
  std::vector<double> phi;
};
RadiusTerms radius_terms(const RunningStats& stats, const RadiusParams& params);
// Same, reusing the storage in `out`.
void fill_radius_terms(const RunningStats& stats, const RadiusParams& params, RadiusTerms& out);

// Tight-mode beta for a share p estimated from n time steps with
// segments no longer than l_max; log_term = ln(2/delta).
double beta_tight(double p, double n, double l_max, double log_term, BetaForm form);
double phi_term(double p, double n, double l_max, double log_term);

inline double clip2(double v) { return v < -2.0 ? -2.0 : (v > 2.0 ? 2.0 : v); }

// rho_t given per-context gap estimates Delta_hat_j(x, x~) (clipped inside).
double radius_from_gaps(const RadiusTerms& terms, const RadiusParams& params,
                        const double* gaps, std::size_t n);

// rho_t(x, x~) for arm indices x, x~.
double confidence_radius(const RunningStats& stats, const RadiusParams& params,
                         const ArmMatrix& arms, std::size_t x, std::size_t x_tilde);

// Lowest-index maximizer of x^T Theta_hat p_hat.
std::size_t empirical_best_arm(const RunningStats& stats, const ArmMatrix& arms);

}  // namespace pslb
