#pragma once

#include <cstddef>
#include <string>

#include "pslb/env.hpp"

namespace pslb {

// Hard execution cap of the piecewise-stationary algorithm.
double tau_star(double num_contexts, double num_arms, double l_max, double epsilon, double delta);
// False-alarm budget per LCD call. Throws DomainError unless it lies in (0, 1).
double delta_fae(double gamma, double delta, double tau_star, double num_arms);
// Detection threshold for window w. Throws DomainError unless delta_fae in (0, 1).
double threshold_b(double w, double d, double delta_fae);
// Threshold implied by an instance and (epsilon, delta, gamma, w).
double threshold_b_for(const Instance& instance, double epsilon, double delta, double gamma, double w);

struct AssumptionCheck {
  double delta_c = 0.0;
  double b = 0.0;
  bool separation_ok = false;  // 2b <= Delta_c
  bool window_ok = false;      // 3 w gamma <= L_min
  bool ok() const { return separation_ok && window_ok; }
};
AssumptionCheck check_assumption(const Instance& instance, double b, double w, double gamma);

// A maximum over arm pairs, with the maximizing (x_eps, x). `found` is false
// when the pair set is empty.
struct PairMax {
  double value = 0.0;
  std::size_t x_eps = kNoIndex;
  std::size_t x = kNoIndex;
  bool found = false;
};

struct HardnessTerms {
  PairMax t_v;           // d/(Delta(x*,x)+eps)^2 ln(1/delta)
  PairMax t_d;           // H_DE ln(1/delta)
  PairMax t_r;           // N L_max/(Delta(x*,x)+eps) ln(1/delta)
  PairMax h_de;          // L_max H_bar / (Delta(x*,x)+eps)^2
  PairMax h_bar;         // (sum_j sqrt(min{16 p_j, 1/4}) |Delta_j(x_eps,x)+eps|)^2
  PairMax psebai_total;  // max over pairs of T_V + T_D + T_R
  double t_v_naive = 0.0;  // d/(eps+Delta_min)^2 ln(1/delta)
  double t_d_naive = 0.0;  // L_max/(eps+Delta_min)^2 ln(1/delta)
  double psebai_plus = 0.0;  // min(psebai_total, t_v_naive + t_d_naive)
  double delta_min = 0.0;
};

// Per-pair quantities; x_eps must be epsilon-best and x differ from both
// x_eps and the best arm.
double h_bar(const Instance& instance, std::size_t x_eps, std::size_t x, double epsilon);
double h_de(const Instance& instance, std::size_t x_eps, std::size_t x, double epsilon);

HardnessTerms hardness_terms(const Instance& instance, double epsilon, double delta);

struct NcBound {
  double value = 0.0;
  double ratio = 0.0;  // value / ln(1/(4 delta))
  std::size_t x = kNoIndex;
};
// Closed-form lower bound on the number of observed changepoints.
// Throws DomainError unless delta < 1/4.
NcBound nc_lower_bound(const Instance& instance, double epsilon, double delta);

// min over allocations v of max_{x != x*} ||x* - x||^2_{A(v)^-1} / (Delta(x*,x)+eps)^2,
// with one allocation shared across contexts.
double singleton_lower_bound(const Instance& instance, double epsilon, std::size_t iterations = 4000);

struct BoundReport {
  double tau_star = 0.0;
  double delta_fae = 0.0;
  double b_threshold = 0.0;
  AssumptionCheck assumption;
  HardnessTerms hardness;
  NcBound n_c;
};

BoundReport bound_report(const Instance& instance, double epsilon, double delta, double gamma, double w);

// Aligned human-readable table and key=value lines.
std::string format_report_text(const BoundReport& report);
std::string format_report_kv(const BoundReport& report);

}  // namespace pslb
