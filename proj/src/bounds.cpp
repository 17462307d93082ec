#include "pslb/bounds.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "pslb/design.hpp"
#include "pslb/errors.hpp"

namespace pslb {

double tau_star(double n, double k, double l_max, double eps, double delta) {
  return 38400.0 * std::log(80.0) * n * l_max / (eps * eps) * std::log(n * n * k * l_max / (delta * eps * eps));
}

double delta_fae(double gamma, double delta, double ts, double k) {
  const double v = gamma * delta / (4.0 * ts * ts * k);
  if (!(v > 0.0 && v < 1.0)) throw DomainError("delta_FAE must lie in (0, 1)");
  return v;
}

double threshold_b(double w, double d, double dfae) {
  if (!(dfae > 0.0 && dfae < 1.0)) throw DomainError("delta_FAE must lie in (0, 1)");
  if (!(w > 0.0)) throw DomainError("window must be positive");
  const double lg = std::log(2.0 / dfae);
  const double q = 8.0 * d / (3.0 * w) * lg;
  return q + std::sqrt(q * q + 24.0 * d / w * lg);
}

double threshold_b_for(const Instance& inst, double eps, double delta, double gamma, double w) {
  const double k = static_cast<double>(inst.num_arms());
  const double ts = tau_star(static_cast<double>(inst.num_contexts()), k, static_cast<double>(inst.l_max), eps, delta);
  return threshold_b(w, static_cast<double>(inst.dim()), delta_fae(gamma, delta, ts, k));
}

AssumptionCheck check_assumption(const Instance& inst, double b, double w, double gamma) {
  AssumptionCheck c;
  c.delta_c = context_separation(inst);
  c.b = b;
  c.separation_ok = 2.0 * b <= c.delta_c;
  c.window_ok = 3.0 * w * gamma <= static_cast<double>(inst.l_min);
  return c;
}

namespace {

struct Gaps {
  Eigen::MatrixXd per_context;  // K x N means
  Eigen::VectorXd mu;
  std::size_t star;
};

Gaps gaps_of(const Instance& inst) {
  return {inst.mean_table(), expected_returns(inst), best_arm(inst)};
}

double h_bar_of(const Gaps& g, const Instance& inst, std::size_t xe, std::size_t x, double eps) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < g.per_context.cols(); ++j) {
    const double dj = g.per_context(static_cast<Eigen::Index>(xe), j) - g.per_context(static_cast<Eigen::Index>(x), j);
    acc += std::sqrt(std::min(16.0 * inst.probs[j], 0.25)) * std::abs(dj + eps);
  }
  return acc * acc;
}

void keep_max(PairMax& m, double v, std::size_t xe, std::size_t x) {
  if (!m.found || v > m.value) m = {v, xe, x, true};
}

}  // namespace

double h_bar(const Instance& inst, std::size_t xe, std::size_t x, double eps) {
  return h_bar_of(gaps_of(inst), inst, xe, x, eps);
}

double h_de(const Instance& inst, std::size_t xe, std::size_t x, double eps) {
  const Gaps g = gaps_of(inst);
  const double gap = g.mu[static_cast<Eigen::Index>(g.star)] - g.mu[static_cast<Eigen::Index>(x)] + eps;
  return static_cast<double>(inst.l_max) * h_bar_of(g, inst, xe, x, eps) / (gap * gap);
}

HardnessTerms hardness_terms(const Instance& inst, double eps, double delta) {
  if (!(eps > 0.0)) throw DomainError("epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  const Gaps g = gaps_of(inst);
  const double ln = std::log(1.0 / delta);
  const double d = static_cast<double>(inst.dim());
  const double l = static_cast<double>(inst.l_max);
  const double n = static_cast<double>(inst.num_contexts());
  const double top = g.mu[static_cast<Eigen::Index>(g.star)];
  const std::size_t k = inst.num_arms();

  HardnessTerms h;
  for (std::size_t xe = 0; xe < k; ++xe) {
    if (g.mu[static_cast<Eigen::Index>(xe)] < top - eps) continue;
    for (std::size_t x = 0; x < k; ++x) {
      if (x == xe || x == g.star) continue;
      const double gap = top - g.mu[static_cast<Eigen::Index>(x)] + eps;
      const double hb = h_bar_of(g, inst, xe, x, eps);
      const double hde = l * hb / (gap * gap);
      const double tv = d / (gap * gap) * ln;
      const double td = hde * ln;
      const double tr = n * l / gap * ln;
      keep_max(h.h_bar, hb, xe, x);
      keep_max(h.h_de, hde, xe, x);
      keep_max(h.t_v, tv, xe, x);
      keep_max(h.t_d, td, xe, x);
      keep_max(h.t_r, tr, xe, x);
      keep_max(h.psebai_total, tv + td + tr, xe, x);
    }
  }
  h.delta_min = min_gap(inst);
  const double gn = eps + h.delta_min;
  h.t_v_naive = d / (gn * gn) * ln;
  h.t_d_naive = l / (gn * gn) * ln;
  const double naive = h.t_v_naive + h.t_d_naive;
  h.psebai_plus = h.psebai_total.found ? std::min(h.psebai_total.value, naive) : naive;
  return h;
}

NcBound nc_lower_bound(const Instance& inst, double eps, double delta) {
  if (!(delta > 0.0 && delta < 0.25)) throw DomainError("N_C needs delta in (0, 1/4)");
  const Gaps g = gaps_of(inst);
  const double top = g.mu[static_cast<Eigen::Index>(g.star)];
  NcBound out;
  bool any = false;
  for (std::size_t x = 0; x < inst.num_arms(); ++x) {
    if (x == g.star) continue;
    const double gap = top - g.mu[static_cast<Eigen::Index>(x)] + eps;
    double acc = 0.0;
    for (Eigen::Index j = 0; j < g.per_context.cols(); ++j) {
      const double dj = g.per_context(static_cast<Eigen::Index>(g.star), j) - g.per_context(static_cast<Eigen::Index>(x), j) + eps;
      acc += inst.probs[j] * dj * dj;
    }
    const double r = acc / (gap * gap);
    if (!any || r > out.ratio) {
      out.ratio = r;
      out.x = x;
      any = true;
    }
  }
  out.value = out.ratio * std::log(1.0 / (4.0 * delta));
  return out;
}

double singleton_lower_bound(const Instance& inst, double eps, std::size_t iterations) {
  const Gaps g = gaps_of(inst);
  const double top = g.mu[static_cast<Eigen::Index>(g.star)];
  const std::size_t k = inst.num_arms();
  if (k < 2) return 0.0;
  Eigen::MatrixXd targets(inst.arms.rows(), static_cast<Eigen::Index>(k - 1));
  Eigen::Index c = 0;
  for (std::size_t x = 0; x < k; ++x) {
    if (x == g.star) continue;
    const double gap = top - g.mu[static_cast<Eigen::Index>(x)] + eps;
    targets.col(c++) = (inst.arms.col(static_cast<Eigen::Index>(g.star)) - inst.arms.col(static_cast<Eigen::Index>(x))) / gap;
  }
  return transductive_design(inst.arms, targets, iterations).value;
}

BoundReport bound_report(const Instance& inst, double eps, double delta, double gamma, double w) {
  BoundReport r;
  const double k = static_cast<double>(inst.num_arms());
  r.tau_star = tau_star(static_cast<double>(inst.num_contexts()), k, static_cast<double>(inst.l_max), eps, delta);
  r.delta_fae = delta_fae(gamma, delta, r.tau_star, k);
  r.b_threshold = threshold_b(w, static_cast<double>(inst.dim()), r.delta_fae);
  r.assumption = check_assumption(inst, r.b_threshold, w, gamma);
  r.hardness = hardness_terms(inst, eps, delta);
  if (delta < 0.25) r.n_c = nc_lower_bound(inst, eps, delta);
  return r;
}

namespace {

std::string pair_label(const PairMax& m) {
  if (!m.found) return "(none)";
  return fmt::format("(x_eps={}, x={})", m.x_eps + 1, m.x + 1);
}

std::string pair_value(const PairMax& m) { return m.found ? fmt::format("{:.9g}", m.value) : "empty"; }

}  // namespace

std::string format_report_text(const BoundReport& r) {
  const HardnessTerms& h = r.hardness;
  std::ostringstream os;
  auto line = [&](const std::string& k, const std::string& v, const std::string& note = "") {
    os << fmt::format("{:<14} {:>18}  {}\n", k, v, note);
  };
  line("tau_star", fmt::format("{:.9g}", r.tau_star));
  line("delta_fae", fmt::format("{:.9g}", r.delta_fae));
  line("b", fmt::format("{:.9g}", r.b_threshold));
  line("delta_c", fmt::format("{:.9g}", r.assumption.delta_c),
       r.assumption.separation_ok ? "2b <= delta_c" : "2b > delta_c (violated)");
  line("window", r.assumption.window_ok ? "ok" : "violated", "3 w gamma <= L_min");
  line("delta_min", fmt::format("{:.9g}", h.delta_min));
  line("T_V", pair_value(h.t_v), pair_label(h.t_v));
  line("T_D", pair_value(h.t_d), pair_label(h.t_d));
  line("T_R", pair_value(h.t_r), pair_label(h.t_r));
  line("H_DE", pair_value(h.h_de), pair_label(h.h_de));
  line("H_bar", pair_value(h.h_bar), pair_label(h.h_bar));
  line("T_psebai", pair_value(h.psebai_total), pair_label(h.psebai_total));
  line("T_V^N", fmt::format("{:.9g}", h.t_v_naive));
  line("T_D^N", fmt::format("{:.9g}", h.t_d_naive));
  line("T_psebai+", fmt::format("{:.9g}", h.psebai_plus));
  if (r.n_c.x != kNoIndex) line("N_C", fmt::format("{:.9g}", r.n_c.value), fmt::format("(x={})", r.n_c.x + 1));
  return os.str();
}

std::string format_report_kv(const BoundReport& r) {
  const HardnessTerms& h = r.hardness;
  std::ostringstream os;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << '=' << v << '\n'; };
  auto num = [](double v) { return fmt::format("{:.9g}", v); };
  auto pair = [&](const std::string& k, const PairMax& m) {
    kv(k, pair_value(m));
    kv(k + ".x_eps", m.found ? std::to_string(m.x_eps + 1) : "none");
    kv(k + ".x", m.found ? std::to_string(m.x + 1) : "none");
  };
  kv("tau_star", num(r.tau_star));
  kv("delta_fae", num(r.delta_fae));
  kv("b", num(r.b_threshold));
  kv("delta_c", num(r.assumption.delta_c));
  kv("separation_ok", r.assumption.separation_ok ? "1" : "0");
  kv("window_ok", r.assumption.window_ok ? "1" : "0");
  kv("delta_min", num(h.delta_min));
  pair("T_V", h.t_v);
  pair("T_D", h.t_d);
  pair("T_R", h.t_r);
  pair("H_DE", h.h_de);
  pair("H_bar", h.h_bar);
  pair("T_psebai", h.psebai_total);
  kv("T_V_naive", num(h.t_v_naive));
  kv("T_D_naive", num(h.t_d_naive));
  kv("T_psebai_plus", num(h.psebai_plus));
  if (r.n_c.x != kNoIndex) {
    kv("N_C", num(r.n_c.value));
    kv("N_C.x", std::to_string(r.n_c.x + 1));
  }
  return os.str();
}

}  // namespace pslb
