#include "pslb/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pslb/errors.hpp"

namespace pslb {

namespace {

Eigen::MatrixXd info_of(const ArmMatrix& arms, const Eigen::VectorXd& w) {
  const Eigen::Index d = arms.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index k = 0; k < arms.cols(); ++k) {
    if (w[k] > 0.0) a.selfadjointView<Eigen::Lower>().rankUpdate(arms.col(k), w[k]);
  }
  return a.selfadjointView<Eigen::Lower>();
}

// Lower factor of A(w); throws when A(w) is not positive definite.
Eigen::MatrixXd factor(const ArmMatrix& arms, const Eigen::VectorXd& w) {
  Eigen::LLT<Eigen::MatrixXd> llt(info_of(arms, w));
  if (llt.info() != Eigen::Success) throw RankDeficientError("information matrix is singular");
  Eigen::MatrixXd l = llt.matrixL();
  return l;
}

Eigen::VectorXd norms_from_factor(const Eigen::MatrixXd& lower, const ArmMatrix& arms) {
  Eigen::MatrixXd y = lower.triangularView<Eigen::Lower>().solve(arms);
  return y.colwise().squaredNorm().transpose();
}

// Deterministic start: greedily pick d arms of maximal residual norm.
Eigen::VectorXd initial_weights(const ArmMatrix& arms) {
  const Eigen::Index d = arms.rows();
  const Eigen::Index k = arms.cols();
  Eigen::MatrixXd residual = arms;
  const double scale = arms.colwise().norm().maxCoeff();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::Index best = 0;
    double best_norm = residual.colwise().norm().maxCoeff(&best);
    if (!(best_norm > 1e-10 * scale)) throw RankDeficientError("arms do not span R^d");
    Eigen::VectorXd q = residual.col(best) / best_norm;
    residual -= q * (q.transpose() * residual);
    w[best] = 1.0;
  }
  return w / static_cast<double>(d);
}

// Removes arms from the support while keeping A(w) fixed, until the support
// fits in d(d+1)/2 points.
void caratheodory_reduce(const ArmMatrix& arms, Eigen::VectorXd& w) {
  const Eigen::Index d = arms.rows();
  const Eigen::Index dim = d * (d + 1) / 2;
  for (;;) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index k = 0; k < w.size(); ++k)
      if (w[k] > 0.0) support.push_back(k);
    if (static_cast<Eigen::Index>(support.size()) <= dim) return;
    Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(support.size()));
    for (std::size_t s = 0; s < support.size(); ++s) {
      const auto x = arms.col(support[s]);
      Eigen::Index r = 0;
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j) m(r++, static_cast<Eigen::Index>(s)) = x[i] * x[j];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    Eigen::VectorXd v = svd.matrixV().col(svd.matrixV().cols() - 1);
    if (v.maxCoeff() <= 0.0) v = -v;
    double step = std::numeric_limits<double>::infinity();
    std::size_t drop = 0;
    for (std::size_t s = 0; s < support.size(); ++s) {
      if (v[static_cast<Eigen::Index>(s)] > 0.0) {
        double r = w[support[s]] / v[static_cast<Eigen::Index>(s)];
        if (r < step) {
          step = r;
          drop = s;
        }
      }
    }
    for (std::size_t s = 0; s < support.size(); ++s)
      w[support[s]] = std::max(0.0, w[support[s]] - step * v[static_cast<Eigen::Index>(s)]);
    w[support[drop]] = 0.0;
    w /= w.sum();
  }
}

}  // namespace

bool cholesky_rank_one(Eigen::MatrixXd& lower, Eigen::VectorXd x, double sign) {
  const Eigen::Index n = lower.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lkk = lower(k, k);
    const double r2 = lkk * lkk + sign * x[k] * x[k];
    if (!(r2 > 0.0)) return false;
    const double r = std::sqrt(r2);
    const double c = r / lkk;
    const double s = x[k] / lkk;
    lower(k, k) = r;
    if (k + 1 < n) {
      const Eigen::Index m = n - k - 1;
      lower.col(k).tail(m) = (lower.col(k).tail(m) + sign * s * x.tail(m)) / c;
      x.tail(m) = c * x.tail(m) - s * lower.col(k).tail(m);
    }
  }
  return true;
}

Allocation make_allocation(const ArmMatrix& arms, const Eigen::VectorXd& weights) {
  Allocation a;
  a.weights = weights;
  a.info_matrix = info_of(arms, weights);
  Eigen::LLT<Eigen::MatrixXd> llt(a.info_matrix);
  if (llt.info() != Eigen::Success) throw RankDeficientError("information matrix is singular");
  a.info_inverse = llt.solve(Eigen::MatrixXd::Identity(arms.rows(), arms.rows()));
  a.info_inverse = 0.5 * (a.info_inverse + a.info_inverse.transpose()).eval();
  a.cdf.resize(weights.size());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    acc += weights[k];
    a.cdf[k] = acc;
  }
  // Guard against a final partial sum just below 1.
  for (Eigen::Index k = weights.size() - 1; k >= 0; --k) {
    if (weights[k] > 0.0) {
      for (Eigen::Index j = k; j < weights.size(); ++j) a.cdf[j] = 1.0;
      break;
    }
  }
  return a;
}

void check_allocation(const ArmMatrix& arms, const Allocation& allocation) {
  if (allocation.weights.size() != arms.cols() || allocation.cdf.size() != arms.cols() ||
      allocation.info_inverse.rows() != arms.rows() || allocation.info_inverse.cols() != arms.rows())
    throw ConfigError("allocation does not match the arm set");
}

Allocation compute_g_optimal(const ArmMatrix& arms, double tolerance) {
  DesignOptions o;
  o.tolerance = tolerance;
  return compute_g_optimal(arms, o);
}

Allocation compute_g_optimal(const ArmMatrix& arms, const DesignOptions& options) {
  const Eigen::Index d = arms.rows();
  const Eigen::Index k = arms.cols();
  if (d == 0 || k < d) throw RankDeficientError("need at least d arms spanning R^d");
  if (!(options.tolerance > 0.0)) throw ConfigError("design tolerance must be positive");
  const double dd = static_cast<double>(d);

  Eigen::VectorXd w = initial_weights(arms);
  Eigen::MatrixXd lower = factor(arms, w);
  std::size_t since_refactor = 0;
  double g = 0.0;
  bool converged = false;

  for (std::size_t iter = 0; iter <= options.max_iterations; ++iter) {
    Eigen::VectorXd omega = norms_from_factor(lower, arms);
    Eigen::Index kp = 0;
    g = omega.maxCoeff(&kp);
    Eigen::Index km = -1;
    for (Eigen::Index i = 0; i < k; ++i)
      if (w[i] > 0.0 && (km < 0 || omega[i] < omega[km])) km = i;
    const double up = g / dd - 1.0;
    const double down = 1.0 - omega[km] / dd;
    if (std::max(up, down) <= options.tolerance) {
      converged = true;
      break;
    }
    if (iter == options.max_iterations) break;

    bool ok = true;
    if (up >= down) {
      const double alpha = (g - dd) / (dd * (g - 1.0));
      w *= (1.0 - alpha);
      w[kp] += alpha;
      lower *= std::sqrt(1.0 - alpha);
      ok = cholesky_rank_one(lower, std::sqrt(alpha) * arms.col(kp), 1.0);
    } else {
      const double lam = w[km];
      const double cap = lam / (1.0 - lam);
      const double om = omega[km];
      double alpha = om > 1.0 ? std::min((dd - om) / (dd * (om - 1.0)), cap) : cap;
      const bool drop = alpha >= cap;
      w *= (1.0 + alpha);
      w[km] = drop ? 0.0 : w[km] - alpha;
      lower *= std::sqrt(1.0 + alpha);
      ok = cholesky_rank_one(lower, std::sqrt(alpha) * arms.col(km), -1.0);
    }
    if (!ok || ++since_refactor >= options.refactor_every) {
      w /= w.sum();
      lower = factor(arms, w);
      since_refactor = 0;
    }
  }
  if (!converged)
    throw ConvergenceError("G-optimal design did not converge, g = " + std::to_string(g), g);

  for (Eigen::Index i = 0; i < k; ++i)
    if (w[i] < options.prune_below) w[i] = 0.0;
  w /= w.sum();
  caratheodory_reduce(arms, w);
  return make_allocation(arms, w);
}

Eigen::VectorXd design_norms(const Allocation& allocation, const ArmMatrix& arms) {
  return (arms.transpose() * allocation.info_inverse * arms).diagonal();
}

double max_design_norm(const Allocation& allocation, const ArmMatrix& arms) {
  Eigen::LLT<Eigen::MatrixXd> llt(allocation.info_matrix);
  if (llt.info() != Eigen::Success) throw RankDeficientError("information matrix is singular");
  Eigen::MatrixXd y = llt.matrixL().solve(arms);
  return y.colwise().squaredNorm().maxCoeff();
}

std::size_t sample_arm(const Allocation& allocation, double u) {
  const Eigen::Index k = allocation.cdf.size();
  for (Eigen::Index i = 0; i < k; ++i)
    if (u < allocation.cdf[i]) return static_cast<std::size_t>(i);
  return static_cast<std::size_t>(k - 1);
}

std::size_t sample_arm(const Allocation& allocation, Stream& stream) {
  return sample_arm(allocation, stream.next_uniform());
}

TransductiveDesign transductive_design(const ArmMatrix& arms, const Eigen::MatrixXd& targets,
                                       std::size_t iterations) {
  Allocation start = compute_g_optimal(arms);
  Eigen::VectorXd w = start.weights;
  auto value_of = [&](const Eigen::VectorXd& weights, Eigen::MatrixXd* ainv_y) {
    Eigen::LLT<Eigen::MatrixXd> llt(info_of(arms, weights));
    Eigen::MatrixXd s = llt.solve(targets);
    if (ainv_y) *ainv_y = s;
    return (targets.array() * s.array()).colwise().sum().maxCoeff();
  };
  TransductiveDesign best{start, value_of(w, nullptr)};
  // Frank-Wolfe on a soft-max smoothing of the max over targets.
  for (std::size_t it = 0; it < iterations; ++it) {
    Eigen::MatrixXd s;
    const double vmax = value_of(w, &s);
    if (vmax < best.value) {
      best.value = vmax;
      best.allocation = make_allocation(arms, w);
    }
    Eigen::VectorXd vals = (targets.array() * s.array()).colwise().sum().transpose();
    const double mu = 1e-3 * vmax;
    Eigen::VectorXd pi = ((vals.array() - vmax) / mu).exp();
    pi /= pi.sum();
    // d value / d w_k = -sum_y pi_y (x_k^T A^-1 y)^2
    Eigen::MatrixXd proj = arms.transpose() * s;
    Eigen::VectorXd grad = -(proj.array().square().matrix() * pi);
    Eigen::Index kmin = 0;
    grad.minCoeff(&kmin);
    const double step = 2.0 / (static_cast<double>(it) + 3.0);
    w *= (1.0 - step);
    w[kmin] += step;
  }
  const double final_value = value_of(w, nullptr);
  if (final_value < best.value) best = {make_allocation(arms, w), final_value};
  return best;
}

}  // namespace pslb
