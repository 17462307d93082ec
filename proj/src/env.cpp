#include "pslb/env.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pslb/errors.hpp"

namespace pslb {

using nlohmann::json;

double NoiseModel::sample(Stream& stream) const {
  switch (kind) {
    case Kind::none:
      return 0.0;
    case Kind::uniform:
      return 2.0 * stream.next_uniform() - 1.0;
    case Kind::clipped_gaussian: {
      // Density proportional to exp(-x^2 / 2 sigma^2) on [-1, 1].
      if (sigma >= 0.5) {
        const double inv = 1.0 / (2.0 * sigma * sigma);
        for (;;) {
          const double x = 2.0 * stream.next_uniform() - 1.0;
          if (stream.next_uniform() < std::exp(-x * x * inv)) return x;
        }
      }
      for (;;) {
        const double x = sigma * stream.next_normal();
        if (std::abs(x) <= 1.0) return x;
      }
    }
  }
  return 0.0;
}

std::string NoiseModel::name() const {
  switch (kind) {
    case Kind::none:
      return "none";
    case Kind::uniform:
      return "uniform";
    case Kind::clipped_gaussian:
      return "clipped_gaussian";
  }
  return "?";
}

Eigen::MatrixXd Instance::mean_table() const { return arms.transpose() * thetas; }

void Instance::validate() const {
  const auto d = arms.rows();
  if (d == 0 || arms.cols() == 0) throw ConfigError("instance has no arms");
  if (thetas.rows() != d) throw ConfigError("theta dimension differs from arm dimension");
  if (thetas.cols() == 0) throw ConfigError("instance has no contexts");
  if (probs.size() != thetas.cols()) throw ConfigError("probs length differs from context count");
  if ((probs.array() < 0.0).any()) throw ConfigError("negative context probability");
  if (std::abs(probs.sum() - 1.0) > 1e-12) throw ConfigError("context probabilities do not sum to 1");
  if (l_min == 0 || l_min > l_max) throw ConfigError("need 0 < L_min <= L_max");
  if ((mean_table().array().abs() > 1.0 + 1e-12).any())
    throw ConfigError("|x^T theta| exceeds 1 for some arm and context");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(arms);
  if (lu.rank() < d) throw ConfigError("arms do not span R^d");
  if (schedule.kind == Schedule::Kind::two_point) {
    if (!(schedule.p_min >= 0.0 && schedule.p_min <= 1.0))
      throw ConfigError("schedule p_min outside [0, 1]");
  } else {
    if (schedule.lengths.empty()) throw ConfigError("fixed schedule needs lengths");
    for (auto len : schedule.lengths)
      if (len < l_min || len > l_max) throw ConfigError("fixed segment length outside [L_min, L_max]");
  }
  if (noise.kind == NoiseModel::Kind::clipped_gaussian && !(noise.sigma > 0.0))
    throw ConfigError("clipped_gaussian sigma must be positive");
}

Eigen::VectorXd expected_returns(const Instance& instance) {
  return instance.mean_table() * instance.probs;
}

double expected_return(const Instance& instance, std::size_t arm) {
  return instance.arms.col(static_cast<Eigen::Index>(arm)).dot(instance.thetas * instance.probs);
}

std::size_t best_arm(const Instance& instance) {
  Eigen::VectorXd mu = expected_returns(instance);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < mu.size(); ++k)
    if (mu[k] > mu[best]) best = k;
  return static_cast<std::size_t>(best);
}

std::vector<std::size_t> eps_best_set(const Instance& instance, double epsilon) {
  Eigen::VectorXd mu = expected_returns(instance);
  const double top = mu.maxCoeff();
  std::vector<std::size_t> out;
  for (Eigen::Index k = 0; k < mu.size(); ++k)
    if (mu[k] >= top - epsilon) out.push_back(static_cast<std::size_t>(k));
  return out;
}

bool is_eps_best(const Instance& instance, std::size_t arm, double epsilon) {
  if (arm >= instance.num_arms()) return false;
  Eigen::VectorXd mu = expected_returns(instance);
  return mu[static_cast<Eigen::Index>(arm)] >= mu.maxCoeff() - epsilon;
}

double min_gap(const Instance& instance) {
  Eigen::VectorXd mu = expected_returns(instance);
  const std::size_t star = best_arm(instance);
  double second = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < mu.size(); ++k)
    if (static_cast<std::size_t>(k) != star) second = std::max(second, mu[k]);
  return std::isfinite(second) ? mu[static_cast<Eigen::Index>(star)] - second : 0.0;
}

double context_separation(const Instance& instance) {
  const Eigen::MatrixXd m = instance.mean_table();
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m.cols(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      if ((instance.thetas.col(i) - instance.thetas.col(j)).norm() == 0.0) continue;
      best = std::min(best, (m.col(i) - m.col(j)).cwiseAbs().maxCoeff());
    }
  return std::isfinite(best) ? best : 0.0;
}

Instance make_example_5_1(std::size_t d, double phi) {
  if (d < 2) throw ConfigError("example 5.1 needs d >= 2");
  if (!(phi >= 0.0 && phi < std::acos(-1.0) / 4.0)) throw ConfigError("example 5.1 needs phi in [0, pi/4)");
  const auto dd = static_cast<Eigen::Index>(d);
  const double c = std::cos(phi), s = std::sin(phi);
  Instance inst;
  inst.arms = Eigen::MatrixXd::Zero(dd, 2 * dd - 1);
  for (Eigen::Index i = 0; i < dd; ++i) inst.arms(i, i) = 1.0;
  for (Eigen::Index i = 1; i < dd; ++i) {
    inst.arms(0, dd + i - 1) = c;
    inst.arms(i, dd + i - 1) = s;
  }
  inst.thetas = Eigen::MatrixXd::Zero(dd, 2 * dd - 2);
  for (Eigen::Index j = 1; j < dd; ++j) {
    inst.thetas(0, 2 * (j - 1)) = c;
    inst.thetas(j, 2 * (j - 1)) = s;
    inst.thetas(0, 2 * (j - 1) + 1) = c;
    inst.thetas(j, 2 * (j - 1) + 1) = -s;
  }
  inst.probs = Eigen::VectorXd::Constant(2 * dd - 2, 1.0 / static_cast<double>(2 * d - 2));
  inst.l_min = 3000;
  inst.l_max = 5000;
  return inst;
}

Instance make_example_I_2(std::size_t d, double a, double b, double p, double epsilon) {
  if (d < 2) throw ConfigError("example I.2 needs d >= 2");
  if (!(epsilon >= 0.0 && a > epsilon && b > a && b - a > epsilon && b <= 1.0))
    throw ConfigError("example I.2 needs 1 >= b > a > eps and b - a > eps");
  const double n = static_cast<double>(d);
  if (!(p > 0.0 && (n - 1.0) * p <= 1.0)) throw ConfigError("example I.2 needs p in (0, 1/(N-1)]");
  if (d > 2 && !(p < (a - epsilon) / ((n - 2.0) * b)))
    throw ConfigError("example I.2 needs p < (a - eps)/((N - 2) b)");
  const auto dd = static_cast<Eigen::Index>(d);
  Instance inst;
  inst.arms = Eigen::MatrixXd::Identity(dd, dd);
  inst.thetas = Eigen::MatrixXd::Zero(dd, dd);
  inst.thetas(0, 0) = a;
  for (Eigen::Index j = 1; j < dd; ++j) {
    inst.thetas.col(j).setConstant(b);
    inst.thetas(0, j) = a;
    inst.thetas(j, j) = 0.0;
  }
  inst.probs = Eigen::VectorXd::Constant(dd, p);
  inst.probs[0] = 1.0 - (n - 1.0) * p;
  inst.l_min = 3000;
  inst.l_max = 5000;
  return inst;
}

namespace {

Eigen::MatrixXd columns_from(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty()) throw ConfigError(std::string("instance: '") + what + "' must be a nonempty array");
  const std::size_t d = rows.at(0).size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != d) throw ConfigError(std::string("instance: ragged '") + what + "'");
    for (std::size_t i = 0; i < d; ++i)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[k][i].get<double>();
  }
  return m;
}

json rows_of(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    json row = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) row.push_back(m(i, k));
    out.push_back(row);
  }
  return out;
}

}  // namespace

Instance instance_from_json(const json& j) {
  Instance inst;
  if (j.contains("example")) {
    const json& e = j.at("example");
    const std::string name = e.at("name").get<std::string>();
    if (name == "5.1") {
      inst = make_example_5_1(e.value("d", 2), e.value("phi", std::acos(-1.0) / 8.0));
    } else if (name == "I.2") {
      inst = make_example_I_2(e.at("d").get<std::size_t>(), e.at("a").get<double>(),
                              e.at("b").get<double>(), e.at("p").get<double>(),
                              e.value("eps", 0.0));
    } else {
      throw ConfigError("unknown example '" + name + "' (valid: 5.1, I.2)");
    }
  } else {
    inst.arms = columns_from(j.at("arms"), "arms");
    inst.thetas = columns_from(j.at("thetas"), "thetas");
    const auto& pr = j.at("probs");
    inst.probs.resize(static_cast<Eigen::Index>(pr.size()));
    for (std::size_t i = 0; i < pr.size(); ++i) inst.probs[static_cast<Eigen::Index>(i)] = pr[i].get<double>();
  }
  inst.l_min = j.value("lmin", inst.l_min);
  inst.l_max = j.value("lmax", inst.l_max);
  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    const std::string kind = s.value("kind", "two_point");
    if (kind == "two_point") {
      inst.schedule.kind = Schedule::Kind::two_point;
      inst.schedule.p_min = s.value("p_min", 0.8);
    } else if (kind == "fixed") {
      inst.schedule.kind = Schedule::Kind::fixed;
      inst.schedule.lengths = s.at("lengths").get<std::vector<std::size_t>>();
    } else {
      throw ConfigError("unknown schedule kind '" + kind + "' (valid: two_point, fixed)");
    }
  }
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    const std::string kind = n.is_string() ? n.get<std::string>() : n.value("kind", "uniform");
    if (kind == "none") {
      inst.noise.kind = NoiseModel::Kind::none;
    } else if (kind == "uniform") {
      inst.noise.kind = NoiseModel::Kind::uniform;
    } else if (kind == "clipped_gaussian") {
      inst.noise.kind = NoiseModel::Kind::clipped_gaussian;
      inst.noise.sigma = n.is_object() ? n.value("sigma", 1.0) : 1.0;
    } else {
      throw ConfigError("unknown noise kind '" + kind + "' (valid: none, uniform, clipped_gaussian)");
    }
  }
  inst.validate();
  return inst;
}

json instance_to_json(const Instance& inst) {
  json j;
  j["arms"] = rows_of(inst.arms);
  j["thetas"] = rows_of(inst.thetas);
  j["probs"] = std::vector<double>(inst.probs.data(), inst.probs.data() + inst.probs.size());
  j["lmin"] = inst.l_min;
  j["lmax"] = inst.l_max;
  if (inst.schedule.kind == Schedule::Kind::two_point)
    j["schedule"] = {{"kind", "two_point"}, {"p_min", inst.schedule.p_min}};
  else
    j["schedule"] = {{"kind", "fixed"}, {"lengths", inst.schedule.lengths}};
  j["noise"] = {{"kind", inst.noise.name()}};
  if (inst.noise.kind == NoiseModel::Kind::clipped_gaussian) j["noise"]["sigma"] = inst.noise.sigma;
  return j;
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file " + path);
  return instance_from_json(json::parse(in));
}

Env::Env(const Instance& instance, std::uint64_t schedule_seed, std::uint64_t noise_seed,
         Dynamics dynamics)
    : instance_(&instance),
      dynamics_(dynamics),
      means_(instance.mean_table()),
      lengths_(schedule_seed, Substream::segment_lengths),
      contexts_(schedule_seed, Substream::contexts),
      noise_(noise_seed, Substream::noise) {
  context_cdf_.resize(instance.probs.size());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < instance.probs.size(); ++j) {
    acc += instance.probs[j];
    context_cdf_[j] = acc;
  }
}

std::size_t Env::segment_length(std::size_t l) const {
  const Schedule& s = instance_->schedule;
  if (s.kind == Schedule::Kind::fixed) return s.lengths[l % s.lengths.size()];
  return lengths_.uniform_at(l) < s.p_min ? instance_->l_min : instance_->l_max;
}

std::size_t Env::segment_context(std::size_t l) const {
  const double u = contexts_.uniform_at(l);
  const Eigen::Index n = context_cdf_.size();
  for (Eigen::Index j = 0; j < n; ++j)
    if (u < context_cdf_[j] && instance_->probs[j] > 0.0) return static_cast<std::size_t>(j);
  for (Eigen::Index j = n - 1; j >= 0; --j)
    if (instance_->probs[j] > 0.0) return static_cast<std::size_t>(j);
  return 0;
}

void Env::tick(Observation& obs) {
  ++t_;
  if (t_ == next_cp_) {
    context_ = segment_context(segments_);
    next_cp_ += segment_length(segments_);
    ++segments_;
    changepoints_.push_back(t_);
    obs.changepoint = true;
  }
  if (dynamics_ != Dynamics::hidden) obs.context = context_;
  if (dynamics_ == Dynamics::full_info)
    obs.theta = instance_->thetas.data() + static_cast<Eigen::Index>(context_) * instance_->thetas.rows();
  if (dynamics_ != Dynamics::full_info) obs.changepoint = false;
}

Observation Env::step(std::size_t arm) {
  if (arm >= instance_->num_arms()) throw std::out_of_range("arm index out of range");
  Observation obs;
  tick(obs);
  obs.reward = means_(static_cast<Eigen::Index>(arm), static_cast<Eigen::Index>(context_)) +
               instance_->noise.sample(noise_);
  return obs;
}

Observation Env::advance() {
  if (dynamics_ != Dynamics::full_info)
    throw DynamicsMismatchError("advance() without a pull requires full_info dynamics");
  Observation obs;
  tick(obs);
  obs.reward = std::numeric_limits<double>::quiet_NaN();
  return obs;
}

}  // namespace pslb
