#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "pslb/design.hpp"
#include "pslb/rng.hpp"

namespace pslb {

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

struct NoiseModel {
  enum class Kind { none, uniform, clipped_gaussian };
  Kind kind = Kind::uniform;
  double sigma = 1.0;  // clipped_gaussian only

  // Draws one sample in [-1, 1]; consumes a variable number of draws.
  double sample(Stream& stream) const;
  std::string name() const;
};

// Segment-length law. two_point: L_min with probability p_min, else L_max.
// fixed: cycles through `lengths`.
struct Schedule {
  enum class Kind { two_point, fixed };
  Kind kind = Kind::two_point;
  double p_min = 0.8;
  std::vector<std::size_t> lengths;
};

struct Instance {
  ArmMatrix arms;          // d x K
  Eigen::MatrixXd thetas;  // d x N
  Eigen::VectorXd probs;   // N
  std::size_t l_min = 1;
  std::size_t l_max = 1;
  Schedule schedule;
  NoiseModel noise;

  std::size_t dim() const { return static_cast<std::size_t>(arms.rows()); }
  std::size_t num_arms() const { return static_cast<std::size_t>(arms.cols()); }
  std::size_t num_contexts() const { return static_cast<std::size_t>(thetas.cols()); }

  // K x N table of x_k^T theta_j.
  Eigen::MatrixXd mean_table() const;

  // Throws ConfigError on any violated invariant.
  void validate() const;
};

Eigen::VectorXd expected_returns(const Instance& instance);
double expected_return(const Instance& instance, std::size_t arm);
// Lowest-index maximizer of the expected return.
std::size_t best_arm(const Instance& instance);
std::vector<std::size_t> eps_best_set(const Instance& instance, double epsilon);
bool is_eps_best(const Instance& instance, std::size_t arm, double epsilon);
// mu* minus the largest expected return among the other arms (0 when K = 1).
double min_gap(const Instance& instance);
// min over distinct context pairs of max_x |x^T (theta_j - theta_j')|.
double context_separation(const Instance& instance);

// 2d-1 arms, 2d-2 equiprobable contexts. Defaults follow the desk-scale profile.
Instance make_example_5_1(std::size_t d, double phi);
// d unit-vector arms, N = d contexts.
Instance make_example_I_2(std::size_t d, double a, double b, double p, double epsilon = 0.0);

Instance instance_from_json(const nlohmann::json& j);
nlohmann::json instance_to_json(const Instance& instance);
Instance load_instance(const std::string& path);

enum class Dynamics { hidden, index_revealed, full_info };

struct Observation {
  double reward = 0.0;                 // NaN for advance()
  std::size_t context = kNoIndex;      // index_revealed and full_info
  const double* theta = nullptr;       // full_info: pointer to d entries
  bool changepoint = false;            // full_info
};

// One trial's environment. The segment lengths and the contexts are a
// function of `schedule_seed` alone, so algorithms run on the same seed see
// the same changepoints; the noise stream is keyed separately.
class Env {
 public:
  Env(const Instance& instance, std::uint64_t schedule_seed, std::uint64_t noise_seed,
      Dynamics dynamics = Dynamics::hidden);

  Observation step(std::size_t arm);
  // Advances time without a pull (full_info only).
  Observation advance();

  std::uint64_t time() const { return t_; }
  std::size_t segments() const { return segments_; }
  std::size_t current_context() const { return context_; }
  std::uint64_t next_changepoint() const { return next_cp_; }
  const std::vector<std::uint64_t>& changepoints() const { return changepoints_; }
  const Instance& instance() const { return *instance_; }
  Dynamics dynamics() const { return dynamics_; }

  // Random access into the schedule (segment index from 0).
  std::size_t segment_length(std::size_t l) const;
  std::size_t segment_context(std::size_t l) const;

 private:
  void tick(Observation& obs);

  const Instance* instance_;
  Dynamics dynamics_;
  Eigen::MatrixXd means_;  // K x N
  Eigen::VectorXd context_cdf_;
  Stream lengths_;
  Stream contexts_;
  Stream noise_;
  std::uint64_t t_ = 0;
  std::uint64_t next_cp_ = 1;
  std::size_t segments_ = 0;
  std::size_t context_ = kNoIndex;
  std::vector<std::uint64_t> changepoints_;
};

}  // namespace pslb
