#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pslb/design.hpp"
#include "pslb/env.hpp"
#include "pslb/naive.hpp"
#include "pslb/rng.hpp"

namespace pslb {

struct Sample {
  std::uint32_t arm = 0;
  double reward = 0.0;
  bool operator==(const Sample&) const = default;
};

// Split-window linear change test. theta~_1 and theta~_2 average
// A^-1 x_s Y_s over the two halves; an alarm is raised when some arm
// separates them by more than the threshold.
class Detector {
 public:
  Detector(const ArmMatrix& arms, const Allocation& allocation, std::size_t window, double threshold);

  // max_x |x^T (theta~_2 - theta~_1)|, halves of equal length.
  double statistic(std::span<const Sample> first, std::span<const Sample> second) const;
  bool alarm(std::span<const Sample> first, std::span<const Sample> second) const;
  // `samples` holds exactly window() entries.
  bool alarm(std::span<const Sample> samples) const;

  std::size_t window() const { return window_; }
  double threshold() const { return threshold_; }

 private:
  Eigen::MatrixXd gram_;  // X^T A^-1 X
  std::size_t window_;
  double threshold_;
};

bool lcd(const ArmMatrix& arms, std::size_t w, double b, std::span<const Sample> samples,
         const Allocation& allocation);

// Identification windows of the contexts seen so far; index j (1-based) is
// the j-th distinct context in order of first appearance.
class CaArchive {
 public:
  std::size_t size() const { return entries_.size(); }
  const std::vector<Sample>& entry(std::size_t index) const { return entries_.at(index - 1); }
  std::size_t append(std::vector<Sample> samples);
  // Matches `fresh` against stored windows in index order. The first entry
  // that raises no alarm is overwritten and its index returned; otherwise a
  // new entry is appended.
  std::size_t align(const std::vector<Sample>& fresh, const Detector& detector);

 private:
  std::vector<std::vector<Sample>> entries_;
};

// Pulls window/2 arms from `env` and aligns them. A return of N + 1 means
// more contexts than the algorithm was told about.
std::size_t lca(Env& env, Stream& arm_stream, const Allocation& allocation, const Detector& detector,
                CaArchive& archive);

struct LcaPlusResult {
  std::size_t index = 0;
  std::optional<std::size_t> early_stop_arm;
};

// As lca, with each pull also fed to `naive`. If its stopping test passes
// mid-window the alignment is abandoned: the archive is left untouched and
// index size()+1 is returned with the arm.
LcaPlusResult lca_plus(Env& env, Stream& arm_stream, const Allocation& allocation,
                       const Detector& detector, CaArchive& archive, NaiveState& naive);

}  // namespace pslb
