#include "pslb/changedetect.hpp"

#include <cmath>

#include "pslb/errors.hpp"

namespace pslb {

Detector::Detector(const ArmMatrix& arms, const Allocation& allocation, std::size_t window,
                   double threshold)
    : gram_(arms.transpose() * allocation.info_inverse * arms), window_(window), threshold_(threshold) {
  if (window == 0 || window % 2 != 0) throw ConfigError("detection window must be positive and even");
}

double Detector::statistic(std::span<const Sample> first, std::span<const Sample> second) const {
  Eigen::VectorXd diff = Eigen::VectorXd::Zero(gram_.rows());
  for (const Sample& s : first) diff[s.arm] -= s.reward;
  for (const Sample& s : second) diff[s.arm] += s.reward;
  const double scale = 1.0 / static_cast<double>(first.size());
  return (gram_ * diff).cwiseAbs().maxCoeff() * scale;
}

bool Detector::alarm(std::span<const Sample> first, std::span<const Sample> second) const {
  return statistic(first, second) > threshold_;
}

bool Detector::alarm(std::span<const Sample> samples) const {
  const std::size_t half = samples.size() / 2;
  return alarm(samples.first(half), samples.subspan(half));
}

bool lcd(const ArmMatrix& arms, std::size_t w, double b, std::span<const Sample> samples,
         const Allocation& allocation) {
  if (samples.size() != w) throw ConfigError("lcd needs exactly w samples");
  return Detector(arms, allocation, w, b).alarm(samples);
}

std::size_t CaArchive::append(std::vector<Sample> samples) {
  entries_.push_back(std::move(samples));
  return entries_.size();
}

std::size_t CaArchive::align(const std::vector<Sample>& fresh, const Detector& detector) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!detector.alarm(fresh, entries_[i])) {
      entries_[i] = fresh;
      return i + 1;
    }
  }
  return append(fresh);
}

std::size_t lca(Env& env, Stream& arm_stream, const Allocation& allocation, const Detector& detector,
                CaArchive& archive) {
  std::vector<Sample> fresh(detector.window() / 2);
  for (Sample& s : fresh) {
    const std::size_t arm = sample_arm(allocation, arm_stream);
    s = {static_cast<std::uint32_t>(arm), env.step(arm).reward};
  }
  return archive.align(fresh, detector);
}

LcaPlusResult lca_plus(Env& env, Stream& arm_stream, const Allocation& allocation,
                       const Detector& detector, CaArchive& archive, NaiveState& naive) {
  std::vector<Sample> fresh(detector.window() / 2);
  for (Sample& s : fresh) {
    const std::size_t arm = sample_arm(allocation, arm_stream);
    s = {static_cast<std::uint32_t>(arm), env.step(arm).reward};
    naive.update(arm, s.reward);
    if (naive.check()) return {archive.size() + 1, naive.leader()};
  }
  return {archive.align(fresh, detector), std::nullopt};
}

}  // namespace pslb
