#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace semfusion {

using ClassId = std::uint16_t;

// Sentinel used in label images for "no class" (unlabelled ground truth or no
// prediction available).
inline constexpr std::uint8_t kVoidLabel = 255;

// Entries are floored at this value whenever a distribution is normalised so
// that a single bad prediction can never veto a class forever.
inline constexpr double kProbabilityFloor = 1e-12;
// Weights whose maximum falls below this are treated as all-zero.
inline constexpr double kAllZeroThreshold = 1e-300;

class LabelSet {
 public:
  explicit LabelSet(std::vector<std::string> names);

  static LabelSet FromFile(const std::filesystem::path& path);
  // bed, books, ceiling, chair, floor, furniture, objects, painting, sofa,
  // table, tv, wall, window.
  static LabelSet Nyu13();

  std::size_t count() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  // Index of `name`, or count() if absent.
  std::size_t find(const std::string& name) const;

  bool operator==(const LabelSet&) const = default;

 private:
  std::vector<std::string> names_;
};

class LabelDistribution {
 public:
  LabelDistribution() = default;

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  const std::vector<double>& vector() const { return probs_; }

  bool operator==(const LabelDistribution&) const = default;

 private:
  friend LabelDistribution uniform(std::size_t count);
  friend LabelDistribution normalize(std::span<const double> weights);

  explicit LabelDistribution(std::vector<double> probs)
      : probs_(std::move(probs)) {}

  std::vector<double> probs_;
};

struct ArgmaxResult {
  std::size_t index = 0;
  double probability = 0.0;
};

LabelDistribution uniform(std::size_t count);
inline LabelDistribution uniform(const LabelSet& labels) {
  return uniform(labels.count());
}

// Proportional rescaling to unit mass, with every entry floored at
// kProbabilityFloor (floored entries keep exactly the floor and the remaining
// mass is shared proportionally among the others). Inputs whose largest
// weight is below kAllZeroThreshold yield the uniform distribution and bump
// all_zero_count().
LabelDistribution normalize(std::span<const double> weights);

// In-place variant used on hot paths; `probs` must have at least one entry.
// Returns false if the all-zero fallback was taken.
bool normalize_in_place(std::span<double> probs);

// Lowest index attaining the maximum.
ArgmaxResult argmax_label(std::span<const double> probs);
inline ArgmaxResult argmax_label(const LabelDistribution& dist) {
  return argmax_label(dist.probs());
}

// Process-wide diagnostic counter of all-zero normalisations.
std::uint64_t all_zero_count();

}  // namespace semfusion
