#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "semfusion/image.h"

namespace semfusion {

// Per-pixel class probabilities, pixel-major with classes contiguous.
class ProbabilityMap {
 public:
  ProbabilityMap() = default;
  // All rows start uniform.
  ProbabilityMap(int width, int height, std::size_t classes);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t classes() const { return classes_; }

  std::span<float> row(int x, int y) {
    return {probs_.data() + offset(x, y), classes_};
  }
  std::span<const float> row(int x, int y) const {
    return {probs_.data() + offset(x, y), classes_};
  }
  std::span<const float> data() const { return probs_; }
  std::span<float> data() { return probs_; }

  // Argmax class per pixel (lowest index on ties).
  LabelImage argmax() const;

  bool operator==(const ProbabilityMap&) const = default;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * classes_;
  }

  int width_ = 0;
  int height_ = 0;
  std::size_t classes_ = 0;
  std::vector<float> probs_;
};

struct LoadedProbabilityMap {
  ProbabilityMap map;
  // Rows whose sum was outside [0.999, 1.001] but inside [0.99, 1.01] and
  // were renormalised.
  std::size_t renormalised_rows = 0;
};

// SFPM: "SFPM", u32 version = 1, u32 width, u32 height, u32 classes, then
// width*height*classes little-endian float32. Raises Errc::kBadMagic,
// kTruncatedFile, kTrailingBytes, kRowNotNormalised.
LoadedProbabilityMap load_probability_map(const std::filesystem::path& path);
void write_probability_map(const std::filesystem::path& path,
                           const ProbabilityMap& map);

enum class OracleMode {
  kSoft,     // row = confusion row (+ jitter)
  kSampled,  // one class drawn from the confusion row, one-hot smoothed
};

struct ConfusionModel {
  // classes x classes, row-stochastic; row = true class.
  std::vector<std::vector<double>> matrix;
  double sharpness = 0.0;  // jitter magnitude; 0 disables jitter
  std::uint64_t seed = 0;
  OracleMode mode = OracleMode::kSoft;
  // Mass spread uniformly over all classes in sampled mode.
  double sampled_smoothing = 0.05;

  std::size_t classes() const { return matrix.size(); }
  // `diagonal` on the diagonal, (1 - diagonal) / (classes - 1) elsewhere.
  static ConfusionModel Symmetric(std::size_t classes, double diagonal);
  // Throws Errc::kInvalidArgument unless square and row-stochastic (1e-9).
  void validate() const;
};

// Stand-in classifier driven by ground truth. Void pixels get uniform rows.
// The output depends only on (gt, model, stream, pixel coordinates); use a
// different `stream` per frame for independent noise.
// Throws Errc::kClassOutOfRange for non-void labels >= classes.
ProbabilityMap synthetic_oracle(const LabelImage& gt, const ConfusionModel& model,
                                std::uint64_t stream = 0);

// Nearest-neighbour resampling of whole rows; source index
// floor((x + 0.5) * src / dst).
ProbabilityMap rescale_probability_map(const ProbabilityMap& pm, int new_width,
                                       int new_height);

}  // namespace semfusion
