#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "semfusion/geometry.h"
#include "semfusion/image.h"
#include "semfusion/labels.h"
#include "semfusion/prediction.h"
#include "semfusion/surfel_map.h"

namespace semfusion {

struct Resolution {
  int width = 320;
  int height = 240;
  bool operator==(const Resolution&) const = default;
};

// Map labels seen from `pose_wc`: argmax of the visible surfel, else the
// argmax of `baseline`, else void. The map is projected at the native
// resolution of `intr` and downsampled by nearest neighbour to `res`;
// `baseline` is resampled to `res` when its size differs.
LabelImage project_map_labels(const SurfelMap& map, const Pose& pose_wc,
                              const Intrinsics& intr, Resolution res,
                              const ProbabilityMap* baseline = nullptr,
                              double depth_max = 8.0);

class ConfusionAccumulator {
 public:
  explicit ConfusionAccumulator(std::size_t classes);

  std::size_t classes() const { return classes_; }
  // Row = ground truth, column = prediction.
  std::uint64_t count(std::size_t gt, std::size_t pred) const {
    return counts_[gt * classes_ + pred];
  }
  std::uint64_t ignored() const { return ignored_; }
  std::uint64_t total() const;
  std::uint64_t correct() const;
  std::size_t frames() const { return frames_; }

  // Pixels with void ground truth, void prediction or zero depth go to
  // ignored(). Throws Errc::kDimensionMismatch on size mismatch and
  // Errc::kClassOutOfRange for labels >= classes() other than void.
  void accumulate(const LabelImage& predicted, const LabelImage& gt,
                  const DepthImage& depth);
  void add(std::size_t gt, std::size_t pred, std::uint64_t n = 1);
  // Throws Errc::kClassCountMismatch.
  void merge(const ConfusionAccumulator& other);

  bool operator==(const ConfusionAccumulator&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t ignored_ = 0;
  std::size_t frames_ = 0;
};

// Mean per-class accuracy over classes with ground-truth pixels.
// Throws Errc::kNoData if nothing was counted.
double class_average_accuracy(const ConfusionAccumulator& acc);
// trace / total. Throws Errc::kNoData.
double pixel_average_accuracy(const ConfusionAccumulator& acc);
// nullopt for classes without ground-truth pixels.
std::vector<std::optional<double>> per_class_accuracy(const ConfusionAccumulator& acc);

// {classes, per_class_accuracy, class_avg, pixel_avg, ignored_pixels,
//  counted_pixels, frames_evaluated, void_label, void_policy}
nlohmann::json metrics_json(const ConfusionAccumulator& acc, const LabelSet& labels);

}  // namespace semfusion
