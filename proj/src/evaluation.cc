#include "semfusion/evaluation.h"

#include <algorithm>

#include "semfusion/error.h"

namespace semfusion {

LabelImage project_map_labels(const SurfelMap& map, const Pose& pose_wc,
                              const Intrinsics& intr, Resolution res,
                              const ProbabilityMap* baseline, double depth_max) {
  intr.validate();
  if (res.width <= 0 || res.height <= 0) {
    throw Error(Errc::kInvalidArgument, "evaluation resolution must be positive");
  }
  LabelImage native(intr.width, intr.height, 1, kVoidLabel);
  if (!map.empty()) {
    const IndexMap index = visible_set(map, pose_wc, intr, depth_max);
    const ProbabilityTable& table = map.probabilities();
    for (int y = 0; y < intr.height; ++y) {
      for (int x = 0; x < intr.width; ++x) {
        if (!index.occupied(x, y)) continue;
        const auto slot = table.slot(index.id(x, y), index.slot(x, y));
        if (!slot) continue;
        const auto row = table.row(*slot);
        native.at(x, y) = static_cast<std::uint8_t>(
            std::max_element(row.begin(), row.end()) - row.begin());
      }
    }
  }
  LabelImage out = (res.width == intr.width && res.height == intr.height)
                       ? std::move(native)
                       : resize_nearest(native, res.width, res.height);
  if (baseline != nullptr) {
    const LabelImage fallback =
        (baseline->width() == res.width && baseline->height() == res.height)
            ? baseline->argmax()
            : rescale_probability_map(*baseline, res.width, res.height).argmax();
    auto dst = out.data();
    auto src = fallback.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (dst[i] == kVoidLabel) dst[i] = src[i];
    }
  }
  return out;
}

ConfusionAccumulator::ConfusionAccumulator(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {
  if (classes == 0 || classes >= kVoidLabel) {
    throw Error(Errc::kInvalidArgument, "class count must be in [1, 254]");
  }
}

std::uint64_t ConfusionAccumulator::total() const {
  std::uint64_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::uint64_t ConfusionAccumulator::correct() const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < classes_; ++c) s += count(c, c);
  return s;
}

void ConfusionAccumulator::add(std::size_t gt, std::size_t pred, std::uint64_t n) {
  if (gt >= classes_ || pred >= classes_) {
    throw Error(Errc::kClassOutOfRange, "label outside the class range");
  }
  counts_[gt * classes_ + pred] += n;
}

void ConfusionAccumulator::accumulate(const LabelImage& predicted, const LabelImage& gt,
                                      const DepthImage& depth) {
  if (!predicted.same_size(gt) || predicted.width() != depth.width() ||
      predicted.height() != depth.height()) {
    throw Error(Errc::kDimensionMismatch, "prediction, ground truth and depth differ in size");
  }
  auto p = predicted.data();
  auto g = gt.data();
  auto d = depth.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i] == kVoidLabel || p[i] == kVoidLabel || d[i] == 0.0) {
      ++ignored_;
      continue;
    }
    add(g[i], p[i]);
  }
  ++frames_;
}

void ConfusionAccumulator::merge(const ConfusionAccumulator& other) {
  if (other.classes_ != classes_) {
    throw Error(Errc::kClassCountMismatch, "cannot merge accumulators of different size");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  ignored_ += other.ignored_;
  frames_ += other.frames_;
}

std::vector<std::optional<double>> per_class_accuracy(const ConfusionAccumulator& acc) {
  std::vector<std::optional<double>> out(acc.classes());
  for (std::size_t c = 0; c < acc.classes(); ++c) {
    std::uint64_t row = 0;
    for (std::size_t j = 0; j < acc.classes(); ++j) row += acc.count(c, j);
    if (row > 0) out[c] = static_cast<double>(acc.count(c, c)) / static_cast<double>(row);
  }
  return out;
}

double class_average_accuracy(const ConfusionAccumulator& acc) {
  double sum = 0.0;
  int n = 0;
  for (const auto& a : per_class_accuracy(acc)) {
    if (!a) continue;
    sum += *a;
    ++n;
  }
  if (n == 0) throw Error(Errc::kNoData, "no counted pixels");
  return sum / n;
}

double pixel_average_accuracy(const ConfusionAccumulator& acc) {
  const std::uint64_t total = acc.total();
  if (total == 0) throw Error(Errc::kNoData, "no counted pixels");
  return static_cast<double>(acc.correct()) / static_cast<double>(total);
}

nlohmann::json metrics_json(const ConfusionAccumulator& acc, const LabelSet& labels) {
  nlohmann::json j;
  j["classes"] = labels.names();
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& a : per_class_accuracy(acc)) {
    per_class.push_back(a ? nlohmann::json(*a) : nlohmann::json(nullptr));
  }
  j["per_class_accuracy"] = per_class;
  const bool has_data = acc.total() > 0;
  j["class_avg"] = has_data ? nlohmann::json(class_average_accuracy(acc)) : nlohmann::json(nullptr);
  j["pixel_avg"] = has_data ? nlohmann::json(pixel_average_accuracy(acc)) : nlohmann::json(nullptr);
  j["counted_pixels"] = acc.total();
  j["ignored_pixels"] = acc.ignored();
  j["frames_evaluated"] = acc.frames();
  j["void_label"] = kVoidLabel;
  j["void_policy"] =
      "ground-truth void, predicted void and zero-depth pixels are excluded from numerator "
      "and denominator; classes without ground-truth pixels are left out of class_avg";
  return j;
}

}  // namespace semfusion
