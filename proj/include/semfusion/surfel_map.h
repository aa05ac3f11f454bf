#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "semfusion/geometry.h"
#include "semfusion/image.h"
#include "semfusion/labels.h"

namespace semfusion {

using SurfelId = std::uint64_t;

struct Surfel {
  SurfelId id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // world frame, metres
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();   // unit, world frame
  Eigen::Vector3d colour = Eigen::Vector3d::Zero();    // RGB in [0, 255]
  double radius = 0.0;
  double confidence = 0.0;
  int created_at = 0;
  int last_seen = 0;
};

struct MapParams {
  double depth_max = 8.0;         // metres
  double depth_eps = 0.05;        // association gate, metres
  double normal_eps_deg = 20.0;   // association gate, degrees
  double stable_conf = 3.0;
  int probation = 30;             // frames
};

struct IntegrationStats {
  std::size_t created = 0;
  std::size_t fused = 0;
  std::size_t skipped_missing_depth = 0;
  std::size_t skipped_out_of_range = 0;
};

// Id-keyed store of label distributions, kept in ascending id order with the
// class probabilities packed contiguously.
class ProbabilityTable {
 public:
  explicit ProbabilityTable(std::size_t classes) : classes_(classes) {}

  std::size_t classes() const { return classes_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<SurfelId>& ids() const { return ids_; }
  bool contains(SurfelId id) const { return slot(id).has_value(); }

  std::optional<std::size_t> slot(SurfelId id) const;
  // Like slot(), but checks `hint` first.
  std::optional<std::size_t> slot(SurfelId id, std::size_t hint) const {
    if (hint < ids_.size() && ids_[hint] == id) return hint;
    return slot(id);
  }

  std::span<double> row(std::size_t slot) {
    return {probs_.data() + slot * classes_, classes_};
  }
  std::span<const double> row(std::size_t slot) const {
    return {probs_.data() + slot * classes_, classes_};
  }

  // `id` must be larger than every id already stored.
  void append(SurfelId id, const LabelDistribution& dist);
  LabelDistribution get(SurfelId id) const;
  // Replaces the stored row with normalize(probs).
  void set(SurfelId id, std::span<const double> probs);
  // `sorted_ids` ascending; absent ids are ignored. Returns entries removed.
  std::size_t erase(std::span<const SurfelId> sorted_ids);

  bool operator==(const ProbabilityTable&) const = default;

 private:
  std::size_t classes_;
  std::vector<SurfelId> ids_;
  std::vector<double> probs_;
};

// Per-pixel z-buffer winner of a projection of the map into one view.
class IndexMap {
 public:
  static constexpr SurfelId kNone = std::numeric_limits<SurfelId>::max();

  IndexMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  bool occupied(int x, int y) const { return id(x, y) != kNone; }
  SurfelId id(int x, int y) const { return ids_[index(x, y)]; }
  double depth(int x, int y) const { return depth_[index(x, y)]; }
  // Position of the surfel in SurfelMap::surfels() when the map was built.
  std::uint32_t slot(int x, int y) const { return slots_[index(x, y)]; }
  std::size_t occupied_count() const;

  void set(int x, int y, SurfelId id, std::uint32_t slot, double depth);

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_;
  int height_;
  std::vector<SurfelId> ids_;
  std::vector<std::uint32_t> slots_;
  std::vector<double> depth_;
};

class SurfelMap {
 public:
  explicit SurfelMap(LabelSet labels);

  const LabelSet& labels() const { return labels_; }
  std::size_t class_count() const { return labels_.count(); }
  std::size_t size() const { return surfels_.size(); }
  bool empty() const { return surfels_.empty(); }
  // Frames integrated so far; the next integrated frame gets this index.
  int frame_counter() const { return frame_counter_; }

  // Ascending id order.
  const std::vector<Surfel>& surfels() const { return surfels_; }
  const ProbabilityTable& probabilities() const { return table_; }
  ProbabilityTable& probabilities() { return table_; }

  const Surfel* find(SurfelId id) const;
  std::optional<std::size_t> slot(SurfelId id) const;
  LabelDistribution distribution(SurfelId id) const { return table_.get(id); }

  // True iff the surfel store and the probability table hold the same ids.
  bool table_in_sync() const;

  // Adds a surfel with a fresh id (the id field of `surfel` is ignored).
  SurfelId add(Surfel surfel, const LabelDistribution& dist);

  // Point-based fusion of one RGB-D frame. Depth in metres, 0 = missing.
  // Throws Errc::kResolutionMismatch if image sizes differ from `intr`.
  IntegrationStats integrate_frame(const RgbImage& rgb, const DepthImage& depth,
                                   const Pose& pose_wc, const Intrinsics& intr,
                                   const MapParams& params);

  // Deletes surfels with confidence < stable_conf that are older than the
  // probation period, from both the store and the probability table.
  std::vector<SurfelId> remove_unstable(int current_frame,
                                        const MapParams& params);
  // Deletes the given ids (any order); unknown ids are ignored.
  std::vector<SurfelId> remove(std::vector<SurfelId> ids);

 private:
  LabelSet labels_;
  std::vector<Surfel> surfels_;
  ProbabilityTable table_;
  SurfelId next_id_ = 0;
  int frame_counter_ = 0;
};

// Projects every surfel into the view and keeps the nearest one per pixel.
// Surfels behind the camera, outside the image or deeper than `depth_max`
// are left out. Equal depths resolve to the lower id.
IndexMap visible_set(const SurfelMap& map, const Pose& pose_wc,
                     const Intrinsics& intr, double depth_max);

}  // namespace semfusion
