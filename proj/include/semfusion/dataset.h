#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "semfusion/geometry.h"
#include "semfusion/image.h"

namespace semfusion {

struct FrameRecord {
  int index = 0;
  double timestamp = 0.0;  // seconds
  std::string name;        // file stem
  RgbImage rgb;
  DepthImage depth;        // metres, 0 = missing
  std::optional<LabelImage> gt_labels;
};

struct TimedPose {
  double timestamp = 0.0;
  Pose pose;  // T_WC
};

class Trajectory {
 public:
  Trajectory() = default;
  // Throws Errc::kNonMonotonicTimestamps unless strictly increasing.
  explicit Trajectory(std::vector<TimedPose> poses);

  const std::vector<TimedPose>& poses() const { return poses_; }
  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }

  // TUM layout: "timestamp tx ty tz qx qy qz qw".
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<TimedPose> poses_;
};

// Parses a TUM trajectory; '#' comments and blank lines are skipped.
// Quaternions within 1e-3 of unit norm are renormalised, others rejected.
// Errors: kMalformedLine, kNonMonotonicTimestamps, kBadQuaternion.
Trajectory load_trajectory(const std::filesystem::path& path);

// Pose with the nearest timestamp if within `tolerance` seconds; ties go to
// the earlier pose.
std::optional<Pose> associate_pose(const Trajectory& trajectory, double timestamp,
                                   double tolerance = 0.02);

// Reads sequence_dir/{rgb,depth,labels}. Files pair up by stem; the stem is
// the timestamp in decimal seconds. Frames come out in timestamp order.
class SequenceReader {
 public:
  // Throws Errc::kMissingPair if an rgb file has no depth file or vice versa.
  SequenceReader(const std::filesystem::path& dir, double depth_scale = 1000.0);

  std::size_t size() const { return entries_.size(); }
  const std::filesystem::path& dir() const { return dir_; }
  bool has_labels() const { return has_labels_; }

  // Next frame, or nullopt at the end. Errc::kUnreadableImage on bad files.
  std::optional<FrameRecord> next();
  FrameRecord load(std::size_t i) const;
  void rewind() { cursor_ = 0; }

 private:
  struct Entry {
    double timestamp;
    std::string stem;
    std::filesystem::path rgb, depth;
    std::optional<std::filesystem::path> labels;
  };

  std::filesystem::path dir_;
  double depth_scale_;
  bool has_labels_ = false;
  std::vector<Entry> entries_;
  std::size_t cursor_ = 0;
};

// Writes frames as rgb/<t>.ppm, depth/<t>.pgm (16-bit, depth * depth_scale),
// labels/<t>.pgm plus trajectory.txt and intrinsics.txt.
void write_sequence(const std::filesystem::path& dir,
                    const std::vector<FrameRecord>& frames,
                    const Trajectory& trajectory, const Intrinsics& intr,
                    double depth_scale = 1000.0);

// Timestamp formatted the way sequence file stems are written.
std::string timestamp_stem(double timestamp);

}  // namespace semfusion
