#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semfusion/dataset.h"
#include "semfusion/geometry.h"
#include "semfusion/image.h"
#include "semfusion/labels.h"

namespace semfusion {

// Faces of the axis-aligned room box, in axis order.
enum class Face { kXMin = 0, kXMax, kYMin, kYMax, kZMin, kZMax };

struct SurfaceStyle {
  std::uint8_t label = 0;
  Rgb colour{128, 128, 128};
};

// Axis-aligned rectangle lying on one face. In-plane coordinates are the two
// remaining world axes in ascending order: x faces use (y, z), y faces
// (x, z) and z faces (x, y).
struct ScenePatch {
  Face face = Face::kXMin;
  Eigen::Vector2d min = Eigen::Vector2d::Zero();
  Eigen::Vector2d max = Eigen::Vector2d::Zero();
  SurfaceStyle style;
};

struct CameraPath {
  enum class Kind { kOrbit, kSweep };
  Kind kind = Kind::kOrbit;
  // Orbit: camera circles `centre` (x, y) at `height`, looking through the
  // circle's centre at `look_height`.
  Eigen::Vector2d centre = Eigen::Vector2d::Zero();
  double radius = 1.0;
  double height = 1.5;
  double look_height = 1.5;
  double start_deg = 0.0;
  double sweep_deg = 360.0;
  // Sweep: camera translates from `start` to `end` looking along `direction`.
  Eigen::Vector3d start = Eigen::Vector3d::Zero();
  Eigen::Vector3d end = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitX();
};

struct SceneSpec {
  Eigen::Vector3d box_min = Eigen::Vector3d::Zero();
  Eigen::Vector3d box_max = Eigen::Vector3d::Ones();
  std::vector<std::string> class_names;
  std::array<SurfaceStyle, 6> faces{};
  std::vector<ScenePatch> patches;  // later patches paint over earlier ones
  CameraPath path;
  double frame_interval = 1.0 / 30.0;  // seconds between frames

  // 6 x 5 x 3 m office with nine classes (books, ceiling, chair, floor,
  // objects, painting, table, wall, window). The camera follows a 50 degree
  // arc of an orbit facing the furnished wall.
  static SceneSpec Office();
  // JSON description; see README for the schema.
  static SceneSpec FromJson(const std::filesystem::path& path);

  LabelSet labels() const { return LabelSet(class_names); }
  // Camera pose of frame `k` out of `n_frames`.
  Pose camera_pose(int k, int n_frames) const;
  // Throws Errc::kDegenerateSpec (empty box, zero-area or off-face patches,
  // labels outside class_names).
  void validate() const;
};

struct SurfaceHit {
  Face face = Face::kXMin;
  double t = 0.0;  // ray parameter
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  SurfaceStyle style;
};

// First intersection of origin + t * dir with the inside of the box.
// `origin` must lie strictly inside.
std::optional<SurfaceHit> ray_cast(const SceneSpec& spec, const Eigen::Vector3d& origin,
                                   const Eigen::Vector3d& dir);

// Ideal rendering: depth is the z-depth of the first hit, rgb and labels the
// colour and class of the surface there.
FrameRecord render_frame(const SceneSpec& spec, const Intrinsics& intr,
                         const Pose& pose_wc);

struct RenderedSequence {
  std::vector<FrameRecord> frames;
  Trajectory trajectory;
};

// Throws Errc::kDegenerateSpec if the spec is invalid or a camera position
// leaves the box.
RenderedSequence render_scene(const SceneSpec& spec, const Intrinsics& intr,
                              int n_frames);

// 320x240, fx = fy = 200.
Intrinsics synthetic_intrinsics();

}  // namespace semfusion
