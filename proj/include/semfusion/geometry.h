#pragma once

#include <filesystem>
#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace semfusion {

// Points closer to the camera plane than this are treated as behind it.
inline constexpr double kMinVisibleDepth = 1e-6;

struct Intrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;

  // Throws Errc::kInvalidArgument unless fx, fy > 0 and the principal point
  // lies strictly inside the image.
  void validate() const;

  // Intrinsics for the same camera resampled to another resolution.
  Intrinsics scaled(int new_width, int new_height) const;

  static Intrinsics Default() { return {}; }
  // Plain-text key=value pairs: fx, fy, cx, cy, width, height. Missing keys
  // keep their default.
  static Intrinsics FromFile(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

// Rigid transform. Used as T_WC (camera to world) for camera poses.
class Pose {
 public:
  Pose() = default;
  // Throws Errc::kInvalidArgument if `rotation` is not a proper rotation
  // within 1e-9.
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static Pose Identity() { return {}; }
  static Pose FromQuaternion(const Eigen::Quaterniond& q,
                             const Eigen::Vector3d& translation);
  static Pose Translation(const Eigen::Vector3d& translation);
  // Camera at `eye` with optical axis (+z) through `target`; image +y points
  // as close to -`up` as possible.
  static Pose LookAt(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                     const Eigen::Vector3d& up);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation_); }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation_ * p + translation_;
  }

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

// std::nullopt when the point is not in front of the camera (z <= 1e-6 m).
std::optional<Pixel> project(const Intrinsics& intr,
                             const Eigen::Vector3d& point_cam);

// Throws Errc::kNonPositiveDepth for depth <= 0.
Eigen::Vector3d back_project(const Intrinsics& intr, const Pixel& px,
                             double depth);

Pose invert(const Pose& pose);
Pose compose(const Pose& a, const Pose& b);  // a * b
inline Eigen::Vector3d transform(const Pose& pose, const Eigen::Vector3d& p) {
  return pose * p;
}

}  // namespace semfusion
