#include "semfusion/geometry.h"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "semfusion/error.h"

namespace semfusion {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(Errc::kInvalidArgument, "focal lengths must be positive");
  }
  if (width < 1 || height < 1) {
    throw Error(Errc::kInvalidArgument, "image size must be positive");
  }
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw Error(Errc::kInvalidArgument,
                "principal point must lie inside the image");
  }
}

Intrinsics Intrinsics::scaled(int new_width, int new_height) const {
  const double sx = static_cast<double>(new_width) / width;
  const double sy = static_cast<double>(new_height) / height;
  Intrinsics out;
  out.fx = fx * sx;
  out.fy = fy * sy;
  // Pixel centres sit at integer coordinates, so the principal point maps
  // through (c + 0.5) * s - 0.5.
  out.cx = (cx + 0.5) * sx - 0.5;
  out.cy = (cy + 0.5) * sy - 0.5;
  out.width = new_width;
  out.height = new_height;
  return out;
}

Intrinsics Intrinsics::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::kIoFailure, "cannot open intrinsics " + path.string());
  }
  Intrinsics intr;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw Error(Errc::kMalformedLine,
                  path.string() + ":" + std::to_string(line_no));
    }
    std::istringstream key_stream(line.substr(0, eq));
    std::istringstream value_stream(line.substr(eq + 1));
    std::string key;
    double value = 0.0;
    key_stream >> key;
    if (!(value_stream >> value)) {
      throw Error(Errc::kMalformedLine,
                  path.string() + ":" + std::to_string(line_no));
    }
    if (key == "fx") intr.fx = value;
    else if (key == "fy") intr.fy = value;
    else if (key == "cx") intr.cx = value;
    else if (key == "cy") intr.cy = value;
    else if (key == "width") intr.width = static_cast<int>(value);
    else if (key == "height") intr.height = static_cast<int>(value);
    else {
      throw Error(Errc::kMalformedLine, "unknown intrinsics key '" + key + "'");
    }
  }
  intr.validate();
  return intr;
}

void Intrinsics::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::kIoFailure, "cannot write " + path.string());
  out.precision(17);
  out << "fx=" << fx << "\nfy=" << fy << "\ncx=" << cx << "\ncy=" << cy
      << "\nwidth=" << width << "\nheight=" << height << "\n";
}

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  const double ortho_err =
      (rotation_.transpose() * rotation_ - Eigen::Matrix3d::Identity())
          .cwiseAbs()
          .maxCoeff();
  if (!(ortho_err <= 1e-9) || !(std::abs(rotation_.determinant() - 1.0) <= 1e-9)) {
    throw Error(Errc::kInvalidArgument, "rotation is not orthonormal");
  }
  if (!translation_.allFinite()) {
    throw Error(Errc::kInvalidArgument, "translation is not finite");
  }
}

Pose Pose::FromQuaternion(const Eigen::Quaterniond& q,
                          const Eigen::Vector3d& translation) {
  return Pose(q.normalized().toRotationMatrix(), translation);
}

Pose Pose::Translation(const Eigen::Vector3d& translation) {
  return Pose(Eigen::Matrix3d::Identity(), translation);
}

Pose Pose::LookAt(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                  const Eigen::Vector3d& up) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d x = z.cross(up);
  if (x.norm() < 1e-12) {
    throw Error(Errc::kInvalidArgument, "look direction parallel to up");
  }
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Pose(r, eye);
}

std::optional<Pixel> project(const Intrinsics& intr,
                             const Eigen::Vector3d& point_cam) {
  const double z = point_cam.z();
  if (!(z > kMinVisibleDepth)) return std::nullopt;
  return Pixel{intr.fx * point_cam.x() / z + intr.cx,
               intr.fy * point_cam.y() / z + intr.cy};
}

Eigen::Vector3d back_project(const Intrinsics& intr, const Pixel& px,
                             double depth) {
  if (!(depth > 0.0)) {
    throw Error(Errc::kNonPositiveDepth,
                "depth " + std::to_string(depth) + " at pixel (" +
                    std::to_string(px.u) + ", " + std::to_string(px.v) + ")");
  }
  return {depth * (px.u - intr.cx) / intr.fx,
          depth * (px.v - intr.cy) / intr.fy, depth};
}

Pose invert(const Pose& pose) {
  const Eigen::Matrix3d rt = pose.rotation().transpose();
  return Pose(rt, -(rt * pose.translation()));
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation() * b.rotation(),
              a.rotation() * b.translation() + a.translation());
}

}  // namespace semfusion
