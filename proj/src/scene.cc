#include "semfusion/scene.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "semfusion/error.h"

namespace semfusion {
namespace {

using json = nlohmann::json;

constexpr const char* kFaceNames[6] = {"x_min", "x_max", "y_min", "y_max", "z_min", "z_max"};

int face_axis(Face f) { return static_cast<int>(f) / 2; }
bool face_is_max(Face f) { return static_cast<int>(f) % 2 == 1; }

// The two in-plane axes of a face, ascending.
std::pair<int, int> plane_axes(Face f) {
  switch (face_axis(f)) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

bool strictly_inside(const SceneSpec& spec, const Eigen::Vector3d& p) {
  return (p.array() > spec.box_min.array()).all() && (p.array() < spec.box_max.array()).all();
}

Face parse_face(const std::string& name) {
  for (int i = 0; i < 6; ++i) {
    if (name == kFaceNames[i]) return static_cast<Face>(i);
  }
  throw Error(Errc::kDegenerateSpec, "unknown face '" + name + "'");
}

Rgb parse_colour(const json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 3) throw Error(Errc::kDegenerateSpec, "colour needs 3 components");
  Rgb c{};
  for (int i = 0; i < 3; ++i) {
    if (v[i] < 0 || v[i] > 255) throw Error(Errc::kDegenerateSpec, "colour out of range");
    c[i] = static_cast<std::uint8_t>(v[i]);
  }
  return c;
}

template <int N>
Eigen::Matrix<double, N, 1> parse_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != N) {
    throw Error(Errc::kDegenerateSpec, "expected " + std::to_string(N) + " components");
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = v[i];
  return out;
}

}  // namespace

SceneSpec SceneSpec::Office() {
  SceneSpec s;
  s.box_min = {0.0, 0.0, 0.0};
  s.box_max = {6.0, 5.0, 3.0};
  s.class_names = {"books", "ceiling", "chair", "floor", "objects",
                   "painting", "table", "wall", "window"};
  enum : std::uint8_t { kBooks, kCeiling, kChair, kFloor, kObjects, kPainting, kTable, kWall, kWindow };
  s.faces[0] = {kWall, {200, 190, 170}};
  s.faces[1] = {kWall, {195, 185, 175}};
  s.faces[2] = {kWall, {205, 195, 165}};
  s.faces[3] = {kWall, {190, 195, 180}};
  s.faces[4] = {kFloor, {120, 100, 80}};
  s.faces[5] = {kCeiling, {235, 235, 235}};
  // Furniture and fittings sit on the x_max wall, which the camera faces.
  s.patches = {
      {Face::kXMax, {3.2, 1.2}, {4.4, 2.3}, {kWindow, {150, 200, 240}}},
      {Face::kXMax, {1.8, 1.5}, {2.8, 2.2}, {kPainting, {180, 40, 40}}},
      {Face::kXMax, {0.5, 0.2}, {1.5, 1.8}, {kBooks, {60, 90, 150}}},
      {Face::kXMax, {2.0, 0.0}, {3.3, 0.75}, {kTable, {140, 90, 50}}},
      {Face::kXMax, {3.5, 0.0}, {4.2, 0.9}, {kChair, {40, 40, 40}}},
      {Face::kXMax, {2.2, 0.75}, {2.8, 1.05}, {kObjects, {200, 180, 60}}},
  };
  s.path.kind = CameraPath::Kind::kOrbit;
  s.path.centre = {3.0, 2.5};
  s.path.radius = 0.8;
  s.path.height = 1.5;
  s.path.look_height = 1.5;
  s.path.start_deg = 155.0;
  s.path.sweep_deg = 50.0;
  return s;
}

SceneSpec SceneSpec::FromJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoFailure, "cannot open scene " + path.string());
  SceneSpec s;
  try {
    const json j = json::parse(in);
    s.box_min = parse_vec<3>(j.at("box_min"));
    s.box_max = parse_vec<3>(j.at("box_max"));
    s.class_names = j.at("classes").get<std::vector<std::string>>();
    const LabelSet labels(s.class_names);
    auto label_of = [&](const json& v) {
      const std::size_t idx = labels.find(v.get<std::string>());
      if (idx >= labels.count()) {
        throw Error(Errc::kDegenerateSpec, "unknown class " + v.dump());
      }
      return static_cast<std::uint8_t>(idx);
    };
    for (int i = 0; i < 6; ++i) {
      const json& f = j.at("faces").at(kFaceNames[i]);
      s.faces[i] = {label_of(f.at("label")), parse_colour(f.at("colour"))};
    }
    for (const json& p : j.value("patches", json::array())) {
      s.patches.push_back({parse_face(p.at("face").get<std::string>()),
                           parse_vec<2>(p.at("min")), parse_vec<2>(p.at("max")),
                           {label_of(p.at("label")), parse_colour(p.at("colour"))}});
    }
    const json& cam = j.at("path");
    const std::string kind = cam.at("type").get<std::string>();
    if (kind == "orbit") {
      s.path.kind = CameraPath::Kind::kOrbit;
      s.path.centre = parse_vec<2>(cam.at("centre"));
      s.path.radius = cam.at("radius").get<double>();
      s.path.height = cam.at("height").get<double>();
      s.path.look_height = cam.value("look_height", s.path.height);
      s.path.start_deg = cam.value("start_deg", 0.0);
      s.path.sweep_deg = cam.value("sweep_deg", 360.0);
    } else if (kind == "sweep") {
      s.path.kind = CameraPath::Kind::kSweep;
      s.path.start = parse_vec<3>(cam.at("start"));
      s.path.end = parse_vec<3>(cam.at("end"));
      s.path.direction = parse_vec<3>(cam.at("direction"));
    } else {
      throw Error(Errc::kDegenerateSpec, "unknown camera path '" + kind + "'");
    }
    s.frame_interval = j.value("frame_interval", s.frame_interval);
  } catch (const json::exception& e) {
    throw Error(Errc::kDegenerateSpec, path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

void SceneSpec::validate() const {
  if (!((box_max - box_min).array() > 0.0).all()) {
    throw Error(Errc::kDegenerateSpec, "room box has no volume");
  }
  if (class_names.empty()) throw Error(Errc::kDegenerateSpec, "no classes");
  auto check_label = [&](std::uint8_t label) {
    if (label >= class_names.size()) {
      throw Error(Errc::kDegenerateSpec, "label " + std::to_string(label) + " out of range");
    }
  };
  for (const auto& f : faces) check_label(f.label);
  for (const auto& p : patches) {
    check_label(p.style.label);
    if (!((p.max - p.min).array() > 0.0).all()) {
      throw Error(Errc::kDegenerateSpec, "patch with zero area");
    }
    const auto [a, b] = plane_axes(p.face);
    if (p.min.x() < box_min[a] || p.max.x() > box_max[a] || p.min.y() < box_min[b] ||
        p.max.y() > box_max[b]) {
      throw Error(Errc::kDegenerateSpec, "patch extends beyond its face");
    }
  }
  if (path.kind == CameraPath::Kind::kOrbit && !(path.radius > 0.0)) {
    throw Error(Errc::kDegenerateSpec, "orbit radius must be positive");
  }
  if (path.kind == CameraPath::Kind::kSweep && !(path.direction.norm() > 0.0)) {
    throw Error(Errc::kDegenerateSpec, "sweep direction must be non-zero");
  }
  if (!(frame_interval > 0.0)) throw Error(Errc::kDegenerateSpec, "frame interval must be > 0");
}

Pose SceneSpec::camera_pose(int k, int n_frames) const {
  const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (path.kind == CameraPath::Kind::kOrbit) {
    const double deg = path.start_deg + path.sweep_deg * k / std::max(n_frames, 1);
    const double a = deg * std::numbers::pi / 180.0;
    const Eigen::Vector3d eye(path.centre.x() + path.radius * std::cos(a),
                              path.centre.y() + path.radius * std::sin(a), path.height);
    const Eigen::Vector3d target(path.centre.x(), path.centre.y(), path.look_height);
    return Pose::LookAt(eye, target, up);
  }
  const double s = n_frames > 1 ? static_cast<double>(k) / (n_frames - 1) : 0.0;
  const Eigen::Vector3d eye = path.start + s * (path.end - path.start);
  return Pose::LookAt(eye, eye + path.direction, up);
}

std::optional<SurfaceHit> ray_cast(const SceneSpec& spec, const Eigen::Vector3d& origin,
                                   const Eigen::Vector3d& dir) {
  SurfaceHit hit;
  hit.t = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    double t = std::numeric_limits<double>::infinity();
    bool is_max = false;
    if (dir[axis] > 0.0) {
      t = (spec.box_max[axis] - origin[axis]) / dir[axis];
      is_max = true;
    } else if (dir[axis] < 0.0) {
      t = (spec.box_min[axis] - origin[axis]) / dir[axis];
    }
    if (t < hit.t) {
      hit.t = t;
      hit.face = static_cast<Face>(2 * axis + (is_max ? 1 : 0));
    }
  }
  if (!std::isfinite(hit.t) || !(hit.t > 0.0)) return std::nullopt;
  hit.point = origin + hit.t * dir;
  const int axis = face_axis(hit.face);
  // Snap onto the plane exactly.
  hit.point[axis] = face_is_max(hit.face) ? spec.box_max[axis] : spec.box_min[axis];
  hit.style = spec.faces[static_cast<int>(hit.face)];
  const auto [a, b] = plane_axes(hit.face);
  for (const auto& p : spec.patches) {
    if (p.face != hit.face) continue;
    if (hit.point[a] >= p.min.x() && hit.point[a] <= p.max.x() && hit.point[b] >= p.min.y() &&
        hit.point[b] <= p.max.y()) {
      hit.style = p.style;
    }
  }
  return hit;
}

FrameRecord render_frame(const SceneSpec& spec, const Intrinsics& intr, const Pose& pose_wc) {
  intr.validate();
  if (!strictly_inside(spec, pose_wc.translation())) {
    throw Error(Errc::kDegenerateSpec, "camera outside the room box");
  }
  FrameRecord f;
  f.rgb = RgbImage(intr.width, intr.height, 3);
  f.depth = DepthImage(intr.width, intr.height, 1);
  f.gt_labels = LabelImage(intr.width, intr.height, 1, kVoidLabel);
  const Eigen::Matrix3d& rot = pose_wc.rotation();
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      // Camera ray with unit z so the ray parameter is the z-depth.
      const Eigen::Vector3d ray_cam((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
      const auto hit = ray_cast(spec, pose_wc.translation(), rot * ray_cam);
      if (!hit) continue;
      f.depth.at(x, y) = hit->t;
      for (int c = 0; c < 3; ++c) f.rgb.at(x, y, c) = hit->style.colour[c];
      f.gt_labels->at(x, y) = hit->style.label;
    }
  }
  return f;
}

RenderedSequence render_scene(const SceneSpec& spec, const Intrinsics& intr, int n_frames) {
  spec.validate();
  if (n_frames < 1) throw Error(Errc::kDegenerateSpec, "n_frames must be >= 1");
  RenderedSequence out;
  std::vector<TimedPose> poses;
  for (int k = 0; k < n_frames; ++k) {
    const Pose pose = spec.camera_pose(k, n_frames);
    FrameRecord f = render_frame(spec, intr, pose);
    f.index = k;
    f.timestamp = k * spec.frame_interval;
    f.name = timestamp_stem(f.timestamp);
    poses.push_back({f.timestamp, pose});
    out.frames.push_back(std::move(f));
  }
  out.trajectory = Trajectory(std::move(poses));
  return out;
}

Intrinsics synthetic_intrinsics() {
  Intrinsics intr;
  intr.width = 320;
  intr.height = 240;
  intr.fx = 200.0;
  intr.fy = 200.0;
  intr.cx = 159.5;
  intr.cy = 119.5;
  return intr;
}

}  // namespace semfusion
