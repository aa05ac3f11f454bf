#include "semfusion/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>

#include "semfusion/error.h"

namespace semfusion {
namespace fs = std::filesystem;

Trajectory::Trajectory(std::vector<TimedPose> poses) : poses_(std::move(poses)) {
  for (std::size_t i = 1; i < poses_.size(); ++i) {
    if (!(poses_[i].timestamp > poses_[i - 1].timestamp)) {
      throw Error(Errc::kNonMonotonicTimestamps,
                  "timestamp " + std::to_string(poses_[i].timestamp) +
                      " does not follow " + std::to_string(poses_[i - 1].timestamp));
    }
  }
}

void Trajectory::save(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::kIoFailure, "cannot write " + path.string());
  out << "# timestamp tx ty tz qx qy qz qw\n";
  out.precision(17);
  for (const auto& tp : poses_) {
    const Eigen::Quaterniond q = tp.pose.quaternion();
    const auto& t = tp.pose.translation();
    out << tp.timestamp << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' '
        << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
}

Trajectory load_trajectory(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoFailure, "cannot open trajectory " + path.string());
  std::vector<TimedPose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double v[8];
    for (double& x : v) {
      if (!(ls >> x)) {
        throw Error(Errc::kMalformedLine, path.string() + ":" + std::to_string(line_no) +
                                              ": expected 8 numbers");
      }
    }
    std::string rest;
    if (ls >> rest) {
      throw Error(Errc::kMalformedLine,
                  path.string() + ":" + std::to_string(line_no) + ": trailing data");
    }
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(std::abs(q.norm() - 1.0) <= 1e-3)) {
      throw Error(Errc::kBadQuaternion, path.string() + ":" + std::to_string(line_no) +
                                            ": |q| = " + std::to_string(q.norm()));
    }
    if (!poses.empty() && !(v[0] > poses.back().timestamp)) {
      throw Error(Errc::kNonMonotonicTimestamps,
                  path.string() + ":" + std::to_string(line_no));
    }
    poses.push_back({v[0], Pose::FromQuaternion(q, {v[1], v[2], v[3]})});
  }
  return Trajectory(std::move(poses));
}

std::optional<Pose> associate_pose(const Trajectory& trajectory, double timestamp,
                                   double tolerance) {
  const auto& poses = trajectory.poses();
  if (poses.empty()) return std::nullopt;
  auto it = std::lower_bound(
      poses.begin(), poses.end(), timestamp,
      [](const TimedPose& p, double t) { return p.timestamp < t; });
  const TimedPose* best = nullptr;
  double best_dt = std::numeric_limits<double>::infinity();
  if (it != poses.begin()) {
    best = &*std::prev(it);
    best_dt = timestamp - best->timestamp;
  }
  // Strictly closer only: equal distance keeps the earlier pose.
  if (it != poses.end() && it->timestamp - timestamp < best_dt) {
    best = &*it;
    best_dt = it->timestamp - timestamp;
  }
  if (best == nullptr || best_dt > tolerance) return std::nullopt;
  return best->pose;
}

namespace {

bool is_image(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), ::tolower);
  return e == ".png" || e == ".ppm" || e == ".pgm" || e == ".pnm";
}

std::map<std::string, fs::path> list_images(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image(entry.path())) {
      out[entry.path().stem().string()] = entry.path();
    }
  }
  return out;
}

double parse_stamp(const std::string& stem) {
  double t = 0.0;
  const auto res = std::from_chars(stem.data(), stem.data() + stem.size(), t);
  if (res.ec != std::errc{}) {
    throw Error(Errc::kMalformedLine, "file name '" + stem + "' does not start with a timestamp");
  }
  return t;
}

}  // namespace

SequenceReader::SequenceReader(const fs::path& dir, double depth_scale)
    : dir_(dir), depth_scale_(depth_scale) {
  if (!(depth_scale > 0.0)) throw Error(Errc::kInvalidArgument, "depth scale must be > 0");
  if (!fs::is_directory(dir / "rgb") || !fs::is_directory(dir / "depth")) {
    throw Error(Errc::kIoFailure, dir.string() + " lacks rgb/ or depth/");
  }
  const auto rgb = list_images(dir / "rgb");
  const auto depth = list_images(dir / "depth");
  const auto labels = list_images(dir / "labels");
  for (const auto& [stem, path] : rgb) {
    if (!depth.count(stem)) {
      throw Error(Errc::kMissingPair, "no depth image for " + path.string());
    }
  }
  for (const auto& [stem, path] : depth) {
    if (!rgb.count(stem)) {
      throw Error(Errc::kMissingPair, "no rgb image for " + path.string());
    }
  }
  for (const auto& [stem, path] : rgb) {
    Entry e{parse_stamp(stem), stem, path, depth.at(stem), std::nullopt};
    if (auto it = labels.find(stem); it != labels.end()) {
      e.labels = it->second;
      has_labels_ = true;
    }
    entries_.push_back(std::move(e));
  }
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const Entry& a, const Entry& b) { return a.timestamp < b.timestamp; });
}

FrameRecord SequenceReader::load(std::size_t i) const {
  const Entry& e = entries_.at(i);
  FrameRecord f;
  f.index = static_cast<int>(i);
  f.timestamp = e.timestamp;
  f.name = e.stem;
  f.rgb = read_rgb(e.rgb);
  const auto raw = read_gray16(e.depth);
  if (!raw.same_size(f.rgb)) {
    throw Error(Errc::kUnreadableImage, e.depth.string() + ": size differs from rgb");
  }
  f.depth = DepthImage(raw.width(), raw.height(), 1);
  auto src = raw.data();
  auto dst = f.depth.data();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = src[k] / depth_scale_;
  if (e.labels) {
    f.gt_labels = read_labels(*e.labels);
    if (!f.gt_labels->same_size(f.rgb)) {
      throw Error(Errc::kUnreadableImage, e.labels->string() + ": size differs from rgb");
    }
  }
  return f;
}

std::optional<FrameRecord> SequenceReader::next() {
  if (cursor_ >= entries_.size()) return std::nullopt;
  return load(cursor_++);
}

std::string timestamp_stem(double timestamp) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", timestamp);
  return buf;
}

void write_sequence(const fs::path& dir, const std::vector<FrameRecord>& frames,
                    const Trajectory& trajectory, const Intrinsics& intr,
                    double depth_scale) {
  std::error_code ec;
  for (const char* sub : {"rgb", "depth", "labels"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw Error(Errc::kIoFailure, "cannot create " + (dir / sub).string());
  }
  for (const auto& f : frames) {
    const std::string stem = timestamp_stem(f.timestamp);
    write_rgb(dir / "rgb" / (stem + ".ppm"), f.rgb);
    Image<std::uint16_t> raw(f.depth.width(), f.depth.height(), 1);
    auto src = f.depth.data();
    auto dst = raw.data();
    for (std::size_t k = 0; k < dst.size(); ++k) {
      const double v = std::round(src[k] * depth_scale);
      dst[k] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
    }
    write_gray16(dir / "depth" / (stem + ".pgm"), raw);
    if (f.gt_labels) write_gray8(dir / "labels" / (stem + ".pgm"), *f.gt_labels);
  }
  trajectory.save(dir / "trajectory.txt");
  intr.save(dir / "intrinsics.txt");
}

}  // namespace semfusion
