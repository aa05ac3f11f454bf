#include "semfusion/surfel_map.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "semfusion/error.h"

namespace semfusion {

// --- ProbabilityTable --------------------------------------------------------

std::optional<std::size_t> ProbabilityTable::slot(SurfelId id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

void ProbabilityTable::append(SurfelId id, const LabelDistribution& dist) {
  if (dist.size() != classes_) {
    throw Error(Errc::kClassCountMismatch, "distribution has " +
                                               std::to_string(dist.size()) +
                                               " classes, table " +
                                               std::to_string(classes_));
  }
  if (!ids_.empty() && id <= ids_.back()) {
    throw Error(Errc::kInvalidArgument, "probability table ids must increase");
  }
  ids_.push_back(id);
  probs_.insert(probs_.end(), dist.probs().begin(), dist.probs().end());
}

LabelDistribution ProbabilityTable::get(SurfelId id) const {
  const auto s = slot(id);
  if (!s) {
    throw Error(Errc::kInvalidArgument,
                "no distribution for surfel " + std::to_string(id));
  }
  return normalize(row(*s));
}

void ProbabilityTable::set(SurfelId id, std::span<const double> probs) {
  const auto s = slot(id);
  if (!s) {
    throw Error(Errc::kInvalidArgument,
                "no distribution for surfel " + std::to_string(id));
  }
  if (probs.size() != classes_) {
    throw Error(Errc::kClassCountMismatch, "row length mismatch");
  }
  auto dst = row(*s);
  std::copy(probs.begin(), probs.end(), dst.begin());
  normalize_in_place(dst);
}

std::size_t ProbabilityTable::erase(std::span<const SurfelId> sorted_ids) {
  std::size_t write = 0;
  std::size_t removed = 0;
  auto del = sorted_ids.begin();
  for (std::size_t read = 0; read < ids_.size(); ++read) {
    const SurfelId id = ids_[read];
    while (del != sorted_ids.end() && *del < id) ++del;
    if (del != sorted_ids.end() && *del == id) {
      ++removed;
      continue;
    }
    if (write != read) {
      ids_[write] = id;
      std::copy_n(probs_.begin() + read * classes_, classes_,
                  probs_.begin() + write * classes_);
    }
    ++write;
  }
  ids_.resize(write);
  probs_.resize(write * classes_);
  return removed;
}

// --- IndexMap ----------------------------------------------------------------

IndexMap::IndexMap(int width, int height)
    : width_(width),
      height_(height),
      ids_(static_cast<std::size_t>(width) * height, kNone),
      slots_(static_cast<std::size_t>(width) * height, 0),
      depth_(static_cast<std::size_t>(width) * height,
             std::numeric_limits<double>::infinity()) {}

std::size_t IndexMap::occupied_count() const {
  return static_cast<std::size_t>(
      std::count_if(ids_.begin(), ids_.end(), [](SurfelId id) { return id != kNone; }));
}

void IndexMap::set(int x, int y, SurfelId id, std::uint32_t slot, double depth) {
  const std::size_t i = index(x, y);
  ids_[i] = id;
  slots_[i] = slot;
  depth_[i] = depth;
}

IndexMap visible_set(const SurfelMap& map, const Pose& pose_wc,
                     const Intrinsics& intr, double depth_max) {
  IndexMap index(intr.width, intr.height);
  const Pose pose_cw = invert(pose_wc);
  const auto& surfels = map.surfels();
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    const Eigen::Vector3d pc = pose_cw * surfels[i].position;
    if (pc.z() > depth_max) continue;
    const auto px = project(intr, pc);
    if (!px) continue;
    const double xf = std::floor(px->u + 0.5);
    const double yf = std::floor(px->v + 0.5);
    if (xf < 0 || yf < 0 || xf >= intr.width || yf >= intr.height) continue;
    const int x = static_cast<int>(xf);
    const int y = static_cast<int>(yf);
    if (pc.z() < index.depth(x, y)) {
      index.set(x, y, surfels[i].id, static_cast<std::uint32_t>(i), pc.z());
    }
  }
  return index;
}

// --- SurfelMap ---------------------------------------------------------------

SurfelMap::SurfelMap(LabelSet labels)
    : labels_(std::move(labels)), table_(labels_.count()) {}

std::optional<std::size_t> SurfelMap::slot(SurfelId id) const {
  auto it = std::lower_bound(
      surfels_.begin(), surfels_.end(), id,
      [](const Surfel& s, SurfelId key) { return s.id < key; });
  if (it == surfels_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - surfels_.begin());
}

const Surfel* SurfelMap::find(SurfelId id) const {
  const auto s = slot(id);
  return s ? &surfels_[*s] : nullptr;
}

bool SurfelMap::table_in_sync() const {
  const auto& ids = table_.ids();
  if (ids.size() != surfels_.size()) return false;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != surfels_[i].id) return false;
  }
  return true;
}

SurfelId SurfelMap::add(Surfel surfel, const LabelDistribution& dist) {
  surfel.id = next_id_++;
  table_.append(surfel.id, dist);
  surfels_.push_back(surfel);
  return surfel.id;
}

namespace {

// Camera-frame normals from central differences of the back-projected depth.
// Borders use one-sided differences; a missing neighbour falls back to the
// negated viewing ray.
std::vector<Eigen::Vector3d> depth_normals(
    const std::vector<Eigen::Vector3d>& points, const std::vector<char>& has_depth,
    int width, int height) {
  std::vector<Eigen::Vector3d> normals(points.size(), Eigen::Vector3d::Zero());
  auto idx = [width](int x, int y) { return static_cast<std::size_t>(y) * width + x; };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = idx(x, y);
      if (!has_depth[i]) continue;
      const int x0 = std::max(x - 1, 0);
      const int x1 = std::min(x + 1, width - 1);
      const int y0 = std::max(y - 1, 0);
      const int y1 = std::min(y + 1, height - 1);
      const Eigen::Vector3d ray_normal = -points[i].normalized();
      if (x0 == x1 || y0 == y1 || !has_depth[idx(x0, y)] ||
          !has_depth[idx(x1, y)] || !has_depth[idx(x, y0)] ||
          !has_depth[idx(x, y1)]) {
        normals[i] = ray_normal;
        continue;
      }
      const Eigen::Vector3d dx = points[idx(x1, y)] - points[idx(x0, y)];
      const Eigen::Vector3d dy = points[idx(x, y1)] - points[idx(x, y0)];
      Eigen::Vector3d n = dx.cross(dy);
      const double len = n.norm();
      if (!(len > 0.0)) {
        normals[i] = ray_normal;
        continue;
      }
      n /= len;
      if (n.dot(points[i]) > 0.0) n = -n;
      normals[i] = n;
    }
  }
  return normals;
}

}  // namespace

IntegrationStats SurfelMap::integrate_frame(const RgbImage& rgb,
                                            const DepthImage& depth,
                                            const Pose& pose_wc,
                                            const Intrinsics& intr,
                                            const MapParams& params) {
  intr.validate();
  if (!rgb.same_size(intr.width, intr.height) || rgb.channels() != 3 ||
      !depth.same_size(intr.width, intr.height)) {
    throw Error(Errc::kResolutionMismatch,
                "frame " + std::to_string(rgb.width()) + "x" +
                    std::to_string(rgb.height()) + " / depth " +
                    std::to_string(depth.width()) + "x" +
                    std::to_string(depth.height()) + " vs intrinsics " +
                    std::to_string(intr.width) + "x" + std::to_string(intr.height));
  }
  const int frame = frame_counter_++;
  const int width = intr.width;
  const int height = intr.height;
  const IndexMap index = visible_set(*this, pose_wc, intr, params.depth_max);

  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<Eigen::Vector3d> points(n, Eigen::Vector3d::Zero());
  std::vector<char> has_depth(n, 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double d = depth.at(x, y);
      if (d > 0.0 && std::isfinite(d)) {
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        points[i] = back_project(intr, {static_cast<double>(x), static_cast<double>(y)}, d);
        has_depth[i] = 1;
      }
    }
  }
  const auto normals = depth_normals(points, has_depth, width, height);

  const double cos_gate = std::cos(params.normal_eps_deg * std::numbers::pi / 180.0);
  const Eigen::Matrix3d& rot = pose_wc.rotation();
  IntegrationStats stats;
  std::vector<Surfel> created;
  const LabelDistribution prior = uniform(labels_.count());

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (!has_depth[i]) {
        ++stats.skipped_missing_depth;
        continue;
      }
      const double d = points[i].z();
      if (d > params.depth_max) {
        ++stats.skipped_out_of_range;
        continue;
      }
      const Eigen::Vector3d pw = pose_wc * points[i];
      const Eigen::Vector3d nw = rot * normals[i];
      const Eigen::Vector3d colour(rgb.at(x, y, 0), rgb.at(x, y, 1), rgb.at(x, y, 2));
      const double radius = d * std::numbers::sqrt2 / intr.fx;

      if (index.occupied(x, y)) {
        Surfel& s = surfels_[index.slot(x, y)];
        if (std::abs(index.depth(x, y) - d) <= params.depth_eps &&
            s.normal.dot(nw) >= cos_gate) {
          const double w = s.confidence;
          s.position = (w * s.position + pw) / (w + 1.0);
          s.normal = (w * s.normal + nw).normalized();
          s.colour = (w * s.colour + colour) / (w + 1.0);
          s.radius = (w * s.radius + radius) / (w + 1.0);
          s.confidence = w + 1.0;
          s.last_seen = frame;
          ++stats.fused;
          continue;
        }
      }

      Surfel s;
      s.id = next_id_++;
      s.position = pw;
      s.normal = nw;
      s.colour = colour;
      s.radius = radius;
      s.confidence = 1.0;
      s.created_at = frame;
      s.last_seen = frame;
      table_.append(s.id, prior);
      created.push_back(s);
      ++stats.created;
    }
  }
  surfels_.insert(surfels_.end(), created.begin(), created.end());
  return stats;
}

std::vector<SurfelId> SurfelMap::remove_unstable(int current_frame,
                                                 const MapParams& params) {
  std::vector<SurfelId> doomed;
  for (const Surfel& s : surfels_) {
    if (s.confidence < params.stable_conf &&
        current_frame - s.created_at > params.probation) {
      doomed.push_back(s.id);
    }
  }
  if (doomed.empty()) return doomed;
  return remove(std::move(doomed));
}

std::vector<SurfelId> SurfelMap::remove(std::vector<SurfelId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<SurfelId> removed;
  std::size_t write = 0;
  auto del = ids.begin();
  for (std::size_t read = 0; read < surfels_.size(); ++read) {
    const SurfelId id = surfels_[read].id;
    while (del != ids.end() && *del < id) ++del;
    if (del != ids.end() && *del == id) {
      removed.push_back(id);
      continue;
    }
    if (write != read) surfels_[write] = surfels_[read];
    ++write;
  }
  surfels_.resize(write);
  table_.erase(removed);
  return removed;
}

}  // namespace semfusion
