#include "semfusion/labels.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>

#include "semfusion/error.h"

namespace semfusion {
namespace {

std::atomic<std::uint64_t> g_all_zero_events{0};

}  // namespace

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) {
    throw Error(Errc::kInvalidArgument, "label set must not be empty");
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) {
      throw Error(Errc::kInvalidArgument, "empty class name");
    }
    if (!seen.insert(n).second) {
      throw Error(Errc::kInvalidArgument, "duplicate class name '" + n + "'");
    }
  }
}

LabelSet LabelSet::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::kIoFailure, "cannot open class list " + path.string());
  }
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    names.push_back(line);
  }
  return LabelSet(std::move(names));
}

LabelSet LabelSet::Nyu13() {
  return LabelSet({"bed", "books", "ceiling", "chair", "floor", "furniture",
                   "objects", "painting", "sofa", "table", "tv", "wall",
                   "window"});
}

std::size_t LabelSet::find(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return static_cast<std::size_t>(it - names_.begin());
}

LabelDistribution uniform(std::size_t count) {
  if (count == 0) {
    throw Error(Errc::kInvalidArgument, "uniform over zero classes");
  }
  return LabelDistribution(
      std::vector<double>(count, 1.0 / static_cast<double>(count)));
}

bool normalize_in_place(std::span<double> probs) {
  const std::size_t n = probs.size();
  double max_w = 0.0;
  for (double w : probs) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(Errc::kInvalidArgument,
                  "weights must be finite and non-negative");
    }
    max_w = std::max(max_w, w);
  }
  if (max_w < kAllZeroThreshold) {
    std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(n));
    g_all_zero_events.fetch_add(1, std::memory_order_relaxed);
    return false;
  }

  // Divide by the maximum first so the sum can neither overflow nor lose the
  // small entries.
  double sum = 0.0;
  for (double& w : probs) {
    w /= max_w;
    sum += w;
  }
  bool any_below = false;
  for (double& w : probs) {
    w /= sum;
    any_below |= w < kProbabilityFloor;
  }
  if (!any_below) return true;

  // Pin entries below the floor and rescale the free ones onto the remaining
  // mass. Rescaling only shrinks free entries, so repeat until stable.
  std::vector<char> pinned(n, 0);
  std::size_t pinned_count = 0;
  for (;;) {
    std::size_t newly = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!pinned[i] && probs[i] < kProbabilityFloor) {
        pinned[i] = 1;
        probs[i] = kProbabilityFloor;
        ++newly;
      }
    }
    if (newly == 0) break;
    pinned_count += newly;
    double free_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!pinned[i]) free_mass += probs[i];
    }
    if (free_mass <= 0.0) break;
    const double scale =
        (1.0 - static_cast<double>(pinned_count) * kProbabilityFloor) /
        free_mass;
    for (std::size_t i = 0; i < n; ++i) {
      if (!pinned[i]) probs[i] *= scale;
    }
  }
  return true;
}

LabelDistribution normalize(std::span<const double> weights) {
  if (weights.empty()) {
    throw Error(Errc::kInvalidArgument, "cannot normalise an empty vector");
  }
  std::vector<double> probs(weights.begin(), weights.end());
  normalize_in_place(probs);
  return LabelDistribution(std::move(probs));
}

ArgmaxResult argmax_label(std::span<const double> probs) {
  ArgmaxResult best;
  if (probs.empty()) return best;
  best.probability = probs[0];
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > best.probability) {
      best.index = i;
      best.probability = probs[i];
    }
  }
  return best;
}

std::uint64_t all_zero_count() {
  return g_all_zero_events.load(std::memory_order_relaxed);
}

}  // namespace semfusion
