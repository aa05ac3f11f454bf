#include "semfusion/label_fusion.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <vector>

#include "semfusion/error.h"

namespace semfusion {

FusionStats fuse_prediction(SurfelMap& map, const IndexMap& index_map,
                            const ProbabilityMap& pred) {
  const std::size_t classes = map.class_count();
  if (pred.classes() != classes) {
    throw Error(Errc::kClassCountMismatch,
                "prediction has " + std::to_string(pred.classes()) +
                    " classes, map " + std::to_string(classes));
  }
  ProbabilityTable& table = map.probabilities();
  const int width = index_map.width();
  const int height = index_map.height();

#ifndef NDEBUG
  std::vector<SurfelId> touched;
#endif
  FusionStats stats;
  for (int y = 0; y < height; ++y) {
    const int ys = nearest_source_index(y, pred.height(), height);
    for (int x = 0; x < width; ++x) {
      const SurfelId id = index_map.id(x, y);
      if (id == IndexMap::kNone) {
        ++stats.pixels_unoccupied;
        continue;
      }
      const auto slot = table.slot(id, index_map.slot(x, y));
      // Surfels removed after the index map was built are skipped.
      if (!slot) continue;
      const int xs = nearest_source_index(x, pred.width(), width);
      const auto likelihood = pred.row(xs, ys);
      auto probs = table.row(*slot);
      for (std::size_t c = 0; c < classes; ++c) probs[c] *= likelihood[c];
      normalize_in_place(probs);
      ++stats.surfels_updated;
#ifndef NDEBUG
      touched.push_back(id);
#endif
    }
  }
#ifndef NDEBUG
  std::sort(touched.begin(), touched.end());
  assert(std::adjacent_find(touched.begin(), touched.end()) == touched.end() &&
         "a surfel won more than one pixel");
#endif
  return stats;
}

LabelDistribution fuse_step(const LabelDistribution& prior,
                            std::span<const double> likelihood) {
  if (likelihood.size() != prior.size()) {
    throw Error(Errc::kClassCountMismatch, "likelihood length mismatch");
  }
  std::vector<double> w(prior.size());
  for (std::size_t c = 0; c < w.size(); ++c) w[c] = prior[c] * likelihood[c];
  return normalize(w);
}

LabelDistribution batch_posterior(const LabelDistribution& prior,
                                  std::span<const LabelDistribution> likelihoods) {
  const std::size_t classes = prior.size();
  constexpr long double kNegInf = -std::numeric_limits<long double>::infinity();
  std::vector<long double> log_w(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    log_w[c] = prior[c] > 0.0 ? std::log(static_cast<long double>(prior[c])) : kNegInf;
  }
  for (const auto& l : likelihoods) {
    if (l.size() != classes) {
      throw Error(Errc::kClassCountMismatch, "likelihood length mismatch");
    }
    for (std::size_t c = 0; c < classes; ++c) {
      log_w[c] += l[c] > 0.0 ? std::log(static_cast<long double>(l[c])) : kNegInf;
    }
  }
  long double max_log = kNegInf;
  for (long double v : log_w) max_log = std::max(max_log, v);
  std::vector<double> w(classes, 0.0);
  if (max_log != kNegInf) {
    long double sum = 0.0L;
    std::vector<long double> e(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      e[c] = log_w[c] == kNegInf ? 0.0L : std::exp(log_w[c] - max_log);
      sum += e[c];
    }
    for (std::size_t c = 0; c < classes; ++c) w[c] = static_cast<double>(e[c] / sum);
  }
  return normalize(w);
}

}  // namespace semfusion
