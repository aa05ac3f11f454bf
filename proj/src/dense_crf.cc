#include "semfusion/dense_crf.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include "semfusion/error.h"

namespace semfusion {
namespace {

// w1 k1 + w2 k2 for one pair, sharing the spatial term.
struct PairWeight {
  double inv_2a2, inv_2b2, inv_2g2, w1, w2;

  explicit PairWeight(const CrfParams& p)
      : inv_2a2(1.0 / (2.0 * p.theta_alpha * p.theta_alpha)),
        inv_2b2(1.0 / (2.0 * p.theta_beta * p.theta_beta)),
        inv_2g2(1.0 / (2.0 * p.theta_gamma * p.theta_gamma)),
        w1(p.w1),
        w2(p.w2) {}

  double operator()(const CrfFeatures& a, const CrfFeatures& b) const {
    const double spatial = (a.position - b.position).squaredNorm() * inv_2a2;
    const double appearance = (a.colour - b.colour).squaredNorm() * inv_2b2;
    const double smooth = (a.normal - b.normal).squaredNorm() * inv_2g2;
    return w1 * std::exp(-spatial - appearance) + w2 * std::exp(-spatial - smooth);
  }
};

// Visits each unordered pair {i, j}, i < j, that contributes under the mode.
class PairVisitor {
 public:
  PairVisitor(const CrfGraph& graph, const CrfParams& params)
      : graph_(graph), weight_(params), mode_(params.mode) {
    if (mode_ == CrfMode::kCutoff) {
      radius_ = params.cutoff_radius();
      cell_ = radius_;
      for (std::size_t i = 0; i < graph.size(); ++i) {
        cells_[key(cell_of(graph.nodes[i].features.position))].push_back(i);
      }
    }
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    const auto& nodes = graph_.nodes;
    const std::size_t n = nodes.size();
    if (mode_ == CrfMode::kExact) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          fn(i, j, weight_(nodes[i].features, nodes[j].features));
        }
      }
      return;
    }
    const double r2 = radius_ * radius_;
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3d& pi = nodes[i].features.position;
      const Eigen::Vector3i c = cell_of(pi);
      for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const auto it = cells_.find(key(c + Eigen::Vector3i(dx, dy, dz)));
            if (it == cells_.end()) continue;
            for (std::size_t j : it->second) {
              if (j <= i) continue;
              if ((nodes[j].features.position - pi).squaredNorm() > r2) continue;
              fn(i, j, weight_(nodes[i].features, nodes[j].features));
            }
          }
        }
      }
    }
  }

 private:
  Eigen::Vector3i cell_of(const Eigen::Vector3d& p) const {
    return {static_cast<int>(std::floor(p.x() / cell_)),
            static_cast<int>(std::floor(p.y() / cell_)),
            static_cast<int>(std::floor(p.z() / cell_))};
  }
  static std::uint64_t key(const Eigen::Vector3i& c) {
    auto part = [](int v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1fffff; };
    return (part(c.x()) << 42) | (part(c.y()) << 21) | part(c.z());
  }

  const CrfGraph& graph_;
  PairWeight weight_;
  CrfMode mode_;
  double radius_ = 0.0;
  double cell_ = 1.0;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

void softmax_neg(std::span<const double> energy, std::span<double> out) {
  double lo = std::numeric_limits<double>::infinity();
  for (double e : energy) lo = std::min(lo, e);
  double sum = 0.0;
  for (std::size_t l = 0; l < energy.size(); ++l) {
    out[l] = std::exp(lo - energy[l]);
    sum += out[l];
  }
  for (double& v : out) v /= sum;
}

double energy_with(const CrfGraph& graph, std::span<const std::size_t> labeling,
                   const PairVisitor& pairs) {
  double e = 0.0;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    e += graph.nodes[i].unary[labeling[i]];
  }
  pairs.for_each([&](std::size_t i, std::size_t j, double w) {
    if (labeling[i] != labeling[j]) e += w;
  });
  return e;
}

Marginals step_with(const CrfGraph& graph, const Marginals& q,
                    const PairVisitor& pairs) {
  const std::size_t n = graph.size();
  const std::size_t labels = graph.label_count;
  // message(s, l) = Σ_{s'} w(s, s') Q_{s'}(l). The Potts penalty
  // Σ w (1 - Q_{s'}(l)) differs from -message only by a per-node constant,
  // which the normalisation removes.
  Marginals message(n, labels);
  pairs.for_each([&](std::size_t i, std::size_t j, double w) {
    auto mi = message.row(i);
    auto mj = message.row(j);
    const auto qi = q.row(i);
    const auto qj = q.row(j);
    for (std::size_t l = 0; l < labels; ++l) {
      mi[l] += w * qj[l];
      mj[l] += w * qi[l];
    }
  });
  Marginals out(n, labels);
  std::vector<double> energy(labels);
  for (std::size_t s = 0; s < n; ++s) {
    const auto m = message.row(s);
    const auto& unary = graph.nodes[s].unary;
    for (std::size_t l = 0; l < labels; ++l) energy[l] = unary[l] - m[l];
    softmax_neg(energy, out.row(s));
  }
  return out;
}

void check_graph(const CrfGraph& graph) {
  for (const auto& node : graph.nodes) {
    if (node.unary.size() != graph.label_count) {
      throw Error(Errc::kClassCountMismatch, "unary length mismatch");
    }
  }
}

// Damped synchronous iterations: Q <- (1 - step) Q + step * update(Q).
Marginals iterate(const CrfGraph& graph, Marginals q, const PairVisitor& pairs,
                  const CrfParams& params) {
  const double a = params.step_size;
  for (int it = 0; it < params.iterations; ++it) {
    Marginals next = step_with(graph, q, pairs);
    if (a < 1.0) {
      for (std::size_t s = 0; s < q.nodes(); ++s) {
        auto dst = next.row(s);
        const auto old = q.row(s);
        for (std::size_t l = 0; l < dst.size(); ++l) dst[l] = (1.0 - a) * old[l] + a * dst[l];
      }
    }
    q = std::move(next);
  }
  return q;
}

}  // namespace

void CrfParams::validate() const {
  if (!(theta_alpha > 0.0) || !(theta_beta > 0.0) || !(theta_gamma > 0.0)) {
    throw Error(Errc::kInvalidArgument, "CRF kernel widths must be positive");
  }
  if (!(w1 >= 0.0) || !(w2 >= 0.0)) {
    throw Error(Errc::kInvalidArgument, "CRF kernel weights must be >= 0");
  }
  if (iterations < 1) throw Error(Errc::kInvalidArgument, "CRF iterations must be >= 1");
  if (!(step_size > 0.0 && step_size <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "CRF step size must lie in (0, 1]");
  }
  if (!(blend >= 0.0 && blend <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "CRF blend must lie in [0, 1]");
  }
  if (max_exact_nodes < 1) throw Error(Errc::kInvalidArgument, "max_exact_nodes must be >= 1");
  if (!(cutoff_sigmas > 0.0)) throw Error(Errc::kInvalidArgument, "cutoff_sigmas must be > 0");
}

std::vector<std::size_t> Marginals::argmax() const {
  std::vector<std::size_t> out(nodes());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = argmax_label(row(i)).index;
  return out;
}

double kernel_appearance(const CrfFeatures& a, const CrfFeatures& b,
                         const CrfParams& params) {
  const double ta = params.theta_alpha;
  const double tb = params.theta_beta;
  return std::exp(-(a.position - b.position).squaredNorm() / (2.0 * ta * ta) -
                  (a.colour - b.colour).squaredNorm() / (2.0 * tb * tb));
}

double kernel_smoothness(const CrfFeatures& a, const CrfFeatures& b,
                         const CrfParams& params) {
  const double ta = params.theta_alpha;
  const double tg = params.theta_gamma;
  return std::exp(-(a.position - b.position).squaredNorm() / (2.0 * ta * ta) -
                  (a.normal - b.normal).squaredNorm() / (2.0 * tg * tg));
}

CrfGraph build_graph(const SurfelMap& map, const CrfParams& params,
                     std::optional<std::span<const SurfelId>> ids) {
  params.validate();
  if (map.empty()) throw Error(Errc::kEmptyMap, "CRF over an empty map");
  CrfGraph graph;
  graph.label_count = map.class_count();
  const auto& table = map.probabilities();
  auto add = [&](const Surfel& s, std::size_t hint) {
    const auto slot = table.slot(s.id, hint);
    if (!slot) return;
    CrfNode node;
    node.id = s.id;
    node.features = {s.position, s.colour, s.normal};
    const auto probs = table.row(*slot);
    node.unary.resize(probs.size());
    for (std::size_t l = 0; l < probs.size(); ++l) {
      node.unary[l] = -std::log(std::max(probs[l], kProbabilityFloor));
    }
    graph.nodes.push_back(std::move(node));
  };
  if (ids) {
    std::vector<SurfelId> sorted(ids->begin(), ids->end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (SurfelId id : sorted) {
      if (const auto slot = map.slot(id)) add(map.surfels()[*slot], *slot);
    }
  } else {
    const auto& surfels = map.surfels();
    for (std::size_t i = 0; i < surfels.size(); ++i) add(surfels[i], i);
  }
  if (graph.nodes.empty()) throw Error(Errc::kEmptyMap, "no CRF nodes selected");
  return graph;
}

double gibbs_energy(const CrfGraph& graph, std::span<const std::size_t> labeling,
                    const CrfParams& params) {
  if (labeling.size() != graph.size()) {
    throw Error(Errc::kLengthMismatch, "labeling has " + std::to_string(labeling.size()) +
                                           " entries for " + std::to_string(graph.size()) +
                                           " nodes");
  }
  check_graph(graph);
  for (std::size_t l : labeling) {
    if (l >= graph.label_count) throw Error(Errc::kClassOutOfRange, "label out of range");
  }
  return energy_with(graph, labeling, PairVisitor(graph, params));
}

Marginals initial_marginals(const CrfGraph& graph) {
  Marginals q(graph.size(), graph.label_count);
  for (std::size_t s = 0; s < graph.size(); ++s) {
    softmax_neg(graph.nodes[s].unary, q.row(s));
  }
  return q;
}

Marginals mean_field_step(const CrfGraph& graph, const Marginals& q,
                          const CrfParams& params) {
  check_graph(graph);
  if (q.nodes() != graph.size() || q.labels() != graph.label_count) {
    throw Error(Errc::kLengthMismatch, "marginals do not match the graph");
  }
  return step_with(graph, q, PairVisitor(graph, params));
}

Marginals mean_field(const CrfGraph& graph, const CrfParams& params) {
  params.validate();
  check_graph(graph);
  const PairVisitor pairs(graph, params);
  return iterate(graph, initial_marginals(graph), pairs, params);
}

BruteForceResult brute_force_map(const CrfGraph& graph, const CrfParams& params) {
  check_graph(graph);
  const std::size_t n = graph.size();
  const std::size_t labels = graph.label_count;
  double total = 1.0;
  for (std::size_t i = 0; i < n; ++i) total *= static_cast<double>(labels);
  if (total > 1e7) {
    throw Error(Errc::kTooLarge, std::to_string(labels) + "^" + std::to_string(n) +
                                     " labelings exceed 1e7");
  }
  // Pair weights once, exact mode.
  CrfParams exact = params;
  exact.mode = CrfMode::kExact;
  std::vector<double> w(n * n, 0.0);
  PairVisitor(graph, exact).for_each([&](std::size_t i, std::size_t j, double v) {
    w[i * n + j] = v;
  });

  BruteForceResult best;
  best.energy = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> x(n, 0);
  for (;;) {
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e += graph.nodes[i].unary[x[i]];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (x[i] != x[j]) e += w[i * n + j];
      }
    }
    if (e < best.energy) {
      best.energy = e;
      best.labeling = x;
    }
    // Odometer with the last node fastest: lexicographic order.
    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      if (++x[pos] < labels) break;
      x[pos] = 0;
      if (pos == 0) return best;
    }
    if (n == 0) return best;
  }
}

CrfResult infer(const SurfelMap& snapshot, const CrfParams& params,
                std::optional<std::span<const SurfelId>> ids) {
  params.validate();
  if (snapshot.empty()) throw Error(Errc::kEmptyMap, "CRF over an empty map");
  const auto start = std::chrono::steady_clock::now();

  std::vector<SurfelId> candidates;
  if (ids) {
    for (SurfelId id : *ids) {
      if (snapshot.slot(id)) candidates.push_back(id);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  } else {
    candidates.reserve(snapshot.size());
    for (const Surfel& s : snapshot.surfels()) candidates.push_back(s.id);
  }
  CrfResult result;
  result.report.candidates = candidates.size();
  result.report.mode = params.mode;
  if (params.mode == CrfMode::kExact && candidates.size() > params.max_exact_nodes) {
    std::vector<SurfelId> kept;
    kept.reserve(params.max_exact_nodes);
    std::mt19937_64 rng(params.seed);
    std::sample(candidates.begin(), candidates.end(), std::back_inserter(kept),
                params.max_exact_nodes, rng);
    candidates = std::move(kept);
    result.report.subsampled = true;
  }

  const CrfGraph graph = build_graph(snapshot, params, std::span<const SurfelId>(candidates));
  const PairVisitor pairs(graph, params);
  Marginals q = initial_marginals(graph);
  result.report.energy_before = energy_with(graph, q.argmax(), pairs);
  q = iterate(graph, std::move(q), pairs, params);
  result.report.energy_after = energy_with(graph, q.argmax(), pairs);

  result.ids.reserve(graph.size());
  for (const auto& node : graph.nodes) result.ids.push_back(node.id);
  result.marginals = std::move(q);
  result.report.nodes = graph.size();
  result.report.iterations = params.iterations;
  result.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_back(SurfelMap& map, CrfResult& result, double blend) {
  ProbabilityTable& table = map.probabilities();
  std::vector<double> mixed(table.classes());
  for (std::size_t i = 0; i < result.ids.size(); ++i) {
    const auto slot = table.slot(result.ids[i]);
    if (!slot) {
      ++result.report.vanished;
      continue;
    }
    auto stored = table.row(*slot);
    const auto q = result.marginals.row(i);
    for (std::size_t l = 0; l < mixed.size(); ++l) {
      mixed[l] = blend * q[l] + (1.0 - blend) * stored[l];
    }
    std::copy(mixed.begin(), mixed.end(), stored.begin());
    normalize_in_place(stored);
    ++result.report.written_back;
  }
}

InferenceReport run_inference(SurfelMap& map, const CrfParams& params,
                              std::optional<std::span<const SurfelId>> ids) {
  CrfResult result = infer(map, params, ids);
  write_back(map, result, params.blend);
  return result.report;
}

}  // namespace semfusion
