#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "semfusion/surfel_map.h"

namespace semfusion {

struct CrfFeatures {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // metres
  Eigen::Vector3d colour = Eigen::Vector3d::Zero();    // RGB, 0-255
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();   // unit
};

enum class CrfMode {
  kExact,   // every pair of nodes
  kCutoff,  // pairs further apart than cutoff_radius() are dropped
};

struct CrfParams {
  double theta_alpha = 0.05;  // metres
  double theta_beta = 20.0;   // colour units
  double theta_gamma = 0.1;   // normal chord length (~radians)
  double w1 = 10.0;           // appearance kernel weight
  double w2 = 3.0;            // smoothness kernel weight
  int iterations = 10;
  // Fraction of each synchronous update applied per iteration; 1 gives the
  // undamped update, which can oscillate between strongly coupled nodes.
  double step_size = 0.5;
  // Cutoff mode drops pairs further apart than cutoff_sigmas * theta_alpha.
  double cutoff_sigmas = 4.5;
  CrfMode mode = CrfMode::kExact;
  // Exact mode keeps at most this many nodes (seeded random subsample).
  std::size_t max_exact_nodes = 20000;
  std::uint64_t seed = 0;
  // Write-back: stored = normalize(blend * Q + (1 - blend) * stored).
  double blend = 1.0;

  void validate() const;
  double cutoff_radius() const { return cutoff_sigmas * theta_alpha; }
};

struct CrfNode {
  SurfelId id = 0;
  CrfFeatures features;
  std::vector<double> unary;  // -log P(label), finite
};

struct CrfGraph {
  std::vector<CrfNode> nodes;
  std::size_t label_count = 0;

  std::size_t size() const { return nodes.size(); }
};

// Per-node label distributions, flat node-major storage.
class Marginals {
 public:
  Marginals() = default;
  Marginals(std::size_t nodes, std::size_t labels)
      : labels_(labels), q_(nodes * labels, 0.0) {}

  std::size_t nodes() const { return labels_ ? q_.size() / labels_ : 0; }
  std::size_t labels() const { return labels_; }
  std::span<double> row(std::size_t node) {
    return {q_.data() + node * labels_, labels_};
  }
  std::span<const double> row(std::size_t node) const {
    return {q_.data() + node * labels_, labels_};
  }
  std::vector<std::size_t> argmax() const;

 private:
  std::size_t labels_ = 0;
  std::vector<double> q_;
};

double kernel_appearance(const CrfFeatures& a, const CrfFeatures& b,
                         const CrfParams& params);
double kernel_smoothness(const CrfFeatures& a, const CrfFeatures& b,
                         const CrfParams& params);

// One node per surfel with unary -log(stored probability). The optional id
// list restricts the graph (ids absent from the map are ignored).
// Throws Errc::kEmptyMap.
CrfGraph build_graph(const SurfelMap& map, const CrfParams& params,
                     std::optional<std::span<const SurfelId>> ids = std::nullopt);

// E(x) = Σ unary + Σ_{s<s'} [x_s != x_s'] (w1 k1 + w2 k2), over all pairs in
// exact mode or the pairs within the cutoff radius in cutoff mode.
// Throws Errc::kLengthMismatch.
double gibbs_energy(const CrfGraph& graph, std::span<const std::size_t> labeling,
                    const CrfParams& params);

// Q initialised as normalize(exp(-unary)).
Marginals initial_marginals(const CrfGraph& graph);

// One undamped synchronous mean-field update from `q`.
Marginals mean_field_step(const CrfGraph& graph, const Marginals& q,
                          const CrfParams& params);

// `params.iterations` damped steps starting from initial_marginals().
Marginals mean_field(const CrfGraph& graph, const CrfParams& params);

struct BruteForceResult {
  std::vector<std::size_t> labeling;
  double energy = 0.0;
};

// Exhaustive minimiser of gibbs_energy (exact pairs); ties go to the
// lexicographically smallest labeling. Throws Errc::kTooLarge beyond 1e7
// labelings.
BruteForceResult brute_force_map(const CrfGraph& graph, const CrfParams& params);

struct InferenceReport {
  std::size_t nodes = 0;
  std::size_t candidates = 0;  // surfels eligible before subsampling
  bool subsampled = false;
  int iterations = 0;
  double seconds = 0.0;
  double energy_before = 0.0;  // argmax labeling of the initial Q
  double energy_after = 0.0;   // argmax labeling of the final Q
  std::size_t written_back = 0;
  std::size_t vanished = 0;    // nodes whose surfel disappeared before write-back
  CrfMode mode = CrfMode::kExact;
};

struct CrfResult {
  std::vector<SurfelId> ids;
  Marginals marginals;
  InferenceReport report;
};

// Runs inference on `snapshot` without modifying it. `ids` restricts the
// candidate set.
CrfResult infer(const SurfelMap& snapshot, const CrfParams& params,
                std::optional<std::span<const SurfelId>> ids = std::nullopt);

// Writes marginals into the probability table of `map`. Surfels that no
// longer exist are skipped and counted in report.vanished.
void write_back(SurfelMap& map, CrfResult& result, double blend);

// infer() on the current map followed by write_back().
InferenceReport run_inference(SurfelMap& map, const CrfParams& params,
                              std::optional<std::span<const SurfelId>> ids = std::nullopt);

}  // namespace semfusion
