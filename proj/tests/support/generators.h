#pragma once

// Hand-rolled random generators for property tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "semfusion/dense_crf.h"
#include "semfusion/geometry.h"
#include "semfusion/labels.h"

namespace semfusion::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  std::mt19937_64& engine() { return rng_; }

  // Strictly positive weights spanning a few orders of magnitude.
  std::vector<double> weights(std::size_t n) {
    std::vector<double> w(n);
    for (auto& x : w) x = std::exp(uniform(-6.0, 2.0));
    return w;
  }

  LabelDistribution distribution(std::size_t n) { return normalize(weights(n)); }

  Eigen::Vector3d unit_vector() {
    std::normal_distribution<double> g;
    Eigen::Vector3d v;
    do {
      v = {g(rng_), g(rng_), g(rng_)};
    } while (v.norm() < 1e-6);
    return v.normalized();
  }

  Eigen::Quaterniond rotation() {
    std::normal_distribution<double> g;
    Eigen::Quaterniond q(g(rng_), g(rng_), g(rng_), g(rng_));
    return q.normalized();
  }

  Pose pose(double extent = 5.0) {
    return Pose::FromQuaternion(
        rotation(), {uniform(-extent, extent), uniform(-extent, extent), uniform(-extent, extent)});
  }

  CrfFeatures features(double spread) {
    CrfFeatures f;
    f.position = {uniform(0, spread), uniform(0, spread), uniform(0, spread)};
    f.colour = {uniform(0, 255), uniform(0, 255), uniform(0, 255)};
    f.normal = unit_vector();
    return f;
  }

  // Random graph with floored-distribution unaries.
  CrfGraph graph(std::size_t nodes, std::size_t labels, double spread) {
    CrfGraph g;
    g.label_count = labels;
    for (std::size_t i = 0; i < nodes; ++i) {
      CrfNode n;
      n.id = i;
      n.features = features(spread);
      const auto d = distribution(labels);
      for (double p : d.probs()) n.unary.push_back(-std::log(p));
      g.nodes.push_back(std::move(n));
    }
    return g;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace semfusion::testing
