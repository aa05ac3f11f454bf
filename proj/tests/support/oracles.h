#pragma once

// Reference implementations used to check the library. They favour the
// plainest possible formulation over speed and share no code with src/.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "semfusion/dense_crf.h"
#include "semfusion/geometry.h"
#include "semfusion/scene.h"
#include "semfusion/surfel_map.h"

namespace semfusion::testing {

// normalize(prior * prod(likelihoods)) via long double log-sum-exp.
inline std::vector<double> log_space_posterior(std::span<const double> prior,
                                               const std::vector<std::vector<double>>& likelihoods) {
  const std::size_t n = prior.size();
  std::vector<long double> logp(n);
  for (std::size_t i = 0; i < n; ++i) {
    logp[i] = std::log(static_cast<long double>(prior[i]));
    for (const auto& l : likelihoods) logp[i] += std::log(static_cast<long double>(l[i]));
  }
  const long double m = *std::max_element(logp.begin(), logp.end());
  long double z = 0;
  for (auto v : logp) z += std::exp(v - m);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(std::exp(logp[i] - m) / z);
  return out;
}

inline double ref_kernel_appearance(const CrfFeatures& a, const CrfFeatures& b,
                                    const CrfParams& p) {
  double dp = 0, dc = 0;
  for (int i = 0; i < 3; ++i) {
    dp += (a.position[i] - b.position[i]) * (a.position[i] - b.position[i]);
    dc += (a.colour[i] - b.colour[i]) * (a.colour[i] - b.colour[i]);
  }
  return std::exp(-dp / (2 * p.theta_alpha * p.theta_alpha) -
                  dc / (2 * p.theta_beta * p.theta_beta));
}

inline double ref_kernel_smoothness(const CrfFeatures& a, const CrfFeatures& b,
                                    const CrfParams& p) {
  double dp = 0, dn = 0;
  for (int i = 0; i < 3; ++i) {
    dp += (a.position[i] - b.position[i]) * (a.position[i] - b.position[i]);
    dn += (a.normal[i] - b.normal[i]) * (a.normal[i] - b.normal[i]);
  }
  return std::exp(-dp / (2 * p.theta_alpha * p.theta_alpha) -
                  dn / (2 * p.theta_gamma * p.theta_gamma));
}

inline double ref_pair_weight(const CrfFeatures& a, const CrfFeatures& b, const CrfParams& p) {
  return p.w1 * ref_kernel_appearance(a, b, p) + p.w2 * ref_kernel_smoothness(a, b, p);
}

// Dense double loop over all node pairs; q[s][l].
inline std::vector<std::vector<double>> dense_mean_field_step(
    const CrfGraph& g, const std::vector<std::vector<double>>& q, const CrfParams& p) {
  const std::size_t n = g.nodes.size();
  const std::size_t L = g.label_count;
  std::vector<std::vector<double>> out(n, std::vector<double>(L));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> e(L);
    for (std::size_t l = 0; l < L; ++l) {
      double msg = 0;
      for (std::size_t t = 0; t < n; ++t) {
        if (t == s) continue;
        msg += ref_pair_weight(g.nodes[s].features, g.nodes[t].features, p) * (1.0 - q[t][l]);
      }
      e[l] = -g.nodes[s].unary[l] - msg;
    }
    const double m = *std::max_element(e.begin(), e.end());
    double z = 0;
    for (std::size_t l = 0; l < L; ++l) z += std::exp(e[l] - m);
    for (std::size_t l = 0; l < L; ++l) out[s][l] = std::exp(e[l] - m) / z;
  }
  return out;
}

inline double ref_energy(const CrfGraph& g, const std::vector<std::size_t>& x, const CrfParams& p) {
  double e = 0;
  for (std::size_t s = 0; s < g.nodes.size(); ++s) e += g.nodes[s].unary[x[s]];
  for (std::size_t s = 0; s < g.nodes.size(); ++s) {
    for (std::size_t t = s + 1; t < g.nodes.size(); ++t) {
      if (x[s] != x[t]) e += ref_pair_weight(g.nodes[s].features, g.nodes[t].features, p);
    }
  }
  return e;
}

// Smallest depth among surfels landing on pixel (x, y), by exhaustive scan.
inline std::optional<double> brute_min_depth(const SurfelMap& map, const Pose& pose_wc,
                                             const Intrinsics& intr, double depth_max, int x,
                                             int y) {
  const Pose pose_cw = invert(pose_wc);
  std::optional<double> best;
  for (const auto& s : map.surfels()) {
    const Eigen::Vector3d pc = pose_cw * s.position;
    if (pc.z() <= 1e-6 || pc.z() > depth_max) continue;
    const double u = intr.fx * pc.x() / pc.z() + intr.cx;
    const double v = intr.fy * pc.y() / pc.z() + intr.cy;
    if (static_cast<int>(std::floor(u + 0.5)) != x || static_cast<int>(std::floor(v + 0.5)) != y) {
      continue;
    }
    if (!best || pc.z() < *best) best = pc.z();
  }
  return best;
}

// Distance from `p` to the nearest face of the room box (plane-ray oracle
// for rendered frames): zero iff p lies on the box surface.
inline double distance_to_box_surface(const SceneSpec& spec, const Eigen::Vector3d& p) {
  double best = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    for (double plane : {spec.box_min[axis], spec.box_max[axis]}) {
      double d2 = (p[axis] - plane) * (p[axis] - plane);
      for (int o = 0; o < 3; ++o) {
        if (o == axis) continue;
        const double c = std::clamp(p[o], spec.box_min[o], spec.box_max[o]);
        d2 += (p[o] - c) * (p[o] - c);
      }
      best = std::min(best, std::sqrt(d2));
    }
  }
  return best;
}

}  // namespace semfusion::testing
