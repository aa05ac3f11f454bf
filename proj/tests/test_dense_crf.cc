#include <cmath>

#include <gtest/gtest.h>

#include "semfusion/dense_crf.h"
#include "semfusion/error.h"
#include "support/generators.h"
#include "support/oracles.h"

namespace semfusion {
namespace {

const double kHalf = std::exp(-0.5);

CrfGraph graph_of(std::vector<std::vector<double>> unaries, std::vector<CrfFeatures> features) {
  CrfGraph g;
  g.label_count = unaries.front().size();
  for (std::size_t i = 0; i < unaries.size(); ++i) {
    g.nodes.push_back({i, features[i], unaries[i]});
  }
  return g;
}

Surfel surfel(const Eigen::Vector3d& p, const Eigen::Vector3d& colour = Eigen::Vector3d::Zero()) {
  Surfel s;
  s.position = p;
  s.colour = colour;
  s.normal = Eigen::Vector3d::UnitZ();
  s.radius = 0.01;
  s.confidence = 1;
  return s;
}

TEST(Kernels, HandValues) {
  const CrfParams p;
  CrfFeatures a, b;
  EXPECT_EQ(kernel_appearance(a, a, p), 1.0);
  EXPECT_EQ(kernel_smoothness(a, a, p), 1.0);
  b.position = {0.05, 0, 0};
  EXPECT_NEAR(kernel_appearance(a, b, p), kHalf, 1e-12);
  EXPECT_NEAR(kernel_smoothness(a, b, p), kHalf, 1e-12);
  b.position = {0, 0, 0.15};
  EXPECT_NEAR(kernel_smoothness(a, b, p), std::exp(-4.5), 1e-12);
  b = a;
  b.colour = {20, 0, 0};
  EXPECT_NEAR(kernel_appearance(a, b, p), kHalf, 1e-12);
  EXPECT_EQ(kernel_smoothness(a, b, p), 1.0);
  b = a;
  // Unit normal at chord distance 0.1 from +z.
  const double c = 1.0 - 0.1 * 0.1 / 2.0;
  b.normal = {0, std::sqrt(1.0 - c * c), c};
  ASSERT_NEAR((a.normal - b.normal).norm(), 0.1, 1e-15);
  EXPECT_NEAR(kernel_smoothness(a, b, p), kHalf, 1e-12);
  EXPECT_EQ(kernel_appearance(a, b, p), 1.0);
}

TEST(KernelProperty, BoundedSymmetricAndMatchReference) {
  testing::Gen gen(81);
  const CrfParams p;
  for (int i = 0; i < 5000; ++i) {
    const auto a = gen.features(0.3), b = gen.features(0.3);
    const double ka = kernel_appearance(a, b, p), ks = kernel_smoothness(a, b, p);
    ASSERT_GE(ka, 0.0);
    ASSERT_LE(ka, 1.0);
    ASSERT_LE(ks, 1.0);
    ASSERT_EQ(ka, kernel_appearance(b, a, p));
    ASSERT_EQ(ks, kernel_smoothness(b, a, p));
    ASSERT_NEAR(ka, testing::ref_kernel_appearance(a, b, p), 1e-12);
    ASSERT_NEAR(ks, testing::ref_kernel_smoothness(a, b, p), 1e-12);
  }
}

TEST(BuildGraph, UnariesAreNegativeLogProbabilities) {
  SurfelMap map(LabelSet({"a", "b", "c"}));
  map.add(surfel({0, 0, 1}), normalize(std::vector<double>{0.5, 0.5, 0.0}));
  map.add(surfel({1, 0, 1}), normalize(std::vector<double>{1.0, 0.0, 0.0}));
  const auto g = build_graph(map, CrfParams{});
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g.nodes[0].id, map.surfels()[0].id);
  EXPECT_EQ(g.nodes[1].id, map.surfels()[1].id);
  EXPECT_NEAR(g.nodes[0].unary[0], 0.6931, 1e-4);
  EXPECT_NEAR(g.nodes[1].unary[0], 0.0, 1e-10);
  EXPECT_NEAR(g.nodes[1].unary[1], 27.631, 1e-3);
  SurfelMap empty(LabelSet({"a"}));
  try {
    build_graph(empty, CrfParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptyMap);
  }
}

TEST(Energy, Examples) {
  const CrfParams p;
  CrfFeatures f;
  EXPECT_DOUBLE_EQ(gibbs_energy(graph_of({{0.2, 0.9}}, {f}), std::vector<std::size_t>{0}, p), 0.2);
  const auto two = graph_of({{0.1, 0.4}, {0.3, 0.2}}, {f, f});
  EXPECT_DOUBLE_EQ(gibbs_energy(two, std::vector<std::size_t>{1, 1}, p), 0.6);
  const auto zero = graph_of({{0, 0}, {0, 0}}, {f, f});
  EXPECT_DOUBLE_EQ(gibbs_energy(zero, std::vector<std::size_t>{0, 1}, p), 13.0);
  EXPECT_THROW(gibbs_energy(zero, std::vector<std::size_t>{0}, p), Error);
}

TEST(MeanField, PairwiseOffReturnsUnarySoftmax) {
  testing::Gen gen(82);
  CrfParams p;
  p.w1 = p.w2 = 0;
  const auto g = gen.graph(6, 4, 0.1);
  const auto q = mean_field_step(g, initial_marginals(g), p);
  for (std::size_t s = 0; s < g.size(); ++s) {
    double z = 0;
    for (double u : g.nodes[s].unary) z += std::exp(-u);
    for (std::size_t l = 0; l < 4; ++l) {
      EXPECT_NEAR(q.row(s)[l], std::exp(-g.nodes[s].unary[l]) / z, 1e-15);
    }
  }
}

TEST(MeanField, AttractivePottsKeepsSharedLabel) {
  CrfFeatures f;
  const auto g = graph_of({{0.6931, 0.6931}, {0.6931, 0.6931}}, {f, f});
  Marginals q(2, 2);
  q.row(0)[0] = q.row(1)[0] = 1.0;
  const auto next = mean_field_step(g, q, CrfParams{});
  EXPECT_GT(next.row(0)[0], 0.99);
  EXPECT_GT(next.row(1)[0], 0.99);
}

TEST(MeanField, SingleNodeIgnoresParams) {
  CrfFeatures f;
  const auto g = graph_of({{0.2, 0.9, 1.5}}, {f});
  CrfParams p;
  p.w1 = 100;
  const auto q = mean_field(g, p);
  const double z = std::exp(-0.2) + std::exp(-0.9) + std::exp(-1.5);
  EXPECT_NEAR(q.row(0)[0], std::exp(-0.2) / z, 1e-15);
}

TEST(MeanFieldProperty, StepMatchesDenseReference) {
  testing::Gen gen(83);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = gen.graph(gen.integer(1, 100), gen.integer(2, 5), gen.uniform(0.05, 0.5));
    CrfParams p;
    p.mode = CrfMode::kExact;
    std::vector<std::vector<double>> q0(g.size());
    Marginals q(g.size(), g.label_count);
    for (std::size_t s = 0; s < g.size(); ++s) {
      const auto d = gen.distribution(g.label_count);
      q0[s] = d.vector();
      std::copy(q0[s].begin(), q0[s].end(), q.row(s).begin());
    }
    const auto got = mean_field_step(g, q, p);
    const auto want = testing::dense_mean_field_step(g, q0, p);
    for (std::size_t s = 0; s < g.size(); ++s) {
      for (std::size_t l = 0; l < g.label_count; ++l) ASSERT_NEAR(got.row(s)[l], want[s][l], 1e-12);
    }
  }
}

TEST(BruteForce, Examples) {
  const CrfParams p;
  CrfFeatures f;
  const auto one = brute_force_map(graph_of({{0.2, 0.9}}, {f}), p);
  EXPECT_EQ(one.labeling, (std::vector<std::size_t>{0}));
  EXPECT_DOUBLE_EQ(one.energy, 0.2);
  CrfFeatures far;
  far.position = {100, 0, 0};
  const auto two = brute_force_map(graph_of({{0.2, 0.9}, {0.8, 0.1}}, {f, far}), p);
  EXPECT_EQ(two.labeling, (std::vector<std::size_t>{0, 1}));
  testing::Gen gen(84);
  const auto big = gen.graph(16, 3, 1.0);
  try {
    brute_force_map(big, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kTooLarge);
  }
}

TEST(BruteForceProperty, MatchesReferenceEnergyMinimum) {
  testing::Gen gen(85);
  const CrfParams p;
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = gen.graph(gen.integer(1, 6), gen.integer(2, 3), 0.1);
    const auto best = brute_force_map(g, p);
    EXPECT_NEAR(best.energy, testing::ref_energy(g, best.labeling, p), 1e-9);
    // Exhaustive check of a few random labelings.
    for (int k = 0; k < 50; ++k) {
      std::vector<std::size_t> x(g.size());
      for (auto& v : x) v = gen.integer(0, g.label_count - 1);
      ASSERT_LE(best.energy, testing::ref_energy(g, x, p) + 1e-12);
    }
  }
}

// Unaries whose best-vs-rest gap exceeds every node's total pairwise weight.
CrfGraph dominant_graph(testing::Gen& gen, const CrfParams& p) {
  auto g = gen.graph(gen.integer(2, 8), gen.integer(2, 3), 0.15);
  for (auto& node : g.nodes) {
    double incident = 0;
    for (const auto& other : g.nodes) {
      if (&other != &node) incident += testing::ref_pair_weight(node.features, other.features, p);
    }
    const std::size_t best = gen.integer(0, g.label_count - 1);
    for (std::size_t l = 0; l < g.label_count; ++l) {
      node.unary[l] = l == best ? gen.uniform(0, 1) : 0.0;
    }
    for (std::size_t l = 0; l < g.label_count; ++l) {
      if (l != best) node.unary[l] = node.unary[best] + incident * gen.uniform(1.01, 2.0) + 1e-3;
    }
  }
  return g;
}

TEST(MeanFieldProperty, DominantUnaryMatchesBruteForce) {
  testing::Gen gen(86);
  const CrfParams p;
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = dominant_graph(gen, p);
    ASSERT_EQ(mean_field(g, p).argmax(), brute_force_map(g, p).labeling);
  }
}

TEST(MeanFieldProperty, ArgmaxEnergyNeverBelowMinimum) {
  testing::Gen gen(87);
  const CrfParams p;
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = gen.graph(gen.integer(1, 7), gen.integer(2, 3), 0.1);
    const double e = gibbs_energy(g, mean_field(g, p).argmax(), p);
    ASSERT_GE(e, brute_force_map(g, p).energy - 1e-12);
  }
}

TEST(RunInference, PairwiseOffLeavesDistributionsUnchanged) {
  testing::Gen gen(88);
  SurfelMap map(LabelSet({"a", "b", "c"}));
  const auto d = gen.distribution(3);
  for (int i = 0; i < 30; ++i) map.add(surfel({gen.uniform(0, 0.2), gen.uniform(0, 0.2), 1}), d);
  CrfParams p;
  p.w1 = p.w2 = 0;
  const auto report = run_inference(map, p);
  EXPECT_EQ(report.nodes, 30u);
  EXPECT_EQ(report.written_back, 30u);
  for (const auto& s : map.surfels()) {
    for (int l = 0; l < 3; ++l) ASSERT_NEAR(map.distribution(s.id)[l], d[l], 1e-9);
  }
}

TEST(RunInference, CoincidentSurfelsAgree) {
  SurfelMap map(LabelSet({"a", "b"}));
  map.add(surfel({0, 0, 1}), normalize(std::vector<double>{0.9, 0.1}));
  map.add(surfel({0, 0, 1}), normalize(std::vector<double>{0.4, 0.6}));
  run_inference(map, CrfParams{});
  for (const auto& s : map.surfels()) EXPECT_EQ(argmax_label(map.distribution(s.id)).index, 0u);
}

TEST(RunInference, EnergyNotBelowBruteForce) {
  testing::Gen gen(89);
  SurfelMap map(LabelSet({"a", "b", "c"}));
  for (int i = 0; i < 8; ++i) {
    map.add(surfel({gen.uniform(0, 0.1), gen.uniform(0, 0.1), 1},
                   {gen.uniform(0, 255), gen.uniform(0, 255), gen.uniform(0, 255)}),
            gen.distribution(3));
  }
  const CrfParams p;
  const auto g = build_graph(map, p);
  const auto report = run_inference(map, p);
  EXPECT_GE(report.energy_after, brute_force_map(g, p).energy - 1e-12);
}

TEST(Snapshot, VanishedSurfelsAreSkipped) {
  testing::Gen gen(90);
  SurfelMap map(LabelSet({"a", "b"}));
  for (int i = 0; i < 10; ++i) map.add(surfel({0.01 * i, 0, 1}), gen.distribution(2));
  const SurfelMap snapshot = map;
  auto result = infer(snapshot, CrfParams{});
  EXPECT_EQ(snapshot.probabilities(), map.probabilities());
  const std::vector<SurfelId> gone{map.surfels()[2].id, map.surfels()[7].id};
  map.remove(gone);
  map.add(surfel({0, 0, 1}), uniform(2));
  const auto fresh = map.surfels().back().id;
  write_back(map, result, 1.0);
  EXPECT_EQ(result.report.vanished, 2u);
  EXPECT_EQ(result.report.written_back, 8u);
  EXPECT_EQ(map.distribution(fresh), uniform(2));
  EXPECT_TRUE(map.table_in_sync());
}

TEST(Inference, ExactModeSubsamplesLargeMaps) {
  testing::Gen gen(91);
  SurfelMap map(LabelSet({"a", "b"}));
  for (int i = 0; i < 50; ++i) map.add(surfel({gen.uniform(0, 1), 0, 1}), gen.distribution(2));
  CrfParams p;
  p.max_exact_nodes = 20;
  const auto a = infer(map, p);
  EXPECT_TRUE(a.report.subsampled);
  EXPECT_EQ(a.report.nodes, 20u);
  EXPECT_EQ(a.report.candidates, 50u);
  EXPECT_EQ(infer(map, p).ids, a.ids);
  const std::vector<SurfelId> some{map.surfels()[3].id, map.surfels()[1].id, 999999};
  const auto b = infer(map, p, std::span<const SurfelId>(some));
  EXPECT_EQ(b.report.nodes, 2u);
}

TEST(CutoffProperty, AgreesWithExactModeWithinTwoPercent) {
  testing::Gen gen(92);
  for (int n : {300, 1500}) {
    for (int trial = 0; trial < 2; ++trial) {
      // Random colours and jittered normals keep the marginals away from
      // one-hot, where truncation errors would be invisible.
      SurfelMap map(LabelSet({"a", "b", "c"}));
      for (int i = 0; i < n; ++i) {
        Surfel s = surfel({gen.uniform(0, 0.6), gen.uniform(0, 0.6), 1.0},
                          {gen.uniform(0, 255), gen.uniform(0, 255), gen.uniform(0, 255)});
        s.normal = Eigen::Vector3d(gen.uniform(-0.075, 0.075), gen.uniform(-0.075, 0.075), 1)
                       .normalized();
        std::vector<double> w{1.0, 1.0, 1.0};
        w[s.position.x() < 0.3 ? 0 : 1] += gen.uniform(0.5, 3.0);
        w[gen.integer(0, 2)] += gen.uniform(0, 1.5);
        map.add(s, normalize(w));
      }
      CrfParams exact;
      exact.mode = CrfMode::kExact;
      CrfParams cutoff = exact;
      cutoff.mode = CrfMode::kCutoff;
      const auto a = infer(map, exact);
      const auto b = infer(map, cutoff);
      ASSERT_EQ(a.ids, b.ids);
      double worst = 0;
      for (std::size_t s = 0; s < a.ids.size(); ++s) {
        for (std::size_t l = 0; l < 3; ++l) {
          const double qa = a.marginals.row(s)[l], qb = b.marginals.row(s)[l];
          worst = std::max(worst, std::abs(qa - qb) / qa);
        }
      }
      EXPECT_LE(worst, 0.02) << n << " nodes, trial " << trial;
    }
  }
}

}  // namespace
}  // namespace semfusion
