#pragma once

#include <cstddef>
#include <span>

#include "semfusion/labels.h"
#include "semfusion/prediction.h"
#include "semfusion/surfel_map.h"

namespace semfusion {

struct FusionStats {
  std::size_t surfels_updated = 0;
  std::size_t pixels_unoccupied = 0;
};

// Recursive Bayesian update of every surfel that wins a pixel of `index_map`:
// posterior ∝ prior · likelihood, floored and renormalised. Probability rows
// are fetched by nearest neighbour when the prediction resolution differs
// from the index map's. Throws Errc::kClassCountMismatch.
FusionStats fuse_prediction(SurfelMap& map, const IndexMap& index_map,
                            const ProbabilityMap& pred);

// One update step on a single distribution.
LabelDistribution fuse_step(const LabelDistribution& prior,
                            std::span<const double> likelihood);

// normalize(prior ⊙ Π likelihoods), accumulated in extended-precision log
// space. Throws Errc::kClassCountMismatch.
LabelDistribution batch_posterior(const LabelDistribution& prior,
                                  std::span<const LabelDistribution> likelihoods);

}  // namespace semfusion
