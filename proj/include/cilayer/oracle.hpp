#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cilayer/layered_scalar.hpp"
#include "cilayer/quantizer_core.hpp"
#include "cilayer/sources.hpp"

namespace cilayer {

// Partition of the atoms 0..n-1 into runs, given by the index of the first
// atom of every run after the first.
using AtomCuts = std::vector<std::size_t>;

struct OracleResult {
  double cost = kInf;
  AtomCuts common;
  std::vector<AtomCuts> layers;  // overall partition per decoder
  LayeredScalarCodebook codebook;
  RDRecord record;
  std::size_t common_partitions = 0;  // enumerated
};

// Exhaustive search over every common partition of the atoms into
// contiguous runs (at most max_cells of them) and, inside each run, every
// contiguous refinement per decoder (at most max_cells cells per decoder in
// total). Two decoders only; at most 12 atoms. Boundaries are placed at
// atom midpoints.
OracleResult brute_force_layered_oracle(const ScalarSource& src, const CostWeights& w,
                                        std::size_t max_cells = 12);

// Seeded test instance: `atoms` sorted values on [0, atoms) with random
// masses, lambda_l log-uniform over two decades below the variance and a
// sharing discount theta in [0, 0.5).
struct OracleInstance {
  ScalarSource source;
  CostWeights weights;
};
OracleInstance random_oracle_instance(std::uint64_t seed, std::size_t atoms);

// Layered codebook for given atom-run partitions.
LayeredScalarCodebook codebook_from_cuts(const ScalarSource& src, const AtomCuts& common,
                                         const std::vector<AtomCuts>& layers);

}  // namespace cilayer
