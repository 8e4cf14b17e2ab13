#pragma once

#include "cilayer/quantizer_core.hpp"

namespace cilayer {

// Dead-zone quantizer shape: central cell (-z*step/2, z*step/2), uniform
// cells of width step outside it, infinite outer cells.
struct DzqShape {
  double step = 1.0;
  double ratio = 1.0;  // dead-zone width over step, >= 1

  double dead_zone_half_width() const noexcept { return 0.5 * ratio * step; }
};

// Finite boundaries are generated until the tail mass drops below ~1e-17
// (capped at max_cells_per_side); reps sit at cell centroids.
ScalarQuantizer make_dzq(const ScalarSource& src, const DzqShape& shape,
                         std::size_t max_cells_per_side = 4096);

struct DzqDesign {
  ScalarQuantizer quantizer;
  DzqShape shape;
  double rate = 0.0;
  double distortion = 0.0;
};

// Minimum-distortion DZQ for a Laplacian source at the given entropy: for
// each dead-zone ratio the step is bisected to hit the rate, and the ratio
// is chosen by a grid scan over [1, 6] refined with golden-section search.
DzqDesign design_dzq(const ScalarSource& src, double target_rate);

// Interior DZQ boundaries of the given shape that fall strictly inside
// (lo, hi) and within [-reach, reach].
std::vector<double> dzq_boundaries_within(const DzqShape& shape, double lo, double hi,
                                          double reach);

// Uniform interior boundaries for (lo, hi): a finite range is split into the
// nearest whole number of cells of width ~step; a half-infinite range gets
// boundaries every step from its finite end, out to |t| <= reach.
std::vector<double> uniform_boundaries_within(double step, double lo, double hi, double reach);

}  // namespace cilayer
