#pragma once

#include <random>

#include "roadkit/graph.hpp"
#include "roadkit/grid.hpp"

namespace roadkit {

/// Parameters for jittered-grid road networks used by the self checks.
struct SynthOptions {
  int width = 320;
  int height = 320;
  double spacing = 80.0;   // grid pitch, pixels
  double jitter = 10.0;    // max node displacement per axis
  double margin = 24.0;    // keep-out band along the image border
  double extra_edge_probability = 0.35;  // chance to keep a non-tree grid edge
};

/// Connected random road graph: a random spanning tree of a jittered grid
/// plus a random subset of the remaining grid edges. Node separation is at
/// least spacing - 2 * sqrt(2) * jitter.
RoadGraph random_road_graph(std::mt19937_64& rng, const SynthOptions& options = {});

/// Independent Bernoulli pixels with the given road density.
RasterMask random_mask(std::mt19937_64& rng, int width, int height, double density);

}  // namespace roadkit
