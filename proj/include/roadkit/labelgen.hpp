#pragma once

#include <cmath>
#include <utility>

#include "roadkit/graph.hpp"
#include "roadkit/grid.hpp"

namespace roadkit {

/// Gaussian band parameters for label generation.
struct LabelParams {
  double theta = 2.0;                 // Gaussian width, pixels
  double lambda = std::exp(-0.5);     // road threshold on the heatmap
  double node_radius = 4.0;           // intersection reassignment radius, pixels

  /// Throws std::invalid_argument when theta <= 0, lambda outside (0,1) or
  /// node_radius < 1.
  void validate() const;
};

enum class NeighborPattern { four, eight };

struct CountTag;
using CountGrid = Grid<int, CountTag>;

/// One-pixel-wide 8-connected raster of every polyline. Vertices are rounded
/// to the nearest pixel centre; pixels outside the grid are skipped.
RasterMask rasterize_centerline(const RoadGraph& g, int width, int height);

/// Squared Euclidean distance to the nearest road pixel; +inf when the mask
/// has no road pixels.
ScalarField squared_distance_map(const RasterMask& mask);

/// Euclidean distance to the nearest road pixel (exact transform).
ScalarField distance_map(const RasterMask& mask);

/// exp(-d^2 / (2 theta^2)); infinite distances map to 0.
ScalarField gaussian_heatmap(const ScalarField& d, double theta);

struct RoadLabels {
  RasterMask mask;
  ConnectivityMap connectivity;
};

/// Segmentation mask and road-direction connectivity classes for a graph
/// already cropped to the raster. Road pixels (heatmap >= lambda) get class 2;
/// road pixels within node_radius of a non-boundary node of degree k get
/// min(k, 5). Where node regions overlap the larger class wins.
RoadLabels connectivity_label(const RoadGraph& g, int width, int height, const LabelParams& p);

/// Raw count of road neighbours of each road pixel (0 on background).
CountGrid neighbor_counts(const RasterMask& mask, NeighborPattern pattern);

/// neighbor_counts clamped to 5 so it fits a ConnectivityMap.
ConnectivityMap pixel_connectivity_label(const RasterMask& mask, NeighborPattern pattern);

}  // namespace roadkit
