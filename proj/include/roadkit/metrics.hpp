#pragma once

#include <span>
#include <utility>
#include <vector>

#include "roadkit/graph.hpp"
#include "roadkit/grid.hpp"

namespace roadkit {

struct PixelScore {
  double iou = 0.0;
  double relaxed_iou = 0.0;
  double rho = 0.0;
};

struct AplsParams {
  double snap_radius = 4.0;      // pixels
  double sample_spacing = 50.0;  // control-point spacing along edges, pixels

  void validate() const;
};

/// |pred & gt| / |pred | gt|; 1 when both masks are empty.
double iou(const RasterMask& pred, const RasterMask& gt);

/// Buffered IoU: predicted pixels within Euclidean distance rho of a
/// ground-truth pixel are true positives, ground-truth pixels with no
/// prediction within rho are misses. rho = 0 gives iou().
double relaxed_iou(const RasterMask& pred, const RasterMask& gt, double rho);

PixelScore pixel_score(const RasterMask& pred, const RasterMask& gt, double rho);

/// Splits every edge into equal arc-length pieces no longer than `spacing`,
/// adding degree-2 nodes at the cut points.
RoadGraph build_control_points(const RoadGraph& g, double spacing);

/// One direction of the path-length similarity: control nodes of `ref` are
/// snapped onto `prop`, and every ref node pair joined by a path contributes
/// min(1, |L - L'| / L). Returns 1 - mean(terms).
double snap_similarity(const RoadGraph& ref, const RoadGraph& prop, const AplsParams& p);

/// Harmonic mean of both snapping directions; 0 if either is 0.
double apls(const RoadGraph& gt, const RoadGraph& prop, const AplsParams& p);

/// Mean per-image APLS. Throws std::invalid_argument on an empty batch.
double apls_batch(std::span<const std::pair<RoadGraph, RoadGraph>> pairs, const AplsParams& p);

}  // namespace roadkit
