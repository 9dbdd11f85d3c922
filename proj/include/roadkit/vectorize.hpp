#pragma once

#include <stdexcept>
#include <vector>

#include "roadkit/geometry.hpp"
#include "roadkit/graph.hpp"
#include "roadkit/grid.hpp"

namespace roadkit {

/// Input violated a documented precondition (e.g. a non-thin skeleton).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Polyline = std::vector<Point>;

struct VectorizeParams {
  double rdp_tolerance = 2.0;  // pixels
  double min_spur = 30.0;      // hanging curves shorter than this are removed
  /// Junction nodes joined by an edge at most this long are fused into one
  /// node. Thinning splits a crossing of wide bands into two forks a few
  /// pixels apart; 0 disables the step.
  double junction_merge = 6.0;
  /// Junctions are re-placed at the crossing of their arms, with arm
  /// directions measured from this arc length outward; 0 disables.
  double junction_refine = 8.0;
};

/// Zhang-Suen thinning followed by a clean-up that removes the remaining
/// redundant (simple) pixels, so the result has no solid 2x2 block. Every
/// deletion keeps 8-connected components intact.
RasterMask skeletonize(const RasterMask& mask);

/// True when the mask contains no solid 2x2 block.
bool is_thin(const RasterMask& mask);

/// Traces a thin skeleton into a graph. Pixels with != 2 neighbours become
/// nodes (8-adjacent junction pixels form one node at their centroid); each
/// junction-free cycle gets a node at its lexicographically smallest pixel.
/// Throws PreconditionError if the skeleton is not thin.
RoadGraph skeleton_to_graph(const RasterMask& skeleton);

/// Ramer-Douglas-Peucker. Keeps both ends and every point whose distance to
/// the current chord exceeds `tolerance`.
Polyline simplify_rdp(const Polyline& line, double tolerance);

/// Repeatedly removes the shortest edge hanging off a degree-1 node while it
/// is shorter than `min_length`. Nodes that drop to degree 2 are merged
/// through; nodes left isolated by the pruning are dropped.
RoadGraph prune_hanging(const RoadGraph& g, double min_length);

/// Fuses junction nodes (degree >= 3) connected by an edge no longer than
/// `max_length` into a single node at their midpoint.
RoadGraph merge_close_junctions(const RoadGraph& g, double max_length);

/// Moves each junction to the least-squares crossing of the lines through its
/// arms, sampled between arc lengths `near` and `far` from the node. Arm
/// geometry closer than `near` is replaced by a straight run to the new spot.
RoadGraph refine_junctions(const RoadGraph& g, double near, double far);

/// skeletonize -> skeleton_to_graph -> prune_hanging -> merge_close_junctions
/// -> refine_junctions -> simplify_rdp on every edge.
RoadGraph mask_to_graph(const RasterMask& mask, const VectorizeParams& params = {});

}  // namespace roadkit
