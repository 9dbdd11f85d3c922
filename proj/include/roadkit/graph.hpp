#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "roadkit/geometry.hpp"

namespace roadkit {

/// Endpoints closer than this are treated as the same node.
inline constexpr double kMergeTolerance = 1e-6;

/// Malformed graph document. `line` is 1-based (0 when unknown).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line, std::string field)
      : std::runtime_error(message), line_(line), field_(std::move(field)) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// Structurally valid document that violates the graph schema
/// (dangling node index, polyline not matching its endpoints, ...).
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& message, std::string field)
      : std::runtime_error(message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  /// Full geometry; front() sits on node a and back() on node b.
  std::vector<Point> polyline;

  double length() const { return polyline_length(polyline); }
  bool is_self_loop() const { return a == b; }
};

/// Axis-aligned pixel window.
struct Window {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const Window&, const Window&) = default;
};

/// Planar undirected road-centerline graph. Immutable once built; the
/// constructor enforces the invariants (valid endpoints, polylines anchored
/// on their nodes, no zero-length edges).
class RoadGraph {
 public:
  RoadGraph() = default;
  /// Edges with an empty polyline become straight segments. A polyline whose
  /// ends match the nodes within kMergeTolerance is snapped onto them
  /// (reversed if it runs b -> a).
  RoadGraph(std::vector<Point> nodes, std::vector<Edge> edges,
            std::set<std::size_t> boundary_nodes = {});

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  /// Nodes created by clipping at a window edge; not real road ends.
  const std::set<std::size_t>& boundary_nodes() const { return boundary_; }
  bool is_boundary(std::size_t node) const { return boundary_.contains(node); }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return nodes_.empty() && edges_.empty(); }

 private:
  std::vector<Point> nodes_;
  std::vector<Edge> edges_;
  std::set<std::size_t> boundary_;
};

/// Parses the graph-JSON document
/// `{"nodes":[[x,y],...],"edges":[{"a":i,"b":j,"polyline":[[x,y],...]},...]}`.
/// Nodes closer than kMergeTolerance are merged; edges that collapse to zero
/// length are dropped. An optional "boundary_nodes" index array is honoured.
RoadGraph parse_graph(std::string_view document);

/// Inverse of parse_graph. "boundary_nodes" is only written when non-empty.
std::string serialize_graph(const RoadGraph& g);

/// Incident edge count per node; a self-loop adds 2.
std::vector<std::size_t> node_degrees(const RoadGraph& g);

/// Clips every polyline to the closed rectangle of `w`. Crossing points become
/// new nodes flagged as boundary nodes. Coordinates are left in the source
/// frame; see translate_graph.
RoadGraph crop_graph(const RoadGraph& g, const Window& w);

/// Shifts every coordinate by (dx, dy).
RoadGraph translate_graph(const RoadGraph& g, double dx, double dy);

}  // namespace roadkit
