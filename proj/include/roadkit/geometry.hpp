#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace roadkit {

/// 2-D point in pixel coordinates; x grows right, y grows down.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double squared_distance(Point a, Point b) { return dot(a - b, a - b); }
inline double distance(Point a, Point b) { return std::sqrt(squared_distance(a, b)); }

/// Closest point on segment [a, b] to p.
struct SegmentProjection {
  Point point;
  double t = 0.0;  // parameter in [0, 1] along a -> b
  double squared_distance = 0.0;
};

SegmentProjection project_onto_segment(Point p, Point a, Point b);

inline double point_segment_distance(Point p, Point a, Point b) {
  return std::sqrt(project_onto_segment(p, a, b).squared_distance);
}

double polyline_length(std::span<const Point> line);

/// Point at arc length `s` from the start of `line` (clamped to the ends).
Point point_at_arc_length(std::span<const Point> line, double s);

}  // namespace roadkit
