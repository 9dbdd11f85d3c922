#include "roadkit/geometry.hpp"

#include <algorithm>

namespace roadkit {

SegmentProjection project_onto_segment(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  // keep the endpoints bit-exact
  const Point q = t == 0.0 ? a : (t == 1.0 ? b : a + t * ab);
  return {q, t, squared_distance(p, q)};
}

double polyline_length(std::span<const Point> line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) total += distance(line[i - 1], line[i]);
  return total;
}

Point point_at_arc_length(std::span<const Point> line, double s) {
  if (line.empty()) return {};
  if (s <= 0.0) return line.front();
  double walked = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double seg = distance(line[i - 1], line[i]);
    if (walked + seg >= s && seg > 0.0) {
      const double t = (s - walked) / seg;
      return line[i - 1] + t * (line[i] - line[i - 1]);
    }
    walked += seg;
  }
  return line.back();
}

}  // namespace roadkit
