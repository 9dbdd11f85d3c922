#include "doctest.h"
#include "roadkit/geometry.hpp"

#include <vector>

using namespace roadkit;

TEST_CASE("segment projection clamps to the ends") {
  const Point a{0, 0}, b{10, 0};
  auto mid = project_onto_segment({4, 3}, a, b);
  CHECK(mid.point == Point{4, 0});
  CHECK(mid.t == doctest::Approx(0.4));
  CHECK(mid.squared_distance == doctest::Approx(9));

  auto before = project_onto_segment({-3, 4}, a, b);
  CHECK(before.point == a);
  CHECK(before.t == 0.0);
  CHECK(point_segment_distance({-3, 4}, a, b) == doctest::Approx(5));

  auto after = project_onto_segment({12, 0}, a, b);
  CHECK(after.point == b);
  CHECK(after.t == 1.0);
}

TEST_CASE("degenerate segment is a point") {
  CHECK(point_segment_distance({3, 4}, {0, 0}, {0, 0}) == doctest::Approx(5));
}

TEST_CASE("polyline length and arc-length lookup") {
  const std::vector<Point> line{{0, 0}, {3, 4}, {3, 10}};
  CHECK(polyline_length(line) == doctest::Approx(11));
  CHECK(point_at_arc_length(line, 0) == Point{0, 0});
  CHECK(point_at_arc_length(line, 2.5).x == doctest::Approx(1.5));
  CHECK(point_at_arc_length(line, 8).y == doctest::Approx(7));
  CHECK(point_at_arc_length(line, 50) == Point{3, 10});
  CHECK(polyline_length(std::vector<Point>{{1, 1}}) == 0.0);
}
