#include "doctest.h"
#include "oracles.hpp"
#include "roadkit/labelgen.hpp"
#include "roadkit/synth.hpp"

#include <cmath>
#include <random>

using namespace roadkit;

namespace {

RoadGraph segment(Point a, Point b) { return RoadGraph({a, b}, {{0, 1, {}}}); }

RoadGraph crossroad() {
  return RoadGraph({{32, 32}, {2, 32}, {62, 32}, {32, 2}, {32, 62}}, {{0, 1, {}}, {0, 2, {}}, {0, 3, {}}, {0, 4, {}}});
}

int count_on(const RasterMask& m) {
  int n = 0;
  for (auto v : m.data()) n += v;
  return n;
}

}  // namespace

TEST_CASE("rasterize: horizontal segment") {
  const auto m = rasterize_centerline(segment({0, 3}, {9, 3}), 10, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x) CHECK(m(x, y) == (y == 3 ? 1 : 0));
}

TEST_CASE("rasterize: diagonal and empty") {
  const auto m = rasterize_centerline(segment({0, 0}, {4, 4}), 6, 6);
  CHECK(count_on(m) == 5);
  for (int i = 0; i < 5; ++i) CHECK(m(i, i) == 1);
  CHECK(count_on(rasterize_centerline(RoadGraph{}, 7, 7)) == 0);
  CHECK_THROWS_AS(rasterize_centerline(RoadGraph{}, 0, 4), std::invalid_argument);
}

TEST_CASE("rasterize: lines are 8-connected") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 39);
  for (int i = 0; i < 50; ++i) {
    const auto m = rasterize_centerline(segment({u(rng), u(rng)}, {u(rng), u(rng)}), 40, 40);
    CHECK(oracle::component_count(m) == 1);
    CHECK_FALSE(oracle::has_solid_block(m));
  }
}

TEST_CASE("distance map basics") {
  RasterMask m(5, 5);
  m(2, 2) = 1;
  const auto d = distance_map(m);
  CHECK(d(2, 2) == 0.0);
  CHECK(d(3, 2) == 1.0);
  CHECK(d(3, 3) == doctest::Approx(1.41421356).epsilon(1e-9));
  CHECK(d(0, 0) == doctest::Approx(std::sqrt(8.0)));
}

TEST_CASE("distance map of an empty mask is infinite") {
  const auto d = distance_map(RasterMask(4, 3));
  for (double v : d.data()) CHECK(std::isinf(v));
}

TEST_CASE("property: distance map matches brute force") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 64);
  std::uniform_real_distribution<double> density(0.0, 0.2);
  for (int i = 0; i < 40; ++i) {
    const int w = dim(rng), h = dim(rng);
    const auto m = random_mask(rng, w, h, density(rng));
    const auto d = distance_map(m);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double ref = oracle::nearest_road_distance(m, x, y);
        if (std::isinf(ref))
          CHECK(std::isinf(d(x, y)));
        else
          CHECK(std::abs(d(x, y) - ref) <= 1e-6);
      }
  }
}

TEST_CASE("gaussian heatmap") {
  ScalarField d(3, 1);
  d(0, 0) = 0;
  d(1, 0) = 2;
  d(2, 0) = std::numeric_limits<double>::infinity();
  const auto g = gaussian_heatmap(d, 2.0);
  CHECK(g(0, 0) == 1.0);
  CHECK(g(1, 0) == doctest::Approx(0.60653066).epsilon(1e-9));
  CHECK(g(2, 0) == 0.0);
  CHECK_THROWS_AS(gaussian_heatmap(d, 0.0), std::invalid_argument);
}

TEST_CASE("property: heatmap is 1 on road, below 1 elsewhere") {
  std::mt19937_64 rng(5);
  const auto m = random_mask(rng, 30, 30, 0.05);
  const auto d = distance_map(m);
  const auto g = gaussian_heatmap(d, 2.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.data()[i])
      CHECK(g.data()[i] == 1.0);
    else
      CHECK(g.data()[i] < 1.0);
  }
}

TEST_CASE("connectivity label: straight road") {
  const auto labels = connectivity_label(segment({5, 20}, {60, 20}), 66, 40, LabelParams{});
  CHECK(labels.connectivity(32, 20) == 2);
  CHECK(labels.connectivity(32, 21) == 2);
  CHECK(labels.connectivity(5, 20) == 1);
  CHECK(labels.connectivity(60, 20) == 1);
  CHECK(labels.connectivity(32, 30) == 0);
  // Band half-width is theta: |dy| <= 2 is road, 3 is not.
  CHECK(labels.mask(32, 22) == 1);
  CHECK(labels.mask(32, 23) == 0);
}

TEST_CASE("connectivity label: crossroad and clamped high degree") {
  const auto labels = connectivity_label(crossroad(), 65, 65, LabelParams{});
  CHECK(labels.connectivity(32, 32) == 4);
  CHECK(labels.connectivity(33, 33) == 4);
  CHECK(labels.connectivity(32, 20) == 2);

  std::vector<Point> nodes{{40, 40}};
  std::vector<Edge> edges;
  for (int k = 0; k < 7; ++k) {
    const double a = 2 * M_PI * k / 7;
    nodes.push_back({40 + 30 * std::cos(a), 40 + 30 * std::sin(a)});
    edges.push_back({0, nodes.size() - 1, {}});
  }
  const auto hub = connectivity_label(RoadGraph(nodes, edges), 81, 81, LabelParams{});
  CHECK(hub.connectivity(40, 40) == 5);
}

TEST_CASE("connectivity label: boundary nodes are not endpoints") {
  const RoadGraph g({{0, 10}, {30, 10}}, {{0, 1, {}}}, {0});
  const auto labels = connectivity_label(g, 40, 20, LabelParams{});
  CHECK(labels.connectivity(0, 10) == 2);
  CHECK(labels.connectivity(30, 10) == 1);
}

TEST_CASE("connectivity label: empty graph and bad parameters") {
  const auto labels = connectivity_label(RoadGraph{}, 8, 8, LabelParams{});
  CHECK(count_on(labels.mask) == 0);
  LabelParams bad;
  bad.lambda = 1.5;
  CHECK_THROWS_AS(connectivity_label(RoadGraph{}, 8, 8, bad), std::invalid_argument);
}

TEST_CASE("property: class support equals the thresholded heatmap, classes follow degree") {
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const auto g = random_road_graph(rng);
    const LabelParams p;
    const auto labels = connectivity_label(g, 320, 320, p);
    const auto heat = gaussian_heatmap(distance_map(rasterize_centerline(g, 320, 320)), p.theta);
    const auto deg = node_degrees(g);
    for (int y = 0; y < 320; ++y) {
      for (int x = 0; x < 320; ++x) {
        const int cls = labels.connectivity(x, y);
        CHECK((cls >= 1) == (heat(x, y) >= p.lambda));
        CHECK(cls <= 5);
        if (!cls) continue;
        int expected = 2;
        for (std::size_t n = 0; n < g.node_count(); ++n)
          if (deg[n] > 0 && squared_distance({double(x), double(y)}, g.nodes()[n]) <= p.node_radius * p.node_radius)
            expected = int(std::min<std::size_t>(deg[n], 5));
        CHECK(cls == expected);
      }
    }
  }
}

TEST_CASE("pixel neighbor counts") {
  RasterMask lone(3, 3);
  lone(1, 1) = 1;
  CHECK(neighbor_counts(lone, NeighborPattern::eight)(1, 1) == 0);

  RasterMask block(3, 3, 1);
  CHECK(neighbor_counts(block, NeighborPattern::four)(1, 1) == 4);
  CHECK(neighbor_counts(block, NeighborPattern::eight)(1, 1) == 8);
  CHECK(pixel_connectivity_label(block, NeighborPattern::eight)(1, 1) == 5);

  RasterMask line(5, 3);
  for (int x = 0; x < 5; ++x) line(x, 1) = 1;
  CHECK(neighbor_counts(line, NeighborPattern::four)(2, 1) == 2);
  CHECK(neighbor_counts(line, NeighborPattern::four)(0, 1) == 1);
}

TEST_CASE("property: eight-neighbor count dominates four-neighbor count") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const auto m = random_mask(rng, 24, 17, 0.4);
    const auto c4 = neighbor_counts(m, NeighborPattern::four);
    const auto c8 = neighbor_counts(m, NeighborPattern::eight);
    for (std::size_t k = 0; k < m.size(); ++k) CHECK(c8.data()[k] >= c4.data()[k]);
  }
}
