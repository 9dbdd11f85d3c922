#include "doctest.h"
#include "roadkit/grid.hpp"
#include "roadkit/tiling.hpp"

#include <algorithm>
#include <random>

using namespace roadkit;

namespace {

struct IdTag;
using IdGrid = Grid<int, IdTag>;
using Field = Grid<float, IdTag>;

// Owner tile per pixel; -1 when uncovered. Fails on double coverage.
IdGrid provenance(const TilePlan& plan) {
  IdGrid owner(plan.image_width, plan.image_height, -1);
  long overlaps = 0;
  for (std::size_t t = 0; t < plan.tiles.size(); ++t) {
    const Window& w = plan.tiles[t].write;
    for (int y = w.y0; y < w.y0 + w.height; ++y)
      for (int x = w.x0; x < w.x0 + w.width; ++x) {
        overlaps += owner(x, y) != -1;
        owner(x, y) = int(t);
      }
  }
  CHECK(overlaps == 0);
  return owner;
}

bool inside(const Window& inner, const Window& outer) {
  return inner.x0 >= outer.x0 && inner.y0 >= outer.y0 && inner.x0 + inner.width <= outer.x0 + outer.width &&
         inner.y0 + inner.height <= outer.y0 + outer.height;
}

}  // namespace

TEST_CASE("single tile when the image equals the patch") {
  const auto plan = plan_tiles(512, 512, 512, 368, 72);
  REQUIRE(plan.tiles.size() == 1);
  CHECK(plan.tiles[0].write == Window{0, 0, 512, 512});
  CHECK(plan.tiles[0].read == Window{0, 0, 512, 512});
}

TEST_CASE("4096 plan has 11 positions per axis with a clamped last one") {
  const auto plan = plan_tiles(4096, 4096, 512, 368, 72);
  CHECK(plan.columns == 11);
  CHECK(plan.rows == 11);
  CHECK(plan.tiles.size() == 121);
  std::vector<int> xs;
  for (int c = 0; c < plan.columns; ++c) xs.push_back(plan.tiles[c].read.x0);
  CHECK(xs == std::vector<int>{0, 368, 736, 1104, 1472, 1840, 2208, 2576, 2944, 3312, 3584});
  // Interior tiles drop the margin on the side shared with a later tile.
  CHECK(plan.tiles[0].write == Window{0, 0, 440, 440});
  CHECK(plan.tiles[12].write.x0 == 440);
  CHECK(plan.tiles[120].write.x0 + plan.tiles[120].write.width == 4096);
}

TEST_CASE("image smaller than the patch") {
  const auto plan = plan_tiles(300, 300, 512, 368, 72);
  REQUIRE(plan.tiles.size() == 1);
  CHECK(plan.tiles[0].read == Window{0, 0, 300, 300});
  CHECK(plan.tiles[0].write == Window{0, 0, 300, 300});
}

TEST_CASE("invalid parameters") {
  CHECK_THROWS_AS(plan_tiles(0, 10, 512, 368, 72), std::invalid_argument);
  CHECK_THROWS_AS(plan_tiles(100, 100, 100, 0, 10), std::invalid_argument);
  CHECK_THROWS_AS(plan_tiles(100, 100, 100, 90, 10), std::invalid_argument);  // gap between write windows
  CHECK_THROWS_AS(plan_tiles(100, 100, 20, 5, 10), std::invalid_argument);
  CHECK_THROWS_AS(plan_tiles(100, 100, 20, 5, -1), std::invalid_argument);
}

TEST_CASE("property: write windows partition the image and sit inside their read windows") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> extent(1, 700), patch(8, 200);
  for (int i = 0; i < 200; ++i) {
    const int p = patch(rng);
    const int margin = std::uniform_int_distribution<int>(0, (p - 1) / 2)(rng);
    const int stride = std::uniform_int_distribution<int>(1, p - 2 * margin)(rng);
    const int w = extent(rng), h = extent(rng);
    const auto plan = plan_tiles(w, h, p, stride, margin);
    long area = 0;
    for (const Tile& t : plan.tiles) {
      area += long(t.write.width) * t.write.height;
      CHECK(inside(t.write, t.read));
      CHECK(inside(t.read, {0, 0, w, h}));
    }
    CHECK(area == long(w) * h);
    const auto owner = provenance(plan);
    CHECK(std::count(owner.data().begin(), owner.data().end(), -1) == 0);
    CHECK(plan_tiles(w, h, p, stride, margin).tiles.size() == plan.tiles.size());
  }
}

TEST_CASE("identity model stitches back bit-exactly") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<float> u(-1, 1);
  Field image(1024, 1024);
  for (float& v : image.data()) v = u(rng);
  const auto plan = plan_tiles(1024, 1024, 512, 368, 72);
  std::vector<Field> outputs;
  for (const Tile& t : plan.tiles) outputs.push_back(crop_tile(image, t));
  CHECK(stitch<Field>(plan, outputs) == image);

  const auto single = plan_tiles(200, 100, 512, 368, 72);
  Field small(200, 100, 3.0f);
  std::vector<Field> one{small};
  CHECK(stitch<Field>(single, one) == small);
}

TEST_CASE("checker tiles reveal disjoint provenance") {
  const auto plan = plan_tiles(900, 700, 256, 160, 40);
  std::vector<IdGrid> outputs;
  for (std::size_t t = 0; t < plan.tiles.size(); ++t)
    outputs.emplace_back(plan.tiles[t].read.width, plan.tiles[t].read.height, int(t));
  CHECK(stitch<IdGrid>(plan, outputs) == provenance(plan));

  outputs.pop_back();
  CHECK_THROWS_AS(stitch<IdGrid>(plan, outputs), std::invalid_argument);
}
