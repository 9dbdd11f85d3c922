#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roadkit/geometry.hpp"
#include "roadkit/graph.hpp"

namespace roadkit {

struct Tile {
  Window read;   // patch fed to the model
  Window write;  // region of the output image this tile owns
  /// Offset of `write` inside `read`, i.e. where to crop the tile output.
  int paste_x = 0;
  int paste_y = 0;
};

/// Overlapping-patch inference layout. Write windows partition the image.
struct TilePlan {
  int image_width = 0;
  int image_height = 0;
  int patch = 0;
  int stride = 0;
  int margin = 0;
  int columns = 0;
  int rows = 0;
  std::vector<Tile> tiles;  // row-major
};

/// Read windows step by `stride`; the last row/column is shifted back to end
/// on the image border. Interior sides of each write window drop `margin`
/// pixels, border sides extend to the image edge, and where clamping makes
/// neighbours overlap the earlier tile keeps the pixels. Images smaller than
/// the patch get a single tile clamped to the image.
TilePlan plan_tiles(int image_width, int image_height, int patch, int stride, int margin);

/// Assembles a full image from per-tile outputs (one per tile, each the size
/// of its read window).
template <typename G>
G stitch(const TilePlan& plan, std::span<const G> outputs) {
  if (outputs.size() != plan.tiles.size())
    throw std::invalid_argument("stitch: expected " + std::to_string(plan.tiles.size()) + " tile outputs, got " +
                                std::to_string(outputs.size()));
  G image(plan.image_width, plan.image_height);
  for (std::size_t t = 0; t < plan.tiles.size(); ++t) {
    const Tile& tile = plan.tiles[t];
    const G& out = outputs[t];
    if (out.width() != tile.read.width || out.height() != tile.read.height)
      throw std::invalid_argument("stitch: tile " + std::to_string(t) + " output does not match its read window");
    for (int y = 0; y < tile.write.height; ++y)
      for (int x = 0; x < tile.write.width; ++x)
        image(tile.write.x0 + x, tile.write.y0 + y) = out(tile.paste_x + x, tile.paste_y + y);
  }
  return image;
}

/// Copy of the read window of `image` for `tile`.
template <typename G>
G crop_tile(const G& image, const Tile& tile) {
  G out(tile.read.width, tile.read.height);
  for (int y = 0; y < tile.read.height; ++y)
    for (int x = 0; x < tile.read.width; ++x) out(x, y) = image(tile.read.x0 + x, tile.read.y0 + y);
  return out;
}

}  // namespace roadkit
