#include "roadkit/tiling.hpp"

#include <algorithm>

namespace roadkit {

namespace {

struct Span1d {
  int read_start, read_len, write_start, write_end;
};

std::vector<Span1d> plan_axis(int extent, int patch, int stride, int margin) {
  std::vector<int> starts;
  if (extent <= patch) {
    starts.push_back(0);
  } else {
    for (int s = 0; s + patch < extent; s += stride) starts.push_back(s);
    if (starts.back() + patch < extent) starts.push_back(extent - patch);
  }
  const int len = std::min(patch, extent);
  std::vector<Span1d> spans;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const bool last = k + 1 == starts.size();
    Span1d s{starts[k], len, 0, 0};
    s.write_start = k == 0 ? 0 : spans.back().write_end;
    s.write_end = last ? extent : starts[k] + patch - margin;
    spans.push_back(s);
  }
  return spans;
}

}  // namespace

TilePlan plan_tiles(int image_width, int image_height, int patch, int stride, int margin) {
  if (image_width <= 0 || image_height <= 0) throw std::invalid_argument("image dimensions must be positive");
  if (margin < 0) throw std::invalid_argument("margin must be >= 0");
  if (patch <= 2 * margin) throw std::invalid_argument("patch must exceed twice the margin");
  if (stride <= 0 || stride > patch - 2 * margin)
    throw std::invalid_argument("stride must lie in (0, patch - 2 * margin]");

  const auto cols = plan_axis(image_width, patch, stride, margin);
  const auto rows = plan_axis(image_height, patch, stride, margin);
  TilePlan plan{image_width, image_height, patch, stride, margin,
                static_cast<int>(cols.size()), static_cast<int>(rows.size()), {}};
  for (const auto& r : rows) {
    for (const auto& c : cols) {
      Tile t;
      t.read = {c.read_start, r.read_start, c.read_len, r.read_len};
      t.write = {c.write_start, r.write_start, c.write_end - c.write_start, r.write_end - r.write_start};
      t.paste_x = c.write_start - c.read_start;
      t.paste_y = r.write_start - r.read_start;
      plan.tiles.push_back(t);
    }
  }
  return plan;
}

}  // namespace roadkit
