#include "roadkit/labelgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace roadkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dims(int width, int height) {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("raster dimensions must be positive, got " + std::to_string(width) + "x" +
                                std::to_string(height));
}

void draw_line(RasterMask& mask, int x0, int y0, int x1, int y1) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (mask.contains(x0, y0)) mask(x0, y0) = 1;
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

int to_pixel(double v) {
  constexpr double kLimit = 1 << 28;
  return static_cast<int>(std::lround(std::clamp(v, -kLimit, kLimit)));
}

// Felzenszwalb-Huttenlocher lower envelope of parabolas, ignoring infinite
// sites so rows/columns without road pixels stay at +inf.
void edt_1d(const double* f, int n, std::ptrdiff_t stride, double* out, std::vector<int>& v,
            std::vector<double>& z) {
  v.resize(n);
  z.resize(n + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    const double fq = f[q * stride];
    if (fq == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      const int r = v[k];
      s = ((fq + double(q) * q) - (f[r * stride] + double(r) * r)) / (2.0 * (q - r));
      if (s <= z[k]) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) out[q * stride] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q * stride] = d * d + f[v[j] * stride];
  }
}

}  // namespace

void LabelParams::validate() const {
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be > 0");
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
  if (!(node_radius >= 1.0)) throw std::invalid_argument("node_radius must be >= 1");
}

RasterMask rasterize_centerline(const RoadGraph& g, int width, int height) {
  require_dims(width, height);
  RasterMask mask(width, height);
  for (const Edge& e : g.edges()) {
    const auto& line = e.polyline;
    for (std::size_t i = 1; i < line.size(); ++i)
      draw_line(mask, to_pixel(line[i - 1].x), to_pixel(line[i - 1].y), to_pixel(line[i].x),
                to_pixel(line[i].y));
  }
  return mask;
}

ScalarField squared_distance_map(const RasterMask& mask) {
  const int W = mask.width();
  const int H = mask.height();
  ScalarField f(W, H);
  for (std::size_t i = 0; i < mask.size(); ++i) f.data()[i] = mask.data()[i] ? 0.0 : kInf;

  ScalarField tmp(W, H);
  std::vector<int> v;
  std::vector<double> z;
  for (int x = 0; x < W; ++x) edt_1d(&f(x, 0), H, W, &tmp(x, 0), v, z);
  for (int y = 0; y < H; ++y) edt_1d(&tmp(0, y), W, 1, &f(0, y), v, z);
  return f;
}

ScalarField distance_map(const RasterMask& mask) {
  ScalarField d = squared_distance_map(mask);
  for (double& x : d.data()) x = std::sqrt(x);
  return d;
}

ScalarField gaussian_heatmap(const ScalarField& d, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be > 0");
  ScalarField g(d.width(), d.height());
  const double denom = 2.0 * theta * theta;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double di = d.data()[i];
    g.data()[i] = di == kInf ? 0.0 : std::exp(-(di * di) / denom);
  }
  return g;
}

RoadLabels connectivity_label(const RoadGraph& g, int width, int height, const LabelParams& p) {
  require_dims(width, height);
  p.validate();
  const ScalarField heat = gaussian_heatmap(distance_map(rasterize_centerline(g, width, height)), p.theta);

  RoadLabels out{RasterMask(width, height), ConnectivityMap(width, height)};
  for (std::size_t i = 0; i < heat.size(); ++i) {
    const bool road = heat.data()[i] >= p.lambda;
    out.mask.data()[i] = road ? 1 : 0;
    out.connectivity.data()[i] = road ? 2 : 0;
  }

  const auto deg = node_degrees(g);
  std::vector<std::uint8_t> assigned(heat.size(), 0);
  const double r2 = p.node_radius * p.node_radius;
  const int reach = static_cast<int>(std::ceil(p.node_radius));
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (g.is_boundary(n) || deg[n] == 0) continue;
    const auto cls = static_cast<std::uint8_t>(std::min<std::size_t>(deg[n], kMaxConnectivityClass));
    const Point c = g.nodes()[n];
    const int cx = to_pixel(c.x);
    const int cy = to_pixel(c.y);
    for (int y = cy - reach - 1; y <= cy + reach + 1; ++y) {
      for (int x = cx - reach - 1; x <= cx + reach + 1; ++x) {
        if (!out.mask.contains(x, y) || !out.mask(x, y)) continue;
        if (squared_distance({double(x), double(y)}, c) > r2) continue;
        auto& slot = assigned[static_cast<std::size_t>(y) * width + x];
        if (!slot || cls > out.connectivity(x, y)) out.connectivity(x, y) = cls;
        slot = 1;
      }
    }
  }
  return out;
}

CountGrid neighbor_counts(const RasterMask& mask, NeighborPattern pattern) {
  static constexpr int k4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  static constexpr int k8[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  const int n = pattern == NeighborPattern::four ? 4 : 8;
  const auto& offs = pattern == NeighborPattern::four ? k4 : k8;
  CountGrid counts(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      int c = 0;
      for (int i = 0; i < n; ++i) c += mask.get_or(x + offs[i][0], y + offs[i][1], 0) ? 1 : 0;
      counts(x, y) = c;
    }
  }
  return counts;
}

ConnectivityMap pixel_connectivity_label(const RasterMask& mask, NeighborPattern pattern) {
  const CountGrid counts = neighbor_counts(mask, pattern);
  ConnectivityMap out(mask.width(), mask.height());
  for (std::size_t i = 0; i < counts.size(); ++i)
    out.data()[i] = static_cast<std::uint8_t>(std::min(counts.data()[i], kMaxConnectivityClass));
  return out;
}

}  // namespace roadkit
