#include "roadkit/synth.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace roadkit {

RoadGraph random_road_graph(std::mt19937_64& rng, const SynthOptions& o) {
  const int cols = static_cast<int>((o.width - 2 * o.margin) / o.spacing) + 1;
  const int rows = static_cast<int>((o.height - 2 * o.margin) / o.spacing) + 1;
  if (cols < 1 || rows < 1) throw std::invalid_argument("synthetic graph does not fit the image");

  std::uniform_real_distribution<double> jitter(-o.jitter, o.jitter);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> nodes;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      nodes.push_back({o.margin + c * o.spacing + jitter(rng), o.margin + r * o.spacing + jitter(rng)});

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      if (c + 1 < cols) candidates.emplace_back(i, i + 1);
      if (r + 1 < rows) candidates.emplace_back(i, i + cols);
    }
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);

  std::vector<std::size_t> parent(nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };

  std::vector<Edge> edges;
  for (const auto& [a, b] : candidates) {
    const auto ra = find(a);
    const auto rb = find(b);
    const bool joins = ra != rb;
    if (joins) parent[ra] = rb;
    if (joins || unit(rng) < o.extra_edge_probability) edges.push_back({a, b, {}});
  }
  return RoadGraph(std::move(nodes), std::move(edges));
}

RasterMask random_mask(std::mt19937_64& rng, int width, int height, double density) {
  std::bernoulli_distribution on(density);
  RasterMask m(width, height);
  for (auto& v : m.data()) v = on(rng) ? 1 : 0;
  return m;
}

}  // namespace roadkit
