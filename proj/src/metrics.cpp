#include "roadkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "roadkit/labelgen.hpp"

namespace roadkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSameSpot = 1e-9;

struct WeightedGraph {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj;

  explicit WeightedGraph(std::size_t n) : adj(n) {}

  std::size_t add_node() {
    adj.emplace_back();
    return adj.size() - 1;
  }

  void add_edge(std::size_t a, std::size_t b, double w) {
    adj[a].emplace_back(b, w);
    if (a != b) adj[b].emplace_back(a, w);
  }

  std::vector<double> shortest_from(std::size_t src) const {
    std::vector<double> dist(adj.size(), kInf);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[src] = 0.0;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (const auto& [v, w] : adj[u]) {
        const double nd = d + w;
        if (nd < dist[v]) {
          dist[v] = nd;
          heap.emplace(nd, v);
        }
      }
    }
    return dist;
  }
};

WeightedGraph to_weighted(const RoadGraph& g) {
  WeightedGraph wg(g.node_count());
  for (const Edge& e : g.edges()) wg.add_edge(e.a, e.b, e.length());
  return wg;
}

struct Snap {
  std::size_t edge = 0;
  double offset = 0.0;  // arc length from edge.a
  std::optional<std::size_t> node;
};

// Nearest location on `g` to `p` within `radius`. Nodes count as locations so
// isolated nodes can still be matched.
std::optional<Snap> snap_point(const RoadGraph& g, Point p, double radius) {
  const double r2 = radius * radius;
  double best = kInf;
  std::optional<Snap> out;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    const double d = squared_distance(p, g.nodes()[n]);
    if (d <= kSameSpot * kSameSpot) return Snap{0, 0.0, n};
    if (d <= r2 && d < best) {
      best = d;
      out = Snap{0, 0.0, n};
    }
  }
  for (std::size_t i = 0; i < g.edge_count(); ++i) {
    const auto& line = g.edges()[i].polyline;
    double walked = 0.0;
    for (std::size_t s = 1; s < line.size(); ++s) {
      const auto proj = project_onto_segment(p, line[s - 1], line[s]);
      const double seg = distance(line[s - 1], line[s]);
      if (proj.squared_distance <= r2 && proj.squared_distance < best) {
        best = proj.squared_distance;
        out = Snap{i, walked + proj.t * seg, std::nullopt};
      }
      walked += seg;
    }
  }
  if (out && !out->node) {
    // snapping onto an edge end is snapping onto its node
    const Edge& e = g.edges()[out->edge];
    if (out->offset <= kSameSpot) out->node = e.a;
    else if (out->offset >= e.length() - kSameSpot) out->node = e.b;
  }
  return out;
}

}  // namespace

void AplsParams::validate() const {
  if (!(snap_radius > 0.0)) throw std::invalid_argument("snap_radius must be > 0");
  if (!(sample_spacing > 0.0)) throw std::invalid_argument("sample_spacing must be > 0");
}

double iou(const RasterMask& pred, const RasterMask& gt) {
  require_same_shape(pred, gt, "iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred.data()[i] != 0;
    const bool b = gt.data()[i] != 0;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double relaxed_iou(const RasterMask& pred, const RasterMask& gt, double rho) {
  require_same_shape(pred, gt, "relaxed_iou");
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
  const ScalarField to_gt = squared_distance_map(gt);
  const ScalarField to_pred = squared_distance_map(pred);
  const double r2 = rho * rho;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred.data()[i]) (to_gt.data()[i] <= r2 ? tp : fp) += 1;
    if (gt.data()[i] && !(to_pred.data()[i] <= r2)) fn += 1;
  }
  const std::size_t total = tp + fp + fn;
  return total == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(total);
}

PixelScore pixel_score(const RasterMask& pred, const RasterMask& gt, double rho) {
  return {iou(pred, gt), relaxed_iou(pred, gt, rho), rho};
}

RoadGraph build_control_points(const RoadGraph& g, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be > 0");
  std::vector<Point> nodes = g.nodes();
  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) {
    const double len = e.length();
    const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(len / spacing)));
    if (pieces == 1) {
      edges.push_back(e);
      continue;
    }
    // walk the polyline once, cutting at k * len / pieces
    const auto& line = e.polyline;
    std::size_t prev_node = e.a;
    std::vector<Point> current{line.front()};
    std::size_t k = 1;
    double walked = 0.0;
    for (std::size_t s = 1; s < line.size(); ++s) {
      const double seg = distance(line[s - 1], line[s]);
      while (k < pieces) {
        const double target = len * static_cast<double>(k) / static_cast<double>(pieces);
        if (target > walked + seg) break;
        const double t = seg > 0.0 ? (target - walked) / seg : 0.0;
        const Point cut = line[s - 1] + t * (line[s] - line[s - 1]);
        if (cut == current.back() || cut == line.back()) {
          ++k;
          continue;
        }
        current.push_back(cut);
        const std::size_t id = nodes.size();
        nodes.push_back(cut);
        edges.push_back({prev_node, id, std::move(current)});
        prev_node = id;
        current = {cut};
        ++k;
      }
      if (line[s] != current.back()) current.push_back(line[s]);
      walked += seg;
    }
    if (current.size() < 2) current.push_back(line.back());
    edges.push_back({prev_node, e.b, std::move(current)});
  }
  return RoadGraph(std::move(nodes), std::move(edges), g.boundary_nodes());
}

double snap_similarity(const RoadGraph& ref_graph, const RoadGraph& prop_graph, const AplsParams& p) {
  p.validate();
  const RoadGraph ref = build_control_points(ref_graph, p.sample_spacing);
  const RoadGraph prop = build_control_points(prop_graph, p.sample_spacing);
  const WeightedGraph ref_w = to_weighted(ref);

  // Place every ref node on the proposal; edge snaps become new split nodes.
  std::vector<std::optional<std::size_t>> image(ref.node_count());
  std::vector<std::vector<std::pair<double, std::size_t>>> cuts(prop.edge_count());
  std::size_t next_id = prop.node_count();
  for (std::size_t n = 0; n < ref.node_count(); ++n) {
    const auto snap = snap_point(prop, ref.nodes()[n], p.snap_radius);
    if (!snap) continue;
    if (snap->node) {
      image[n] = *snap->node;
      continue;
    }
    auto& list = cuts[snap->edge];
    const auto same = std::find_if(list.begin(), list.end(), [&](const auto& c) { return c.first == snap->offset; });
    if (same != list.end()) {
      image[n] = same->second;
    } else {
      list.emplace_back(snap->offset, next_id);
      image[n] = next_id++;
    }
  }
  WeightedGraph prop_w(next_id);
  for (std::size_t i = 0; i < prop.edge_count(); ++i) {
    const Edge& e = prop.edges()[i];
    auto& list = cuts[i];
    if (list.empty()) {
      prop_w.add_edge(e.a, e.b, e.length());
      continue;
    }
    std::sort(list.begin(), list.end());
    std::size_t prev = e.a;
    double prev_off = 0.0;
    for (const auto& [off, id] : list) {
      prop_w.add_edge(prev, id, off - prev_off);
      prev = id;
      prev_off = off;
    }
    prop_w.add_edge(prev, e.b, e.length() - prev_off);
  }

  double penalty = 0.0;
  std::size_t paths = 0;
  for (std::size_t a = 0; a < ref.node_count(); ++a) {
    const auto ref_dist = ref_w.shortest_from(a);
    std::vector<double> prop_dist;
    if (image[a]) prop_dist = prop_w.shortest_from(*image[a]);
    for (std::size_t b = a + 1; b < ref.node_count(); ++b) {
      const double len = ref_dist[b];
      if (len == kInf || len <= 0.0) continue;
      ++paths;
      if (!image[a] || !image[b]) {
        penalty += 1.0;
        continue;
      }
      const double other = prop_dist[*image[b]];
      penalty += other == kInf ? 1.0 : std::min(1.0, std::abs(len - other) / len);
    }
  }
  if (paths == 0) return 1.0;
  return 1.0 - penalty / static_cast<double>(paths);
}

double apls(const RoadGraph& gt, const RoadGraph& prop, const AplsParams& p) {
  const double forward = snap_similarity(gt, prop, p);
  const double backward = snap_similarity(prop, gt, p);
  if (forward <= 0.0 || backward <= 0.0) return 0.0;
  return 2.0 / (1.0 / forward + 1.0 / backward);
}

double apls_batch(std::span<const std::pair<RoadGraph, RoadGraph>> pairs, const AplsParams& p) {
  if (pairs.empty()) throw std::invalid_argument("apls_batch: empty batch");
  double sum = 0.0;
  for (const auto& [gt, prop] : pairs) sum += apls(gt, prop, p);
  return sum / static_cast<double>(pairs.size());
}

}  // namespace roadkit
