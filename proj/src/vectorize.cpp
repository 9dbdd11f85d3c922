#include "roadkit/vectorize.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <limits>
#include <map>
#include <optional>

namespace roadkit {

namespace {

// Zhang-Suen neighbour order P2..P9: N, NE, E, SE, S, SW, W, NW.
constexpr std::array<std::array<int, 2>, 8> kRing = {{{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};

std::array<int, 8> ring(const RasterMask& m, int x, int y) {
  std::array<int, 8> p{};
  for (int i = 0; i < 8; ++i) p[i] = m.get_or(x + kRing[i][0], y + kRing[i][1], 0) ? 1 : 0;
  return p;
}

int count_on(const std::array<int, 8>& p) {
  int b = 0;
  for (int v : p) b += v;
  return b;
}

// Number of 0 -> 1 transitions around the ring.
int transitions(const std::array<int, 8>& p) {
  int a = 0;
  for (int i = 0; i < 8; ++i) a += (p[i] == 0 && p[(i + 1) % 8] == 1) ? 1 : 0;
  return a;
}

/// Yokoi 8-connectivity number == 1, i.e. deleting the pixel changes neither
/// the 8-connected foreground nor the 4-connected background.
bool is_simple(const std::array<int, 8>& p) {
  // Yokoi ordering starting east, counter-clockwise: E, NE, N, NW, W, SW, S, SE.
  const int x[9] = {p[2], p[1], p[0], p[7], p[6], p[5], p[4], p[3], p[2]};
  int n = 0;
  for (int k = 0; k < 8; k += 2) {
    const int a = 1 - x[k];
    const int b = 1 - x[k + 1];
    const int c = 1 - x[(k + 2) % 8];
    n += a - a * b * c;
  }
  return n == 1;
}

bool deletable(const RasterMask& m, int x, int y) {
  const auto p = ring(m, x, y);
  return count_on(p) >= 2 && is_simple(p);
}

bool zhang_suen_pass(RasterMask& m, int step) {
  std::vector<std::pair<int, int>> marked;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y)) continue;
      const auto p = ring(m, x, y);
      const int b = count_on(p);
      if (b < 2 || b > 6 || transitions(p) != 1) continue;
      const int n = p[0], e = p[2], s = p[4], w = p[6];
      if (step == 0 ? (n * e * s == 0 && e * s * w == 0) : (n * e * w == 0 && n * s * w == 0))
        marked.emplace_back(x, y);
    }
  }
  bool changed = false;
  for (auto [x, y] : marked) {
    // sequential re-check: parallel deletion would erase 2x2 squares outright
    if (deletable(m, x, y)) {
      m(x, y) = 0;
      changed = true;
    }
  }
  return changed;
}

bool remove_redundant(RasterMask& m) {
  bool any = false;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        if (m(x, y) && deletable(m, x, y)) {
          m(x, y) = 0;
          changed = any = true;
        }
  }
  return any;
}

std::optional<std::pair<int, int>> find_block(const RasterMask& m) {
  for (int y = 0; y + 1 < m.height(); ++y)
    for (int x = 0; x + 1 < m.width(); ++x)
      if (m(x, y) && m(x + 1, y) && m(x, y + 1) && m(x + 1, y + 1)) return std::make_pair(x, y);
  return std::nullopt;
}

// Foreground reachable from `start` without passing `stop`; the search ends
// early (returns nullopt) once it touches a pixel of `anchor`.
std::optional<std::vector<std::pair<int, int>>> detached_fragment(
    const RasterMask& m, std::pair<int, int> start, const std::vector<std::pair<int, int>>& anchor) {
  std::vector<std::uint8_t> seen(m.size(), 0);
  std::vector<std::pair<int, int>> frag;
  std::deque<std::pair<int, int>> queue{start};
  seen[static_cast<std::size_t>(start.second) * m.width() + start.first] = 1;
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    if (std::find(anchor.begin(), anchor.end(), std::make_pair(x, y)) != anchor.end()) return std::nullopt;
    frag.emplace_back(x, y);
    for (const auto& d : kRing) {
      const int nx = x + d[0], ny = y + d[1];
      if (!m.get_or(nx, ny, 0)) continue;
      auto& s = seen[static_cast<std::size_t>(ny) * m.width() + nx];
      if (s) continue;
      s = 1;
      queue.emplace_back(nx, ny);
    }
  }
  return frag;
}

// A 2x2 block whose four pixels are all topologically required (each one
// carries its own diagonal branch). Removes the block pixel whose loss
// detaches the fewest pixels, together with what it detaches.
void break_block(RasterMask& m, int bx, int by) {
  const std::vector<std::pair<int, int>> block = {{bx, by}, {bx + 1, by}, {bx, by + 1}, {bx + 1, by + 1}};
  std::optional<std::vector<std::pair<int, int>>> best;
  std::pair<int, int> best_pixel = block[0];
  for (const auto& px : block) {
    m(px.first, px.second) = 0;
    std::vector<std::pair<int, int>> anchor;
    for (const auto& q : block)
      if (q != px) anchor.push_back(q);
    std::vector<std::pair<int, int>> lost;
    for (const auto& d : kRing) {
      const int nx = px.first + d[0], ny = px.second + d[1];
      if (!m.get_or(nx, ny, 0)) continue;
      if (std::find(anchor.begin(), anchor.end(), std::make_pair(nx, ny)) != anchor.end()) continue;
      if (std::find(lost.begin(), lost.end(), std::make_pair(nx, ny)) != lost.end()) continue;
      if (auto frag = detached_fragment(m, {nx, ny}, anchor)) lost.insert(lost.end(), frag->begin(), frag->end());
    }
    m(px.first, px.second) = 1;
    if (!best || lost.size() < best->size()) {
      best = std::move(lost);
      best_pixel = px;
    }
  }
  m(best_pixel.first, best_pixel.second) = 0;
  for (const auto& [x, y] : *best) m(x, y) = 0;
}

}  // namespace

bool is_thin(const RasterMask& mask) { return !find_block(mask).has_value(); }

RasterMask skeletonize(const RasterMask& mask) {
  RasterMask m = mask;
  for (auto& v : m.data()) v = v ? 1 : 0;
  while (true) {
    const bool a = zhang_suen_pass(m, 0);
    const bool b = zhang_suen_pass(m, 1);
    if (!a && !b) break;
  }
  remove_redundant(m);
  while (const auto block = find_block(m)) {
    break_block(m, block->first, block->second);
    remove_redundant(m);
  }
  return m;
}

RoadGraph skeleton_to_graph(const RasterMask& skel) {
  if (!is_thin(skel)) throw PreconditionError("skeleton_to_graph: input contains a solid 2x2 block");
  const int W = skel.width();
  const int H = skel.height();
  auto idx = [W](int x, int y) { return static_cast<std::size_t>(y) * W + x; };
  auto on = [&](int x, int y) { return skel.get_or(x, y, 0) != 0; };

  std::vector<int> count(skel.size(), 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      if (on(x, y))
        for (const auto& d : kRing) count[idx(x, y)] += on(x + d[0], y + d[1]) ? 1 : 0;

  std::vector<int> node_of(skel.size(), -1);
  std::vector<Point> nodes;
  std::vector<std::vector<std::pair<int, int>>> node_pixels;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!on(x, y) || count[idx(x, y)] == 2 || node_of[idx(x, y)] >= 0) continue;
      const int id = static_cast<int>(nodes.size());
      std::vector<std::pair<int, int>> pixels;
      if (count[idx(x, y)] < 2) {
        pixels.emplace_back(x, y);
        node_of[idx(x, y)] = id;
      } else {
        std::deque<std::pair<int, int>> queue{{x, y}};
        node_of[idx(x, y)] = id;
        while (!queue.empty()) {
          const auto [cx, cy] = queue.front();
          queue.pop_front();
          pixels.emplace_back(cx, cy);
          for (const auto& d : kRing) {
            const int nx = cx + d[0], ny = cy + d[1];
            if (!on(nx, ny) || count[idx(nx, ny)] < 3 || node_of[idx(nx, ny)] >= 0) continue;
            node_of[idx(nx, ny)] = id;
            queue.emplace_back(nx, ny);
          }
        }
        std::sort(pixels.begin(), pixels.end(), [](auto a, auto b) { return std::tie(a.second, a.first) < std::tie(b.second, b.first); });
      }
      Point c;
      for (const auto& [px, py] : pixels) c = c + Point{double(px), double(py)};
      nodes.push_back((1.0 / pixels.size()) * c);
      node_pixels.push_back(std::move(pixels));
    }
  }

  std::vector<Edge> edges;
  std::vector<std::uint8_t> visited(skel.size(), 0);
  std::set<std::pair<std::size_t, std::size_t>> direct;

  auto pixel_point = [](int x, int y) { return Point{double(x), double(y)}; };

  // Walks a chain of degree-2 pixels starting at (sx, sy), coming from
  // (px, py). Returns the node id reached and the interior pixels.
  auto walk = [&](int px, int py, int sx, int sy, Polyline& poly) -> int {
    int cx = sx, cy = sy;
    while (true) {
      visited[idx(cx, cy)] = 1;
      poly.push_back(pixel_point(cx, cy));
      int nx = -1, ny = -1;
      for (const auto& d : kRing) {
        const int tx = cx + d[0], ty = cy + d[1];
        if (!on(tx, ty) || (tx == px && ty == py)) continue;
        nx = tx;
        ny = ty;
        break;
      }
      if (nx < 0) {
        // dangling chain; cannot happen for consistent neighbour counts
        const int id = static_cast<int>(nodes.size());
        nodes.push_back(pixel_point(cx, cy));
        node_pixels.push_back({{cx, cy}});
        poly.pop_back();
        return id;
      }
      if (node_of[idx(nx, ny)] >= 0) return node_of[idx(nx, ny)];
      if (visited[idx(nx, ny)]) {
        const int id = static_cast<int>(nodes.size());
        nodes.push_back(pixel_point(cx, cy));
        node_pixels.push_back({{cx, cy}});
        node_of[idx(cx, cy)] = id;
        poly.pop_back();
        return id;
      }
      px = cx;
      py = cy;
      cx = nx;
      cy = ny;
    }
  };

  const std::size_t initial_nodes = nodes.size();
  for (std::size_t n = 0; n < initial_nodes; ++n) {
    const auto pixels = node_pixels[n];  // walk() may grow node_pixels
    for (const auto& [qx, qy] : pixels) {
      for (const auto& d : kRing) {
        const int sx = qx + d[0], sy = qy + d[1];
        if (!on(sx, sy)) continue;
        const int target = node_of[idx(sx, sy)];
        if (target == static_cast<int>(n)) continue;
        if (target >= 0) {
          const auto key = std::minmax(idx(qx, qy), idx(sx, sy));
          if (!direct.insert(key).second) continue;
          edges.push_back({n, static_cast<std::size_t>(target), {nodes[n], nodes[target]}});
          continue;
        }
        if (visited[idx(sx, sy)]) continue;
        Polyline poly{nodes[n]};
        const int end = walk(qx, qy, sx, sy, poly);
        poly.push_back(nodes[end]);
        edges.push_back({n, static_cast<std::size_t>(end), std::move(poly)});
      }
    }
  }

  // junction-free cycles, anchored at their smallest (x, y) pixel
  for (int x = 0; x < W; ++x) {
    for (int y = 0; y < H; ++y) {
      if (!on(x, y) || visited[idx(x, y)] || node_of[idx(x, y)] >= 0) continue;
      const auto id = nodes.size();
      nodes.push_back(pixel_point(x, y));
      node_pixels.push_back({{x, y}});
      node_of[idx(x, y)] = static_cast<int>(id);
      visited[idx(x, y)] = 1;
      int sx = -1, sy = -1;
      for (const auto& d : kRing)
        if (on(x + d[0], y + d[1])) {
          sx = x + d[0];
          sy = y + d[1];
          break;
        }
      Polyline poly{nodes[id]};
      const int end = walk(x, y, sx, sy, poly);
      poly.push_back(nodes[end]);
      edges.push_back({id, static_cast<std::size_t>(end), std::move(poly)});
    }
  }

  return RoadGraph(std::move(nodes), std::move(edges));
}

Polyline simplify_rdp(const Polyline& line, double tolerance) {
  if (!(tolerance >= 0.0)) throw std::invalid_argument("rdp tolerance must be >= 0");
  if (line.size() <= 2) return line;
  std::vector<std::uint8_t> keep(line.size(), 0);
  keep.front() = keep.back() = 1;
  const double tol2 = tolerance * tolerance;

  std::vector<std::pair<std::size_t, std::size_t>> stack;
  if (line.front() == line.back()) {
    // closed chain: the chord is a point, so split at the farthest vertex
    std::size_t far = 1;
    double best = -1.0;
    for (std::size_t i = 1; i + 1 < line.size(); ++i) {
      const double d = squared_distance(line[i], line.front());
      if (d > best) {
        best = d;
        far = i;
      }
    }
    keep[far] = 1;
    stack.emplace_back(0, far);
    stack.emplace_back(far, line.size() - 1);
  } else {
    stack.emplace_back(0, line.size() - 1);
  }

  while (!stack.empty()) {
    const auto [first, last] = stack.back();
    stack.pop_back();
    double max_d = 0.0;
    std::size_t index = first;
    for (std::size_t i = first + 1; i < last; ++i) {
      const double d = project_onto_segment(line[i], line[first], line[last]).squared_distance;
      if (d > max_d) {
        max_d = d;
        index = i;
      }
    }
    if (index != first && max_d > tol2) {
      keep[index] = 1;
      stack.emplace_back(first, index);
      stack.emplace_back(index, last);
    }
  }

  Polyline out;
  for (std::size_t i = 0; i < line.size(); ++i)
    if (keep[i]) out.push_back(line[i]);
  return out;
}

namespace {

/// Mutable edge/node soup used by the graph clean-up passes.
struct WorkGraph {
  std::vector<Point> nodes;
  std::vector<bool> alive;
  std::vector<std::optional<Edge>> edges;
  std::vector<double> length;
  std::vector<std::size_t> degree;
  std::set<std::size_t> boundary;

  explicit WorkGraph(const RoadGraph& g)
      : nodes(g.nodes()), alive(g.node_count(), true), degree(node_degrees(g)), boundary(g.boundary_nodes()) {
    for (const Edge& e : g.edges()) {
      edges.emplace_back(e);
      length.push_back(e.length());
    }
  }

  void remove_edge(std::size_t i) {
    --degree[edges[i]->a];
    --degree[edges[i]->b];
    edges[i].reset();
  }

  std::size_t add_edge(Edge e) {
    ++degree[e.a];
    ++degree[e.b];
    length.push_back(e.length());
    edges.emplace_back(std::move(e));
    return edges.size() - 1;
  }

  std::vector<std::size_t> incident(std::size_t node) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edges[i] && (edges[i]->a == node || edges[i]->b == node)) out.push_back(i);
    return out;
  }

  // Replaces a degree-2 node by the concatenation of its two edges.
  void merge_through(std::size_t node) {
    const auto inc = incident(node);
    if (inc.size() != 2) return;
    Edge e1 = *edges[inc[0]];
    Edge e2 = *edges[inc[1]];
    if (e1.b != node) {
      std::swap(e1.a, e1.b);
      std::reverse(e1.polyline.begin(), e1.polyline.end());
    }
    if (e2.a != node) {
      std::swap(e2.a, e2.b);
      std::reverse(e2.polyline.begin(), e2.polyline.end());
    }
    remove_edge(inc[0]);
    remove_edge(inc[1]);
    Edge merged{e1.a, e2.b, std::move(e1.polyline)};
    merged.polyline.insert(merged.polyline.end(), e2.polyline.begin() + 1, e2.polyline.end());
    alive[node] = false;
    add_edge(std::move(merged));
  }

  RoadGraph build() const {
    std::vector<std::size_t> remap(nodes.size(), 0);
    std::vector<Point> out_nodes;
    std::set<std::size_t> out_boundary;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!alive[i]) continue;
      remap[i] = out_nodes.size();
      if (boundary.contains(i)) out_boundary.insert(out_nodes.size());
      out_nodes.push_back(nodes[i]);
    }
    std::vector<Edge> out_edges;
    for (const auto& e : edges) {
      if (!e) continue;
      Edge r = *e;
      r.a = remap[r.a];
      r.b = remap[r.b];
      out_edges.push_back(std::move(r));
    }
    return RoadGraph(std::move(out_nodes), std::move(out_edges), std::move(out_boundary));
  }
};

}  // namespace

RoadGraph prune_hanging(const RoadGraph& g, double min_length) {
  WorkGraph w(g);
  while (true) {
    std::optional<std::size_t> spur;
    for (std::size_t i = 0; i < w.edges.size(); ++i) {
      const auto& e = w.edges[i];
      if (!e) continue;
      // A short loop hanging off a road is a burr around a pinhole in the mask.
      const bool hanging = e->is_self_loop() ? w.degree[e->a] > 2 : w.degree[e->a] == 1 || w.degree[e->b] == 1;
      if (!hanging) continue;
      if (!(w.length[i] < min_length)) continue;
      if (!spur || w.length[i] < w.length[*spur]) spur = i;
    }
    if (!spur) break;
    const std::size_t a = w.edges[*spur]->a;
    const std::size_t b = w.edges[*spur]->b;
    w.remove_edge(*spur);
    for (std::size_t n : a == b ? std::vector<std::size_t>{a} : std::vector<std::size_t>{a, b}) {
      if (w.degree[n] == 0) {
        w.alive[n] = false;
      } else if (w.degree[n] == 2) {
        w.merge_through(n);
      }
    }
  }
  return w.build();
}

RoadGraph merge_close_junctions(const RoadGraph& g, double max_length) {
  WorkGraph w(g);
  while (true) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < w.edges.size(); ++i) {
      const auto& e = w.edges[i];
      if (!e || e->is_self_loop()) continue;
      if (w.degree[e->a] < 3 || w.degree[e->b] < 3 || w.length[i] > max_length) continue;
      if (!best || w.length[i] < w.length[*best]) best = i;
    }
    if (!best) break;
    const std::size_t keep = std::min(w.edges[*best]->a, w.edges[*best]->b);
    const std::size_t drop = std::max(w.edges[*best]->a, w.edges[*best]->b);
    w.remove_edge(*best);
    const Point mid = 0.5 * (w.nodes[keep] + w.nodes[drop]);
    w.nodes[keep] = mid;
    w.alive[drop] = false;
    w.degree[keep] += w.degree[drop];
    w.degree[drop] = 0;
    for (std::size_t i = 0; i < w.edges.size(); ++i) {
      auto& e = w.edges[i];
      if (!e) continue;
      if (e->a == drop) e->a = keep;
      if (e->b == drop) e->b = keep;
      if (e->a != keep && e->b != keep) continue;
      if (e->a == keep) e->polyline.front() = mid;
      if (e->b == keep) e->polyline.back() = mid;
      e->polyline.erase(std::unique(e->polyline.begin(), e->polyline.end()), e->polyline.end());
      w.length[i] = e->length();
      if (e->polyline.size() < 2 || w.length[i] <= 0.0) w.remove_edge(i);
    }
  }
  return w.build();
}

namespace {

Polyline outward(const Edge& e, std::size_t node) {
  Polyline line = e.polyline;
  if (e.a != node) std::reverse(line.begin(), line.end());
  return line;
}

// Drops the points closer than `cut` (arc length) to the start of `line` and
// re-anchors it at `start`.
void reanchor_front(Polyline& line, Point start, double cut) {
  double s = 0.0;
  std::size_t first = line.size() - 1;
  for (std::size_t i = 1; i < line.size(); ++i) {
    s += distance(line[i - 1], line[i]);
    if (s >= cut) {
      first = i;
      break;
    }
  }
  Polyline out{start};
  out.insert(out.end(), line.begin() + static_cast<std::ptrdiff_t>(first), line.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  line = std::move(out);
}

}  // namespace

RoadGraph refine_junctions(const RoadGraph& g, double near, double far) {
  const auto deg = node_degrees(g);
  std::vector<Point> nodes = g.nodes();
  std::vector<bool> moved(nodes.size(), false);
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (deg[n] < 3 || g.is_boundary(n)) continue;
    double a00 = 0, a01 = 0, a11 = 0, b0 = 0, b1 = 0;
    int lines = 0;
    for (const Edge& e : g.edges()) {
      if (e.is_self_loop() || (e.a != n && e.b != n)) continue;
      const Polyline line = outward(e, n);
      const double end = std::min(far, 0.5 * polyline_length(line));
      if (end <= near) continue;
      const Point p = point_at_arc_length(line, near);
      const Point q = point_at_arc_length(line, end);
      const double len = distance(p, q);
      if (len <= 0.0) continue;
      const Point d = (1.0 / len) * (q - p);
      // I - d d^T projects onto the arm's normal
      const double m00 = 1 - d.x * d.x, m01 = -d.x * d.y, m11 = 1 - d.y * d.y;
      a00 += m00;
      a01 += m01;
      a11 += m11;
      b0 += m00 * p.x + m01 * p.y;
      b1 += m01 * p.x + m11 * p.y;
      ++lines;
    }
    const double det = a00 * a11 - a01 * a01;
    if (lines < 2 || det < 1e-2) continue;  // arms (nearly) parallel: no stable crossing
    const Point x{(a11 * b0 - a01 * b1) / det, (a00 * b1 - a01 * b0) / det};
    if (distance(x, nodes[n]) > near) continue;
    nodes[n] = x;
    moved[n] = true;
  }

  std::vector<Edge> edges = g.edges();
  for (Edge& e : edges) {
    const bool long_enough = e.length() >= 2 * near;
    for (const bool front : {true, false}) {
      const std::size_t n = front ? e.a : e.b;
      if (!moved[n]) continue;
      if (!front) std::reverse(e.polyline.begin(), e.polyline.end());
      if (long_enough && !e.is_self_loop())
        reanchor_front(e.polyline, nodes[n], near);
      else
        e.polyline.front() = nodes[n];
      if (!front) std::reverse(e.polyline.begin(), e.polyline.end());
    }
    if (e.is_self_loop() && moved[e.a]) e.polyline.back() = nodes[e.a];
  }
  return RoadGraph(std::move(nodes), std::move(edges), g.boundary_nodes());
}

RoadGraph mask_to_graph(const RasterMask& mask, const VectorizeParams& params) {
  RoadGraph g = skeleton_to_graph(skeletonize(mask));
  g = prune_hanging(g, params.min_spur);
  if (params.junction_merge > 0.0) g = merge_close_junctions(g, params.junction_merge);
  if (params.junction_refine > 0.0) g = refine_junctions(g, params.junction_refine, 2.5 * params.junction_refine);
  std::vector<Edge> edges = g.edges();
  for (Edge& e : edges) e.polyline = simplify_rdp(e.polyline, params.rdp_tolerance);
  return RoadGraph(g.nodes(), std::move(edges), g.boundary_nodes());
}

}  // namespace roadkit
