#include "roadkit/graph.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"

namespace roadkit {

namespace {

using nlohmann::json;

bool near(Point a, Point b) { return squared_distance(a, b) <= kMergeTolerance * kMergeTolerance; }

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

Point read_point(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError(field + ": expected [x, y] number pair", 0, field);
  return {j[0].get<double>(), j[1].get<double>()};
}

std::size_t read_index(const json& obj, const char* key, const std::string& field) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(field + ": missing key", 0, field);
  if (!it->is_number_integer() || it->get<long long>() < 0)
    throw ParseError(field + ": expected non-negative integer", 0, field);
  return it->get<std::size_t>();
}

const json& require_array(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string("missing \"") + key + "\" array", 0, key);
  if (!it->is_array()) throw ParseError(std::string("\"") + key + "\" must be an array", 0, key);
  return *it;
}

/// Union-find representative for each node; coincident nodes map to the
/// lowest index among them.
std::vector<std::size_t> merge_coincident(const std::vector<Point>& pts) {
  std::vector<std::size_t> parent(pts.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };

  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].x < pts[b].x || (pts[a].x == pts[b].x && a < b);
  });
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (pts[order[j]].x - pts[order[i]].x > kMergeTolerance) break;
      if (!near(pts[order[i]], pts[order[j]])) continue;
      const auto ra = find(order[i]);
      const auto rb = find(order[j]);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  }
  std::vector<std::size_t> rep(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) rep[i] = find(i);
  return rep;
}

}  // namespace

RoadGraph::RoadGraph(std::vector<Point> nodes, std::vector<Edge> edges,
                     std::set<std::size_t> boundary_nodes)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), boundary_(std::move(boundary_nodes)) {
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    Edge& e = edges_[i];
    const std::string field = "edges[" + std::to_string(i) + "]";
    if (e.a >= nodes_.size()) throw SchemaError(field + ".a: dangling node reference", field + ".a");
    if (e.b >= nodes_.size()) throw SchemaError(field + ".b: dangling node reference", field + ".b");
    const Point pa = nodes_[e.a];
    const Point pb = nodes_[e.b];
    auto& line = e.polyline;
    if (line.empty()) {
      line = {pa, pb};
    } else if (line.size() == 1) {
      throw SchemaError(field + ".polyline: needs at least two points", field + ".polyline");
    } else if (!(near(line.front(), pa) && near(line.back(), pb))) {
      if (near(line.front(), pb) && near(line.back(), pa)) {
        std::reverse(line.begin(), line.end());
      } else {
        throw SchemaError(field + ".polyline: ends do not match nodes a/b", field + ".polyline");
      }
    }
    line.front() = pa;
    line.back() = pb;
    line.erase(std::unique(line.begin(), line.end()), line.end());
    if (line.size() < 2) line.push_back(pb);
    if (e.length() <= 0.0) throw SchemaError(field + ": zero-length edge", field);
  }
  for (std::size_t b : boundary_)
    if (b >= nodes_.size()) throw SchemaError("boundary_nodes: dangling node reference", "boundary_nodes");
}

RoadGraph parse_graph(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), line_of(document, e.byte), "");
  }
  if (!doc.is_object()) throw ParseError("graph document must be a JSON object", 1, "");

  const json& jnodes = require_array(doc, "nodes");
  const json& jedges = require_array(doc, "edges");

  std::vector<Point> raw_nodes;
  raw_nodes.reserve(jnodes.size());
  for (std::size_t i = 0; i < jnodes.size(); ++i)
    raw_nodes.push_back(read_point(jnodes[i], "nodes[" + std::to_string(i) + "]"));

  struct RawEdge {
    std::size_t a, b;
    std::vector<Point> polyline;
  };
  std::vector<RawEdge> raw_edges;
  raw_edges.reserve(jedges.size());
  for (std::size_t i = 0; i < jedges.size(); ++i) {
    const std::string field = "edges[" + std::to_string(i) + "]";
    const json& je = jedges[i];
    if (!je.is_object()) throw ParseError(field + ": expected object", 0, field);
    RawEdge e{read_index(je, "a", field + ".a"), read_index(je, "b", field + ".b"), {}};
    if (e.a >= raw_nodes.size()) throw SchemaError(field + ".a: dangling node reference", field + ".a");
    if (e.b >= raw_nodes.size()) throw SchemaError(field + ".b: dangling node reference", field + ".b");
    if (const auto it = je.find("polyline"); it != je.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError(field + ".polyline: expected array", 0, field + ".polyline");
      for (std::size_t k = 0; k < it->size(); ++k)
        e.polyline.push_back(read_point((*it)[k], field + ".polyline[" + std::to_string(k) + "]"));
    }
    raw_edges.push_back(std::move(e));
  }

  std::set<std::size_t> raw_boundary;
  if (const auto it = doc.find("boundary_nodes"); it != doc.end()) {
    if (!it->is_array()) throw ParseError("boundary_nodes: expected array", 0, "boundary_nodes");
    for (std::size_t k = 0; k < it->size(); ++k) {
      const json& v = (*it)[k];
      const std::string field = "boundary_nodes[" + std::to_string(k) + "]";
      if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ParseError(field + ": expected non-negative integer", 0, field);
      if (v.get<std::size_t>() >= raw_nodes.size())
        throw SchemaError(field + ": dangling node reference", field);
      raw_boundary.insert(v.get<std::size_t>());
    }
  }

  const auto rep = merge_coincident(raw_nodes);
  std::vector<std::size_t> new_index(raw_nodes.size());
  std::vector<Point> nodes;
  for (std::size_t i = 0; i < raw_nodes.size(); ++i) {
    if (rep[i] == i) {
      new_index[i] = nodes.size();
      nodes.push_back(raw_nodes[i]);
    }
  }
  for (std::size_t i = 0; i < raw_nodes.size(); ++i) new_index[i] = new_index[rep[i]];

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < raw_edges.size(); ++i) {
    auto& re = raw_edges[i];
    Edge e{new_index[re.a], new_index[re.b], std::move(re.polyline)};
    const Point pa = nodes[e.a];
    const Point pb = nodes[e.b];
    if (e.polyline.empty()) e.polyline = {pa, pb};
    if (e.polyline.size() >= 2 && !(near(e.polyline.front(), pa) && near(e.polyline.back(), pb)) &&
        !(near(e.polyline.front(), pb) && near(e.polyline.back(), pa))) {
      const std::string field = "edges[" + std::to_string(i) + "].polyline";
      throw SchemaError(field + ": ends do not match nodes a/b", field);
    }
    // coincident endpoints can collapse an edge; drop it
    if (e.polyline.size() >= 2) {
      auto probe = e.polyline;
      probe.front() = near(probe.front(), pa) ? pa : pb;
      probe.back() = near(probe.back(), pb) ? pb : pa;
      if (polyline_length(probe) <= 0.0) continue;
    }
    edges.push_back(std::move(e));
  }

  std::set<std::size_t> boundary;
  for (std::size_t b : raw_boundary) boundary.insert(new_index[b]);
  return RoadGraph(std::move(nodes), std::move(edges), std::move(boundary));
}

std::string serialize_graph(const RoadGraph& g) {
  using ojson = nlohmann::ordered_json;
  auto point = [](Point p) { return ojson::array({p.x, p.y}); };
  ojson doc = ojson::object();
  doc["nodes"] = ojson::array();
  for (const Point& p : g.nodes()) doc["nodes"].push_back(point(p));
  doc["edges"] = ojson::array();
  for (const Edge& e : g.edges()) {
    ojson je = ojson::object();
    je["a"] = e.a;
    je["b"] = e.b;
    je["polyline"] = ojson::array();
    for (const Point& p : e.polyline) je["polyline"].push_back(point(p));
    doc["edges"].push_back(std::move(je));
  }
  if (!g.boundary_nodes().empty()) {
    doc["boundary_nodes"] = ojson::array();
    for (std::size_t b : g.boundary_nodes()) doc["boundary_nodes"].push_back(b);
  }
  return doc.dump();
}

std::vector<std::size_t> node_degrees(const RoadGraph& g) {
  std::vector<std::size_t> deg(g.node_count(), 0);
  for (const Edge& e : g.edges()) {
    ++deg[e.a];
    ++deg[e.b];
  }
  return deg;
}

namespace {

struct ClipResult {
  double t0, t1;
};

// Liang-Barsky against the closed rectangle.
std::optional<ClipResult> clip_segment(Point p, Point q, double xmin, double ymin, double xmax,
                                       double ymax) {
  const double dx = q.x - p.x;
  const double dy = q.y - p.y;
  const double ps[4] = {-dx, dx, -dy, dy};
  const double qs[4] = {p.x - xmin, xmax - p.x, p.y - ymin, ymax - p.y};
  double t0 = 0.0;
  double t1 = 1.0;
  for (int k = 0; k < 4; ++k) {
    if (ps[k] == 0.0) {
      if (qs[k] < 0.0) return std::nullopt;
      continue;
    }
    const double r = qs[k] / ps[k];
    if (ps[k] < 0.0)
      t0 = std::max(t0, r);
    else
      t1 = std::min(t1, r);
  }
  if (t0 > t1) return std::nullopt;
  return ClipResult{t0, t1};
}

}  // namespace

RoadGraph crop_graph(const RoadGraph& g, const Window& w) {
  const double xmin = w.x0;
  const double ymin = w.y0;
  const double xmax = static_cast<double>(w.x0) + w.width;
  const double ymax = static_cast<double>(w.y0) + w.height;
  auto inside = [&](Point p) { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; };

  std::vector<Point> nodes;
  std::set<std::size_t> boundary;
  std::vector<std::optional<std::size_t>> kept(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (!inside(g.nodes()[i])) continue;
    kept[i] = nodes.size();
    if (g.is_boundary(i)) boundary.insert(nodes.size());
    nodes.push_back(g.nodes()[i]);
  }

  auto cut_node = [&](Point p) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (near(nodes[i], p)) return i;
    boundary.insert(nodes.size());
    nodes.push_back(p);
    return nodes.size() - 1;
  };

  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) {
    const auto& line = e.polyline;
    const std::size_t last_seg = line.size() - 2;

    std::vector<Point> run;
    bool run_starts_at_node = false;
    bool open = false;  // current run can be extended by the next piece

    auto flush = [&](bool ends_at_node) {
      if (run.size() >= 2 && polyline_length(run) > 0.0) {
        const std::size_t a = run_starts_at_node ? *kept[e.a] : cut_node(run.front());
        const std::size_t b = ends_at_node ? *kept[e.b] : cut_node(run.back());
        run.front() = nodes[a];
        run.back() = nodes[b];
        edges.push_back({a, b, run});
      }
      run.clear();
      open = false;
    };

    for (std::size_t s = 0; s + 1 < line.size(); ++s) {
      const Point p = line[s];
      const Point q = line[s + 1];
      if (p == q) continue;
      const auto clip = clip_segment(p, q, xmin, ymin, xmax, ymax);
      if (!clip || clip->t0 >= clip->t1) {
        if (!run.empty()) flush(false);
        continue;
      }
      const Point from = clip->t0 == 0.0 ? p : p + clip->t0 * (q - p);
      const Point to = clip->t1 == 1.0 ? q : p + clip->t1 * (q - p);
      if (!(open && clip->t0 == 0.0)) {
        if (!run.empty()) flush(false);
        run = {from};
        run_starts_at_node = s == 0 && clip->t0 == 0.0;
      }
      run.push_back(to);
      open = clip->t1 == 1.0;
      if (!open) flush(false);
      else if (s == last_seg) flush(true);
    }
    if (!run.empty()) flush(false);
  }

  return RoadGraph(std::move(nodes), std::move(edges), std::move(boundary));
}

RoadGraph translate_graph(const RoadGraph& g, double dx, double dy) {
  const Point d{dx, dy};
  std::vector<Point> nodes = g.nodes();
  for (Point& p : nodes) p = p + d;
  std::vector<Edge> edges = g.edges();
  for (Edge& e : edges)
    for (Point& p : e.polyline) p = p + d;
  return RoadGraph(std::move(nodes), std::move(edges), g.boundary_nodes());
}

}  // namespace roadkit
