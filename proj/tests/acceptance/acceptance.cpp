// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../oracles.hpp"
#include "roadkit/cli.hpp"
#include "roadkit/io.hpp"
#include "roadkit/labelgen.hpp"
#include "roadkit/losses.hpp"
#include "roadkit/metrics.hpp"
#include "roadkit/synth.hpp"
#include "roadkit/tiling.hpp"
#include "roadkit/vectorize.hpp"

using namespace roadkit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int components(const RoadGraph& g) {
  std::vector<std::size_t> parent(g.node_count());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (const auto& e : g.edges()) parent[find(e.a)] = find(e.b);
  int n = 0;
  for (std::size_t i = 0; i < parent.size(); ++i) n += find(i) == i;
  return n;
}

std::ptrdiff_t junctions(const RoadGraph& g) {
  const auto d = node_degrees(g);
  return std::count_if(d.begin(), d.end(), [](std::size_t v) { return v >= 3; });
}

double dist_to_chain(Point p, const Polyline& line) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < line.size(); ++i) best = std::min(best, point_segment_distance(p, line[i - 1], line[i]));
  return best;
}

Outcome distance_map_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> side(1, 64);
  std::uniform_real_distribution<double> density(0.0, 0.3);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto m = random_mask(rng, side(rng), side(rng), density(rng));
    const auto d = distance_map(m);
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) {
        const double want = oracle::nearest_road_distance(m, x, y);
        const double got = d(x, y);
        if (std::isinf(want) && std::isinf(got)) continue;
        const double err = std::abs(want - got);
        worst = std::max(worst, std::isnan(err) ? std::numeric_limits<double>::infinity() : err);
      }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 10.0, fmt("50 masks, max error %.3g (tol 1e-6), %.2f s (limit 10 s)", worst, secs)};
}

Outcome connectivity_labels() {
  const LabelParams p;
  long violations = 0, checked_nodes = 0;
  for (int i = 0; i < 30; ++i) {
    std::mt19937_64 rng(2000 + i);
    RoadGraph g = random_road_graph(rng);
    // every third graph is cropped so clipped boundary nodes are exercised
    int W = 320, H = 320;
    if (i % 3 == 2) {
      g = translate_graph(crop_graph(g, {50, 50, 200, 220}), -50, -50);
      W = 200;
      H = 220;
    }
    const auto labels = connectivity_label(g, W, H, p);
    const auto deg = node_degrees(g);
    const double r2 = p.node_radius * p.node_radius;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        if (!labels.mask(x, y)) {
          violations += labels.connectivity(x, y) != 0;
          continue;
        }
        int expected = 2;
        for (std::size_t n = 0; n < g.node_count(); ++n)
          if (!g.is_boundary(n) && deg[n] > 0 && squared_distance({double(x), double(y)}, g.nodes()[n]) <= r2)
            expected = std::max(expected == 2 ? 0 : expected, int(std::min<std::size_t>(deg[n], 5)));
        violations += labels.connectivity(x, y) != expected;
      }
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      if (g.is_boundary(n) || deg[n] == 0) continue;
      ++checked_nodes;
      const Point c = g.nodes()[n];
      const int cx = int(std::lround(c.x)), cy = int(std::lround(c.y));
      if (!labels.connectivity.contains(cx, cy)) continue;
      violations += labels.connectivity(cx, cy) != int(std::min<std::size_t>(deg[n], 5));
    }
  }
  return {violations == 0, fmt("30 graphs, %ld node regions, %ld violations", checked_nodes, violations)};
}

Outcome apls_fixtures() {
  std::vector<std::string> issues;
  const RoadGraph ref({{0, 0}, {10, 0}}, {{0, 1, {}}});
  const RoadGraph prop({{0, 0}, {10, 0}}, {{0, 1, {{0, 0}, {1, 0}, {5, 3}, {9, 0}, {10, 0}}}});
  const double snap = snap_similarity(ref, prop, AplsParams{4, 100});
  if (std::abs(snap - 0.8) > 1e-9) issues.push_back(fmt("two-path snap similarity %.12f", snap));

  int identity_bad = 0, bridges = 0, not_decreasing = 0;
  for (int i = 0; i < 20; ++i) {
    std::mt19937_64 rng(3000 + i);
    const auto g = random_road_graph(rng);
    const double self = apls(g, g, AplsParams{});
    identity_bad += self != 1.0;
    // Bridge: an edge whose removal disconnects the graph. Pendant edges of
    // the spanning tree always qualify.
    bool found = false;
    for (std::size_t e = 0; e < g.edge_count() && !found; ++e) {
      std::vector<Edge> edges;
      for (std::size_t k = 0; k < g.edge_count(); ++k)
        if (k != e) edges.push_back(g.edges()[k]);
      const RoadGraph cut(g.nodes(), edges);
      if (components(cut) == components(g)) continue;
      found = true;
      ++bridges;
      not_decreasing += !(apls(g, cut, AplsParams{}) < self);
    }
  }
  if (identity_bad) issues.push_back(fmt("%d identity scores != 1", identity_bad));
  if (bridges != 20) issues.push_back(fmt("only %d graphs had a bridge", bridges));
  if (not_decreasing) issues.push_back(fmt("%d bridge deletions did not decrease APLS", not_decreasing));
  std::string detail = fmt("snap similarity %.12f, identity exact on 20, bridge deletion decreased on %d/20", snap,
                           bridges - not_decreasing);
  for (const auto& s : issues) detail += "; " + s;
  return {issues.empty(), detail};
}

Outcome relaxed_iou_criterion() {
  std::mt19937_64 rng(4000);
  std::uniform_int_distribution<int> side(8, 40);
  std::uniform_real_distribution<double> density(0.0, 0.3);
  double worst_zero = 0.0, worst_oracle = 0.0;
  int monotone_bad = 0;
  const double rhos[] = {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0};
  for (int i = 0; i < 50; ++i) {
    const int w = side(rng), h = side(rng);
    const auto pred = random_mask(rng, w, h, density(rng));
    const auto gt = random_mask(rng, w, h, density(rng));
    worst_zero = std::max(worst_zero, std::abs(relaxed_iou(pred, gt, 0.0) - iou(pred, gt)));
    double prev = -1.0;
    for (double rho : rhos) {
      const double v = relaxed_iou(pred, gt, rho);
      monotone_bad += v < prev;
      prev = v;
      worst_oracle = std::max(worst_oracle, std::abs(v - oracle::buffered_relaxed_iou(pred, gt, rho)));
    }
  }
  const bool ok = worst_zero <= 1e-12 && monotone_bad == 0 && worst_oracle <= 1e-9;
  return {ok, fmt("50 pairs, |relaxed(0) - iou| max %.3g (tol 1e-12), %d monotonicity violations, oracle max "
                  "error %.3g (tol 1e-9)",
                  worst_zero, monotone_bad, worst_oracle)};
}

Outcome gradient_checks() {
  const auto t0 = std::chrono::steady_clock::now();
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  const auto report = cli::full_check_report(0, threads);
  const double secs = seconds_since(t0);
  bool ok = secs < 60.0;
  std::string detail;
  for (const auto& c : report["checks"]) {
    const std::string name = c["name"];
    if (name.find("gradient") == std::string::npos) continue;
    const double err = c["max_error"];
    ok = ok && err < 1e-4;
    detail += fmt("%s n=%d max %.2e; ", name.c_str(), c["instances"].get<int>(), err);
  }
  return {ok, detail + fmt("tol 1e-4, %.2f s (limit 60 s)", secs)};
}

Outcome class_weights() {
  const double p[] = {0.0, 1.0};
  const auto w = loss::inverse_boundary_weights(p);
  const bool ok = std::abs(w.weights[0] - 50.4975) <= 1e-3 && std::abs(w.weights[1] - 1.4222) <= 1e-3;
  return {ok, fmt("w(0)=%.5f (want 50.4975), w(1)=%.5f (want 1.4222), tol 1e-3", w.weights[0], w.weights[1])};
}

Outcome round_trip() {
  int junction_bad = 0;
  double worst_apls = 1.0;
  for (int i = 0; i < 20; ++i) {
    std::mt19937_64 rng(5000 + i);
    const auto truth = random_road_graph(rng);
    const auto mask = connectivity_label(truth, 320, 320, LabelParams{}).mask;
    const auto recovered = mask_to_graph(mask, VectorizeParams{});
    junction_bad += junctions(recovered) != junctions(truth);
    worst_apls = std::min(worst_apls, apls(truth, recovered, AplsParams{}));
  }
  return {junction_bad == 0 && worst_apls >= 0.95,
          fmt("20 graphs, %d junction-count mismatches, min APLS %.4f (need >= 0.95)", junction_bad, worst_apls)};
}

Outcome rdp_and_pruning() {
  std::mt19937_64 rng(6000);
  std::normal_distribution<double> step(0, 3);
  const double tol = VectorizeParams{}.rdp_tolerance;
  long rdp_bad = 0;
  for (int i = 0; i < 100; ++i) {
    Polyline line{{0, 0}};
    const int n = 3 + i % 60;
    for (int k = 0; k < n; ++k) line.push_back({line.back().x + std::abs(step(rng)), line.back().y + step(rng)});
    const auto s = simplify_rdp(line, tol);
    rdp_bad += s.front() != line.front() || s.back() != line.back();
    for (const Point& p : line) rdp_bad += dist_to_chain(p, s) > tol + 1e-12;
  }

  const double min_spur = VectorizeParams{}.min_spur;
  long prune_bad = 0;
  std::uniform_real_distribution<double> u(0, 200);
  for (int i = 0; i < 100; ++i) {
    std::vector<Point> nodes;
    std::vector<Edge> edges;
    for (int k = 0; k < 12; ++k) nodes.push_back({u(rng), u(rng)});
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
    for (int k = 0; k < 14; ++k) {
      const auto a = pick(rng), b = pick(rng);
      if (a != b) edges.push_back({a, b, {}});
    }
    const auto pruned = prune_hanging(RoadGraph(nodes, edges), min_spur);
    const auto deg = node_degrees(pruned);
    for (const auto& e : pruned.edges())
      if ((deg[e.a] == 1 || deg[e.b] == 1) && e.length() < min_spur) ++prune_bad;
  }
  return {rdp_bad == 0 && prune_bad == 0,
          fmt("100 polylines (tol %.1f px): %ld violations; 100 graphs (min spur %.0f px): %ld violations", tol,
              rdp_bad, min_spur, prune_bad)};
}

Outcome tiling() {
  const auto plan = plan_tiles(4096, 4096, 512, 368, 72);
  std::vector<std::uint8_t> cover(std::size_t(4096) * 4096, 0);
  for (const auto& t : plan.tiles)
    for (int y = t.write.y0; y < t.write.y0 + t.write.height; ++y)
      for (int x = t.write.x0; x < t.write.x0 + t.write.width; ++x) ++cover[std::size_t(y) * 4096 + x];
  const long bad = std::count_if(cover.begin(), cover.end(), [](std::uint8_t c) { return c != 1; });
  const auto& last = plan.tiles.back();
  const bool clamped = last.read.x0 == 3584 && last.read.y0 == 3584 && last.read.width == 512;

  const auto small = plan_tiles(1024, 1024, 512, 368, 72);
  ScalarField image(1024, 1024);
  std::mt19937_64 rng(7000);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : image.data()) v = u(rng);
  std::vector<ScalarField> tiles;
  for (const auto& t : small.tiles) tiles.push_back(crop_tile(image, t));
  const auto stitched = stitch<ScalarField>(small, tiles);
  const bool exact = std::memcmp(stitched.data().data(), image.data().data(), image.size() * sizeof(double)) == 0;

  const bool ok = plan.columns == 11 && plan.rows == 11 && bad == 0 && clamped && exact;
  return {ok, fmt("%dx%d tiles, %ld pixels not covered exactly once, last tile read at (%d,%d), 1024^2 stitch %s",
                  plan.columns, plan.rows, bad, last.read.x0, last.read.y0, exact ? "bit-exact" : "differs")};
}

std::string run_binary(const std::string& args, int threads, const fs::path& capture, int& status) {
  const std::string cmd = "ROADKIT_THREADS=" + std::to_string(threads) + " \"" ROADKIT_BINARY "\" " + args + " > \"" +
                          capture.string() + "\"";
  status = std::system(cmd.c_str());
  return read_text_file(capture);
}

Outcome determinism() {
  const fs::path dir = fs::path(ROADKIT_TEST_TMP) / "acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir / "gt");
  fs::create_directories(dir / "pred");
  for (int i = 0; i < 6; ++i) {
    std::mt19937_64 rng(8000 + i);
    const auto truth = random_road_graph(rng);
    const auto mask = connectivity_label(truth, 320, 320, LabelParams{}).mask;
    const std::string id = "img" + std::to_string(i);
    write_pgm(dir / "gt" / (id + ".pgm"), mask);
    write_text_file(dir / "gt" / (id + ".json"), serialize_graph(truth));
    RasterMask noisy = mask;
    std::bernoulli_distribution flip(0.02);
    for (auto& v : noisy.data()) v = flip(rng) ? 1 - v : v;
    write_pgm(dir / "pred" / (id + ".pgm"), noisy);
  }
  const std::string eval_args = "eval --gt \"" + (dir / "gt").string() + "\" --pred \"" + (dir / "pred").string() + "\"";
  std::vector<std::string> issues;
  for (const auto& [label, args] : {std::pair<std::string, std::string>{"check", "check --seed 11"}, {"eval", eval_args}}) {
    std::vector<std::string> outs;
    for (int threads : {1, 1, 4, 8}) {
      int status = 0;
      outs.push_back(run_binary(args, threads, dir / (label + std::to_string(outs.size()) + ".json"), status));
      if (status != 0) issues.push_back(label + " exited with status " + std::to_string(status));
    }
    if (outs[0].empty()) issues.push_back(label + " produced no output");
    for (const auto& o : outs)
      if (o != outs[0]) {
        issues.push_back(label + " output differs across runs");
        break;
      }
  }
  std::string detail = "check and eval compared over 4 runs with ROADKIT_THREADS=1,1,4,8";
  for (const auto& s : issues) detail += "; " + s;
  return {issues.empty(), detail};
}

}  // namespace

int main() {
  criterion("distance-map oracle", distance_map_oracle);
  criterion("connectivity labels", connectivity_labels);
  criterion("apls fixtures", apls_fixtures);
  criterion("relaxed iou", relaxed_iou_criterion);
  criterion("gradient checks", gradient_checks);
  criterion("class weights", class_weights);
  criterion("vectorization round trip", round_trip);
  criterion("rdp and pruning contracts", rdp_and_pruning);
  criterion("tiling", tiling);
  criterion("determinism", determinism);
  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
