#include "doctest.h"
#include "roadkit/cli.hpp"
#include "roadkit/io.hpp"

#include <fstream>
#include <sstream>

using namespace roadkit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result roadkit_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "roadkit");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(ROADKIT_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void put(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  write_text_file(p, text);
}

void put_pgm(const fs::path& p, const RasterMask& m) {
  fs::create_directories(p.parent_path());
  write_pgm(p, m);
}

const char* kLine = R"({"nodes":[[5,20],[70,20]],"edges":[{"a":0,"b":1}]})";
const char* kCross =
    R"({"nodes":[[40,40],[0,40],[80,40],[40,0],[40,80]],"edges":[{"a":0,"b":1},{"a":0,"b":2},{"a":0,"b":3},{"a":0,"b":4}]})";

}  // namespace

TEST_CASE("labelgen writes mask and connectivity per graph") {
  const auto dir = scratch("labelgen");
  put(dir / "in" / "line.json", kLine);
  put(dir / "in" / "cross.json", kCross);
  put(dir / "in" / "empty.json", R"({"nodes":[],"edges":[]})");
  const auto r = roadkit_cli({"labelgen", (dir / "in").string(), "--out", (dir / "out").string(), "--width", "81",
                              "--height", "81"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["processed"] == 3);

  const auto line = read_connectivity_pgm(dir / "out" / "line_conn.pgm");
  CHECK(line(40, 20) == 2);
  CHECK(line(40, 30) == 0);
  CHECK(read_mask_pgm(dir / "out" / "line_mask.pgm")(40, 21) == 1);
  CHECK(read_connectivity_pgm(dir / "out" / "cross_conn.pgm")(40, 40) == 4);
  const auto empty = read_mask_pgm(dir / "out" / "empty_mask.pgm");
  CHECK(std::all_of(empty.data().begin(), empty.data().end(), [](auto v) { return v == 0; }));
}

TEST_CASE("labelgen window crops and shifts into the raster frame") {
  const auto dir = scratch("labelgen_window");
  put(dir / "cross.json", kCross);
  REQUIRE(roadkit_cli({"labelgen", (dir / "cross.json").string(), "--out", dir.string(), "--window", "20,20,40,40"})
              .code == 0);
  const auto conn = read_connectivity_pgm(dir / "cross_conn.pgm");
  CHECK(conn.width() == 40);
  CHECK(conn(20, 20) == 4);
  CHECK(conn(0, 20) == 2);  // clipped arm: boundary node, not an endpoint
}

TEST_CASE("labelgen error handling") {
  const auto dir = scratch("labelgen_errors");
  put(dir / "bad.json", R"({"nodes":[[0,0]],"edges":[{"a":0,"b":5}]})");
  put(dir / "good.json", kLine);
  const auto r = roadkit_cli({"labelgen", dir.string(), "--out", (dir / "out").string()});
  CHECK(r.code == 1);
  CHECK(fs::exists(dir / "out" / "good_mask.pgm"));
  CHECK(r.err.find("bad.json") != std::string::npos);
  CHECK(json::parse(r.out)["failed"] == 1);

  const auto missing = roadkit_cli({"labelgen", (dir / "nope.json").string(), "--out", dir.string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("nope.json") != std::string::npos);
}

TEST_CASE("vectorize: empty mask, band and spur") {
  const auto dir = scratch("vectorize");
  write_pgm(dir / "empty.pgm", RasterMask(30, 30));
  RasterMask band(100, 40);
  for (int y = 18; y <= 22; ++y)
    for (int x = 5; x < 95; ++x) band(x, y) = 1;
  write_pgm(dir / "band.pgm", band);
  RasterMask spur = band;
  for (int y = 8; y < 18; ++y)
    for (int x = 49; x <= 51; ++x) spur(x, y) = 1;
  write_pgm(dir / "spur.pgm", spur);

  REQUIRE(roadkit_cli({"vectorize", dir.string(), "--out", (dir / "out").string()}).code == 0);
  CHECK(read_text_file(dir / "out" / "empty.json") == "{\"nodes\":[],\"edges\":[]}\n");
  const auto g = parse_graph(read_text_file(dir / "out" / "band.json"));
  CHECK(g.node_count() == 2);
  CHECK(g.edge_count() == 1);
  const auto s = parse_graph(read_text_file(dir / "out" / "spur.json"));
  CHECK(s.edge_count() == 1);

  put(dir / "broken.pgm", "P5\n3 3\n255\n");
  CHECK(roadkit_cli({"vectorize", (dir / "broken.pgm").string(), "--out", (dir / "out").string()}).code == 2);
}

TEST_CASE("eval: identity, averaging, rho and orphans") {
  const auto dir = scratch("eval");
  RasterMask m(40, 40);
  for (int y = 10; y < 14; ++y)
    for (int x = 5; x < 35; ++x) m(x, y) = 1;
  RasterMask shifted(40, 40);
  for (int y = 12; y < 16; ++y)
    for (int x = 5; x < 35; ++x) shifted(x, y) = 1;
  for (const char* d : {"gt", "pred", "pred2"}) fs::create_directories(dir / d);
  write_pgm(dir / "gt" / "a.pgm", m);
  write_pgm(dir / "gt" / "b.pgm", m);
  put(dir / "gt" / "a.json", kLine);
  write_pgm(dir / "pred" / "a.pgm", m);
  write_pgm(dir / "pred" / "b.pgm", RasterMask(40, 40));
  write_pgm(dir / "pred2" / "a.pgm", shifted);
  write_pgm(dir / "pred2" / "b.pgm", shifted);

  const auto self = roadkit_cli({"eval", "--gt", (dir / "gt").string(), "--pred", (dir / "gt").string()});
  REQUIRE(self.code == 0);
  const auto s = json::parse(self.out);
  for (const auto& rec : s["images"]) CHECK(rec["iou"] == 1.0);
  CHECK(s["images"][0]["apls"] == 1.0);
  CHECK(s["mean"]["apls"] == 1.0);

  const auto half = json::parse(roadkit_cli({"eval", "--gt", (dir / "gt").string(), "--pred", (dir / "pred").string()}).out);
  CHECK(half["mean"]["iou"].get<double>() == doctest::Approx(0.5));
  CHECK(half["count"] == 2);
  CHECK(half["images"][0]["id"] == "a");

  double prev = -1;
  for (const char* rho : {"0", "1", "3"}) {
    const auto r = json::parse(
        roadkit_cli({"eval", "--gt", (dir / "gt").string(), "--pred", (dir / "pred2").string(), "--rho", rho}).out);
    const double v = r["mean"]["relaxed_iou"];
    CHECK(v >= prev);
    double sum = 0;
    for (const auto& rec : r["images"]) sum += rec["relaxed_iou"].get<double>();
    CHECK(std::abs(v - sum / 2) <= 1e-12);
    prev = v;
  }
  CHECK(prev == 1.0);

  write_pgm(dir / "pred" / "c.pgm", m);
  const auto orphan = roadkit_cli({"eval", "--gt", (dir / "gt").string(), "--pred", (dir / "pred").string()});
  CHECK(orphan.code == 1);
  CHECK(orphan.err.find("c") != std::string::npos);

  CHECK(roadkit_cli({"eval", "--gt", (dir / "missing").string(), "--pred", (dir / "pred").string()}).code == 2);
  CHECK(roadkit_cli({"eval", "--gt", (dir / "gt").string()}).code == 1);
}

TEST_CASE("eval report goes to --out") {
  const auto dir = scratch("eval_out");
  put_pgm(dir / "gt" / "a.pgm", RasterMask(5, 5));
  put_pgm(dir / "pred" / "a.pgm", RasterMask(5, 5));
  REQUIRE(roadkit_cli({"eval", "--gt", (dir / "gt").string(), "--pred", (dir / "pred").string(), "--out",
                       (dir / "report.json").string()})
              .code == 0);
  CHECK(json::parse(read_text_file(dir / "report.json"))["images"][0]["iou"] == 1.0);
  fs::create_directories(dir / "reports");
  REQUIRE(roadkit_cli({"eval", "--gt", (dir / "gt").string(), "--pred", (dir / "pred").string(), "-o",
                       (dir / "reports").string()})
              .code == 0);
  CHECK(fs::exists(dir / "reports" / "eval.json"));
}

TEST_CASE("config precedence: flags over config over defaults") {
  const auto dir = scratch("config");
  put_pgm(dir / "gt" / "a.pgm", RasterMask(5, 5));
  put_pgm(dir / "pred" / "a.pgm", RasterMask(5, 5));
  put(dir / "cfg.json", R"({"rho": 1.5, "gt": ")" + (dir / "gt").generic_string() + R"(", "pred": ")" +
                            (dir / "pred").generic_string() + R"("})");
  const auto by_config = json::parse(roadkit_cli({"eval", "--config", (dir / "cfg.json").string()}).out);
  CHECK(by_config["rho"] == 1.5);
  const auto by_flag = json::parse(roadkit_cli({"eval", "--config", (dir / "cfg.json").string(), "--rho", "2"}).out);
  CHECK(by_flag["rho"] == 2.0);
  const auto defaults = json::parse(
      roadkit_cli({"eval", "--gt", (dir / "gt").string(), "--pred", (dir / "pred").string()}).out);
  CHECK(defaults["rho"] == 3.0);

  put(dir / "bad.json", R"({"rho": "wide"})");
  CHECK(roadkit_cli({"eval", "--config", (dir / "bad.json").string()}).code == 1);
  CHECK(roadkit_cli({"eval", "--config", (dir / "none.json").string()}).code == 2);
}

TEST_CASE("tile-plan") {
  const auto r = roadkit_cli({"tile-plan", "--width", "4096", "--height", "4096"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["columns"] == 11);
  CHECK(j["rows"] == 11);
  CHECK(j["tiles"].size() == 121);
  CHECK(j["tiles"][10]["read"][0] == 3584);
  CHECK(roadkit_cli({"tile-plan", "--width", "100", "--height", "100", "--stride", "500"}).code == 1);
}

TEST_CASE("ga-forward") {
  const auto dir = scratch("ga");
  ga::FeatureMap v(2, 3, 3, 1.0);
  {
    std::ofstream f(dir / "v.rgkt", std::ios::binary);
    write_feature_map(f, v);
  }
  put(dir / "zero.json", R"({"channels":2,"reduction":1,"w1":[[0,0],[0,0]],"b1":[0,0],"w2":[[0,0],[0,0]],"b2":[0,0]})");
  const auto r = roadkit_cli({"ga-forward", (dir / "v.rgkt").string(), "--weights", (dir / "zero.json").string()});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  // channel weights 0.5, spatial weight sigmoid(0.5)
  const double expected = 0.5 / (1.0 + std::exp(-0.5));
  CHECK(j["mean"].get<double>() == doctest::Approx(expected));
  CHECK(j["channels"] == 2);

  CHECK(roadkit_cli({"ga-forward", (dir / "v.rgkt").string(), "--resblock"}).code == 0);
  CHECK(roadkit_cli({"ga-forward", (dir / "v.rgkt").string(), "--weights", (dir / "zero.json").string(),
                     "--resblock"})
            .code == 1);
  put(dir / "wide.json", R"({"channels":4,"reduction":1,"w1":[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0],"b1":[0,0,0,0],
    "w2":[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0],"b2":[0,0,0,0]})");
  CHECK(roadkit_cli({"ga-forward", (dir / "v.rgkt").string(), "--weights", (dir / "wide.json").string()}).code == 1);
  CHECK(roadkit_cli({"ga-forward", (dir / "missing.rgkt").string()}).code == 2);
}

TEST_CASE("losscheck and check pass and are thread-count independent") {
  const auto one = roadkit_cli({"losscheck", "--instances", "20", "--threads", "1"});
  const auto many = roadkit_cli({"losscheck", "--instances", "20", "--threads", "4"});
  REQUIRE(one.code == 0);
  CHECK(one.out == many.out);
  CHECK(json::parse(one.out)["checks"].size() == 2);

  const auto check = roadkit_cli({"check", "--seed", "3", "--threads", "3"});
  CHECK(check.code == 0);
  CHECK(check.out == roadkit_cli({"check", "--seed", "3", "--threads", "1"}).out);
  for (const auto& c : json::parse(check.out)["checks"]) CHECK(c["pass"] == true);
}

TEST_CASE("usage errors") {
  CHECK(roadkit_cli({"--help"}).code == 0);
  CHECK(roadkit_cli({}).code == 1);
  CHECK(roadkit_cli({"frobnicate"}).code == 1);
  CHECK(roadkit_cli({"eval", "--rho", "abc"}).code == 1);
  CHECK(roadkit_cli({"labelgen", "x.json"}).code != 0);
}
