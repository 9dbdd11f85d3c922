#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "parallel.hpp"
#include "roadkit/cli.hpp"
#include "roadkit/ga_kernel.hpp"
#include "roadkit/io.hpp"
#include "roadkit/tiling.hpp"

namespace roadkit::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Files named directly are taken as-is; directories contribute their entries
// with the wanted extension, sorted.
std::vector<fs::path> collect_inputs(const std::vector<fs::path>& inputs, const std::string& ext) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    std::error_code ec;
    if (fs::is_directory(in, ec)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(in))
        if (entry.is_regular_file() && entry.path().extension() == ext) found.push_back(entry.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(in, ec)) {
      files.push_back(in);
    } else {
      throw IoError("no such file or directory: " + in.string());
    }
  }
  return files;
}

void emit(const RunConfig& cfg, const std::string& default_name, const ordered_json& report, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (cfg.out.empty()) {
    out << text;
    return;
  }
  std::error_code ec;
  const fs::path target = fs::is_directory(cfg.out, ec) ? cfg.out / default_name : cfg.out;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  write_text_file(target, text);
}

fs::path require_out_dir(const RunConfig& cfg, const char* command) {
  if (cfg.out.empty()) throw std::invalid_argument(std::string(command) + " requires --out DIR");
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (!fs::is_directory(cfg.out)) throw IoError("cannot create output directory: " + cfg.out.string());
  return cfg.out;
}

// Per-file outcome of a batch command.
struct ItemResult {
  enum Status { kOk, kInvalid, kIo } status = kOk;
  ordered_json record;
};

template <class F>
ItemResult guarded(const fs::path& input, F&& body) {
  ItemResult r;
  r.record["input"] = input.generic_string();
  try {
    body(r.record);
  } catch (const IoError& e) {
    r.status = ItemResult::kIo;
    r.record["error"] = e.what();
  } catch (const fs::filesystem_error& e) {
    r.status = ItemResult::kIo;
    r.record["error"] = e.what();
  } catch (const std::exception& e) {
    r.status = ItemResult::kInvalid;
    r.record["error"] = e.what();
  }
  return r;
}

int summarize(const char* command, const std::vector<ItemResult>& results, std::ostream& out, std::ostream& err) {
  ordered_json items = ordered_json::array();
  int code = kOk;
  std::size_t failed = 0;
  for (const auto& r : results) {
    items.push_back(r.record);
    if (r.status == ItemResult::kOk) continue;
    ++failed;
    err << command << ": " << r.record["input"].get<std::string>() << ": " << r.record["error"].get<std::string>()
        << "\n";
    code = std::max(code, r.status == ItemResult::kIo ? int(kIoFailure) : int(kValidationFailure));
  }
  ordered_json summary;
  summary["command"] = command;
  summary["processed"] = results.size();
  summary["failed"] = failed;
  summary["items"] = items;
  out << summary.dump(2) << "\n";
  return code;
}

int auto_extent(double max_coord, const LabelParams& p) {
  return std::max(1, static_cast<int>(std::floor(max_coord)) + 1 + static_cast<int>(std::ceil(2.0 * p.theta)));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

int cmd_labelgen(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto files = collect_inputs(cfg.inputs, ".json");
  const fs::path dir = require_out_dir(cfg, "labelgen");
  const auto results = parallel_map<ItemResult>(files.size(), effective_threads(cfg), [&](std::size_t i) {
    return guarded(files[i], [&](ordered_json& rec) {
      RoadGraph g = parse_graph(read_text_file(files[i]));
      Window w;
      if (cfg.window) {
        w = *cfg.window;
      } else {
        double mx = 0.0, my = 0.0;
        for (const Edge& e : g.edges())
          for (const Point& p : e.polyline) mx = std::max(mx, p.x), my = std::max(my, p.y);
        for (const Point& p : g.nodes()) mx = std::max(mx, p.x), my = std::max(my, p.y);
        w = {0, 0, cfg.raster_width.value_or(auto_extent(mx, cfg.labels)),
             cfg.raster_height.value_or(auto_extent(my, cfg.labels))};
      }
      g = translate_graph(crop_graph(g, w), -w.x0, -w.y0);
      const RoadLabels labels = connectivity_label(g, w.width, w.height, cfg.labels);
      const std::string stem = files[i].stem().string();
      const fs::path mask_path = dir / (stem + "_mask.pgm");
      const fs::path conn_path = dir / (stem + "_conn.pgm");
      write_pgm(mask_path, labels.mask);
      write_pgm(conn_path, labels.connectivity);
      rec["width"] = w.width;
      rec["height"] = w.height;
      rec["mask"] = mask_path.generic_string();
      rec["connectivity"] = conn_path.generic_string();
    });
  });
  return summarize("labelgen", results, out, err);
}

int cmd_vectorize(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto files = collect_inputs(cfg.inputs, ".pgm");
  const fs::path dir = require_out_dir(cfg, "vectorize");
  const auto results = parallel_map<ItemResult>(files.size(), effective_threads(cfg), [&](std::size_t i) {
    return guarded(files[i], [&](ordered_json& rec) {
      const RoadGraph g = mask_to_graph(read_mask_pgm(files[i]), cfg.vectorize);
      const fs::path graph_path = dir / (files[i].stem().string() + ".json");
      write_text_file(graph_path, serialize_graph(g) + "\n");
      rec["graph"] = graph_path.generic_string();
      rec["nodes"] = g.node_count();
      rec["edges"] = g.edges().size();
    });
  });
  return summarize("vectorize", results, out, err);
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.gt.empty() || cfg.pred.empty()) throw std::invalid_argument("eval requires --gt and --pred");
  // stem -> extensions present
  auto scan = [](const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::map<std::string, std::set<std::string>> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto ext = entry.path().extension().string();
      if (entry.is_regular_file() && (ext == ".pgm" || ext == ".json")) stems[entry.path().stem().string()].insert(ext);
    }
    return stems;
  };
  const auto gt = scan(cfg.gt);
  const auto pred = scan(cfg.pred);

  std::vector<std::string> orphans;
  for (const auto& [stem, _] : gt)
    if (!pred.contains(stem)) orphans.push_back((cfg.gt / stem).generic_string());
  for (const auto& [stem, _] : pred)
    if (!gt.contains(stem)) orphans.push_back((cfg.pred / stem).generic_string());
  if (!orphans.empty()) {
    ordered_json j;
    j["error"] = "unpaired inputs";
    j["orphans"] = orphans;
    err << j.dump(2) << "\n";
    return kValidationFailure;
  }

  std::vector<std::string> ids;
  for (const auto& [stem, _] : gt) ids.push_back(stem);

  struct Record {
    std::optional<PixelScore> pixel;
    std::optional<double> apls;
  };
  const auto records = parallel_map<Record>(ids.size(), effective_threads(cfg), [&](std::size_t i) {
    const std::string& id = ids[i];
    const auto& g_ext = gt.at(id);
    const auto& p_ext = pred.at(id);
    Record r;
    if (g_ext.contains(".pgm") && p_ext.contains(".pgm"))
      r.pixel = pixel_score(read_mask_pgm(cfg.pred / (id + ".pgm")), read_mask_pgm(cfg.gt / (id + ".pgm")), cfg.rho);
    if (g_ext.contains(".json")) {
      const RoadGraph g = parse_graph(read_text_file(cfg.gt / (id + ".json")));
      std::optional<RoadGraph> p;
      if (p_ext.contains(".json"))
        p = parse_graph(read_text_file(cfg.pred / (id + ".json")));
      else if (p_ext.contains(".pgm"))
        p = mask_to_graph(read_mask_pgm(cfg.pred / (id + ".pgm")), cfg.vectorize);
      if (p) r.apls = apls(g, *p, cfg.apls);
    }
    if (!r.pixel && !r.apls) throw std::invalid_argument("no comparable inputs for '" + id + "'");
    return r;
  });

  ordered_json images = ordered_json::array();
  std::vector<double> ious, relaxed, aplss;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ordered_json rec;
    rec["id"] = ids[i];
    const Record& r = records[i];
    if (r.pixel) {
      rec["iou"] = r.pixel->iou;
      rec["relaxed_iou"] = r.pixel->relaxed_iou;
      rec["rho"] = r.pixel->rho;
      ious.push_back(r.pixel->iou);
      relaxed.push_back(r.pixel->relaxed_iou);
    } else {
      rec["iou"] = nullptr;
      rec["relaxed_iou"] = nullptr;
      rec["rho"] = cfg.rho;
    }
    if (r.apls) {
      rec["apls"] = *r.apls;
      aplss.push_back(*r.apls);
    } else {
      rec["apls"] = nullptr;
    }
    images.push_back(rec);
  }
  auto mean_json = [](const std::vector<double>& v) { return v.empty() ? ordered_json(nullptr) : ordered_json(mean_of(v)); };
  ordered_json report;
  report["rho"] = cfg.rho;
  report["count"] = ids.size();
  report["images"] = images;
  report["mean"] = {{"iou", mean_json(ious)}, {"relaxed_iou", mean_json(relaxed)}, {"apls", mean_json(aplss)}};
  emit(cfg, "eval.json", report, out);
  return kOk;
}

int cmd_tile_plan(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto& t = cfg.tiling;
  const TilePlan plan = plan_tiles(t.width, t.height, t.patch, t.stride, t.margin);
  auto win = [](const Window& w) { return ordered_json::array({w.x0, w.y0, w.width, w.height}); };
  ordered_json tiles = ordered_json::array();
  for (const Tile& tile : plan.tiles) {
    ordered_json j;
    j["read"] = win(tile.read);
    j["write"] = win(tile.write);
    j["paste"] = ordered_json::array({tile.paste_x, tile.paste_y});
    tiles.push_back(j);
  }
  ordered_json report;
  report["image_width"] = plan.image_width;
  report["image_height"] = plan.image_height;
  report["patch"] = plan.patch;
  report["stride"] = plan.stride;
  report["margin"] = plan.margin;
  report["columns"] = plan.columns;
  report["rows"] = plan.rows;
  report["tiles"] = tiles;
  emit(cfg, "tile_plan.json", report, out);
  return kOk;
}

int cmd_ga_forward(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  if (cfg.inputs.size() != 1) throw std::invalid_argument("ga-forward takes exactly one feature map");
  std::ifstream in(cfg.inputs[0], std::ios::binary);
  if (!in) throw IoError("cannot open " + cfg.inputs[0].string());
  const ga::FeatureMap v = read_feature_map(in);

  GaWeights w;
  if (!cfg.weights.empty()) {
    w = parse_ga_weights(read_text_file(cfg.weights));
  } else {
    std::mt19937_64 rng(cfg.seed);
    w.ga = ga::GaParams::random(v.channels(), 1, rng);
    w.branch = ga::ResidualBranchParams::random(v.channels(), rng);
  }
  if (w.ga.channels != v.channels())
    throw std::invalid_argument("weights expect " + std::to_string(w.ga.channels) + " channels, input has " +
                                std::to_string(v.channels()));
  if (cfg.resblock && !w.branch) throw std::invalid_argument("--resblock needs branch weights");

  const ga::FeatureMap y = cfg.resblock ? ga::ga_resblock(v, w.ga, *w.branch) : ga::ga_module(v, w.ga);
  const auto& d = y.data();
  double sum = 0.0, sq = 0.0;
  for (double x : d) sum += x, sq += x * x;
  const double mean = sum / static_cast<double>(d.size());
  std::vector<double> channel_mean;
  for (int c = 0; c < y.channels(); ++c) {
    double s = 0.0;
    for (int i = 0; i < y.plane(); ++i) s += d[static_cast<std::size_t>(c) * y.plane() + i];
    channel_mean.push_back(s / y.plane());
  }
  ordered_json report;
  report["input"] = cfg.inputs[0].generic_string();
  report["mode"] = cfg.resblock ? "ga_resblock" : "ga_module";
  report["channels"] = y.channels();
  report["height"] = y.height();
  report["width"] = y.width();
  report["min"] = *std::min_element(d.begin(), d.end());
  report["max"] = *std::max_element(d.begin(), d.end());
  report["mean"] = mean;
  report["std"] = std::sqrt(std::max(0.0, sq / static_cast<double>(d.size()) - mean * mean));
  report["channel_mean"] = channel_mean;
  emit(cfg, "ga_forward.json", report, out);
  return kOk;
}

int cmd_losscheck(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto report = loss_check_report(cfg.seed, cfg.instances, effective_threads(cfg));
  emit(cfg, "losscheck.json", report, out);
  return report["pass"].get<bool>() ? kOk : kValidationFailure;
}

int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto report = full_check_report(cfg.seed, effective_threads(cfg));
  emit(cfg, "check.json", report, out);
  return report["pass"].get<bool>() ? kOk : kValidationFailure;
}

}  // namespace roadkit::cli
