#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

#include "roadkit/cli.hpp"

namespace roadkit::cli {

namespace {

using nlohmann::json;

template <class T>
void take(const json& doc, const char* key, T& dst) {
  if (!doc.contains(key)) return;
  try {
    dst = doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("config: bad value for '") + key + "'");
  }
}

template <class T>
void take(const json& doc, const char* key, std::optional<T>& dst) {
  if (!doc.contains(key)) return;
  T v{};
  take(doc, key, v);
  dst = v;
}

void take_path(const json& doc, const char* key, std::filesystem::path& dst) {
  std::string s;
  if (!doc.contains(key)) return;
  take(doc, key, s);
  dst = s;
}

}  // namespace

void RunConfig::validate() const {
  labels.validate();
  apls.validate();
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
  if (!(vectorize.rdp_tolerance >= 0.0)) throw std::invalid_argument("rdp tolerance must be >= 0");
  if (!(vectorize.min_spur >= 0.0)) throw std::invalid_argument("min spur must be >= 0");
  if (!(vectorize.junction_merge >= 0.0)) throw std::invalid_argument("junction merge must be >= 0");
  if (!(vectorize.junction_refine >= 0.0)) throw std::invalid_argument("junction refine must be >= 0");
  if (raster_width && *raster_width <= 0) throw std::invalid_argument("raster width must be positive");
  if (raster_height && *raster_height <= 0) throw std::invalid_argument("raster height must be positive");
  if (window && (window->width <= 0 || window->height <= 0))
    throw std::invalid_argument("window must have positive size");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
  if (instances < 0) throw std::invalid_argument("instances must be >= 0");
}

void apply_config(RunConfig& cfg, const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");

  if (doc.contains("inputs")) {
    std::vector<std::string> inputs;
    take(doc, "inputs", inputs);
    cfg.inputs.assign(inputs.begin(), inputs.end());
  }
  take_path(doc, "out", cfg.out);
  take_path(doc, "gt", cfg.gt);
  take_path(doc, "pred", cfg.pred);
  take_path(doc, "weights", cfg.weights);

  if (doc.contains("labels")) {
    const json& l = doc["labels"];
    take(l, "theta", cfg.labels.theta);
    take(l, "lambda", cfg.labels.lambda);
    take(l, "node_radius", cfg.labels.node_radius);
  }
  take(doc, "width", cfg.raster_width);
  take(doc, "height", cfg.raster_height);
  if (doc.contains("window")) {
    std::vector<int> w;
    take(doc, "window", w);
    if (w.size() != 4) throw std::invalid_argument("config: window must be [x0, y0, width, height]");
    cfg.window = Window{w[0], w[1], w[2], w[3]};
  }

  if (doc.contains("apls")) {
    const json& a = doc["apls"];
    take(a, "snap_radius", cfg.apls.snap_radius);
    take(a, "sample_spacing", cfg.apls.sample_spacing);
  }
  take(doc, "rho", cfg.rho);
  take(doc, "rdp_tolerance", cfg.vectorize.rdp_tolerance);
  take(doc, "min_spur", cfg.vectorize.min_spur);
  take(doc, "junction_merge", cfg.vectorize.junction_merge);
  take(doc, "junction_refine", cfg.vectorize.junction_refine);

  if (doc.contains("tiling")) {
    const json& t = doc["tiling"];
    take(t, "width", cfg.tiling.width);
    take(t, "height", cfg.tiling.height);
    take(t, "patch", cfg.tiling.patch);
    take(t, "stride", cfg.tiling.stride);
    take(t, "margin", cfg.tiling.margin);
  }

  take(doc, "threads", cfg.threads);
  take(doc, "seed", cfg.seed);
  take(doc, "instances", cfg.instances);
  take(doc, "resblock", cfg.resblock);
}

unsigned effective_threads(const RunConfig& cfg) {
  unsigned n = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* cap = std::getenv("ROADKIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end != cap && *end == '\0' && v > 0) n = std::min(n, static_cast<unsigned>(v));
  }
  return n;
}

}  // namespace roadkit::cli
