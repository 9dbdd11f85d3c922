#include <functional>
#include <memory>

#include "CLI11.hpp"
#include "roadkit/cli.hpp"
#include "roadkit/io.hpp"

namespace roadkit::cli {

namespace {

// Flag values are staged and only copied over the config when the flag was
// actually given, which yields flags > config file > defaults.
class Flags {
 public:
  explicit Flags(CLI::App* sub) : sub_(sub) {
    sub_->add_option("--config", config_, "JSON run configuration");
    add<int>("--threads", "worker threads (default: hardware threads)", [](RunConfig& c, int v) { c.threads = v; });
  }

  template <class T, class Set>
  CLI::Option* add(const std::string& name, const std::string& desc, Set set) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = sub_->add_option(name, *value, desc);
    appliers_.push_back([opt, value, set](RunConfig& c) {
      if (opt->count() > 0) set(c, *value);
    });
    return opt;
  }

  void out(const std::string& desc) {
    add<std::string>("-o,--out", desc, [](RunConfig& c, const std::string& v) { c.out = v; });
  }
  void seed() {
    add<std::uint64_t>("--seed", "random seed", [](RunConfig& c, std::uint64_t v) { c.seed = v; });
  }
  void inputs(const std::string& desc, bool required) {
    auto* opt = add<std::vector<std::string>>("inputs", desc, [](RunConfig& c, const std::vector<std::string>& v) {
      c.inputs.assign(v.begin(), v.end());
    });
    if (required) opt->required();
  }

  CLI::App* app() const { return sub_; }

  RunConfig build() const {
    RunConfig cfg;
    if (!config_.empty()) {
      const std::string text = read_text_file(config_);
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("config " + config_ + ": " + e.what());
      }
      apply_config(cfg, doc);
    }
    for (const auto& a : appliers_) a(cfg);
    cfg.validate();
    return cfg;
  }

 private:
  CLI::App* sub_;
  std::string config_;
  std::vector<std::function<void(RunConfig&)>> appliers_;
};

using Command = int (*)(const RunConfig&, std::ostream&, std::ostream&);

void label_flags(Flags& f) {
  f.add<double>("--theta", "Gaussian width in pixels", [](RunConfig& c, double v) { c.labels.theta = v; });
  f.add<double>("--lambda", "road threshold on the heatmap", [](RunConfig& c, double v) { c.labels.lambda = v; });
  f.add<double>("--node-radius", "junction region radius in pixels",
                [](RunConfig& c, double v) { c.labels.node_radius = v; });
}

void vectorize_flags(Flags& f) {
  f.add<double>("--rdp-tolerance", "simplification tolerance in pixels (default 2)",
                [](RunConfig& c, double v) { c.vectorize.rdp_tolerance = v; });
  f.add<double>("--min-spur", "drop hanging curves shorter than this (default 30)",
                [](RunConfig& c, double v) { c.vectorize.min_spur = v; });
  f.add<double>("--junction-merge", "fuse junctions joined by shorter edges (default 6)",
                [](RunConfig& c, double v) { c.vectorize.junction_merge = v; });
  f.add<double>("--junction-refine", "arm offset for re-placing junctions (default 8)",
                [](RunConfig& c, double v) { c.vectorize.junction_refine = v; });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Road graph labels, vectorization, metrics and kernels", "roadkit"};
  app.require_subcommand(1);
  std::vector<std::pair<std::unique_ptr<Flags>, Command>> commands;
  auto sub = [&](const char* name, const char* desc, Command cmd) -> Flags& {
    commands.emplace_back(std::make_unique<Flags>(app.add_subcommand(name, desc)), cmd);
    return *commands.back().first;
  };

  {
    auto& f = sub("labelgen", "graph-JSON files -> road mask and connectivity PGMs", cmd_labelgen);
    f.inputs("graph-JSON files or directories", false);
    f.out("output directory");
    label_flags(f);
    f.add<int>("--width", "raster width", [](RunConfig& c, int v) { c.raster_width = v; });
    f.add<int>("--height", "raster height", [](RunConfig& c, int v) { c.raster_height = v; });
    f.add<std::vector<int>>("--window", "crop window x0,y0,width,height",
                            [](RunConfig& c, const std::vector<int>& v) {
                              if (v.size() != 4) throw std::invalid_argument("--window needs x0,y0,width,height");
                              c.window = Window{v[0], v[1], v[2], v[3]};
                            })
        ->delimiter(',');
  }
  {
    auto& f = sub("vectorize", "mask PGMs -> graph-JSON", cmd_vectorize);
    f.inputs("mask PGM files or directories", false);
    f.out("output directory");
    vectorize_flags(f);
  }
  {
    auto& f = sub("eval", "score predictions against ground truth, paired by file stem", cmd_eval);
    f.add<std::string>("--gt", "ground-truth directory", [](RunConfig& c, const std::string& v) { c.gt = v; });
    f.add<std::string>("--pred", "prediction directory", [](RunConfig& c, const std::string& v) { c.pred = v; });
    f.out("report path or directory (default stdout)");
    f.add<double>("--rho", "relaxed IoU buffer in pixels (default 3)", [](RunConfig& c, double v) { c.rho = v; });
    f.add<double>("--snap-radius", "APLS snap radius in pixels",
                  [](RunConfig& c, double v) { c.apls.snap_radius = v; });
    f.add<double>("--sample-spacing", "APLS control-point spacing in pixels",
                  [](RunConfig& c, double v) { c.apls.sample_spacing = v; });
    vectorize_flags(f);
  }
  {
    auto& f = sub("tile-plan", "overlapping tile layout for large images", cmd_tile_plan);
    f.add<int>("--width", "image width", [](RunConfig& c, int v) { c.tiling.width = v; });
    f.add<int>("--height", "image height", [](RunConfig& c, int v) { c.tiling.height = v; });
    f.add<int>("--patch", "patch size (default 512)", [](RunConfig& c, int v) { c.tiling.patch = v; });
    f.add<int>("--stride", "patch stride (default 368)", [](RunConfig& c, int v) { c.tiling.stride = v; });
    f.add<int>("--margin", "ignored border per patch (default 72)", [](RunConfig& c, int v) { c.tiling.margin = v; });
    f.out("report path or directory (default stdout)");
  }
  {
    auto& f = sub("ga-forward", "run the attention module on an RGKT feature map", cmd_ga_forward);
    f.inputs("feature map file", true);
    f.add<std::string>("--weights", "JSON weight file (default: seeded random)",
                       [](RunConfig& c, const std::string& v) { c.weights = v; });
    f.add<bool>("--resblock", "run the full residual block", [](RunConfig& c, bool v) { c.resblock = v; })
        ->expected(0, 1)
        ->default_str("true");
    f.seed();
    f.out("report path or directory (default stdout)");
  }
  {
    auto& f = sub("losscheck", "finite-difference checks of the loss gradients", cmd_losscheck);
    f.add<int>("--instances", "random instances per loss (default 100)",
               [](RunConfig& c, int v) { c.instances = v; });
    f.seed();
    f.out("report path or directory (default stdout)");
  }
  {
    auto& f = sub("check", "gradient checks and oracle suites", cmd_check);
    f.seed();
    f.out("report path or directory (default stdout)");
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kValidationFailure;
  }

  for (const auto& [flags, cmd] : commands) {
    if (!flags->app()->parsed()) continue;
    const std::string name = flags->app()->get_name();
    try {
      return cmd(flags->build(), out, err);
    } catch (const IoError& e) {
      err << "roadkit " << name << ": " << e.what() << "\n";
      return kIoFailure;
    } catch (const std::filesystem::filesystem_error& e) {
      err << "roadkit " << name << ": " << e.what() << "\n";
      return kIoFailure;
    } catch (const std::exception& e) {
      err << "roadkit " << name << ": " << e.what() << "\n";
      return kValidationFailure;
    }
  }
  return kValidationFailure;
}

}  // namespace roadkit::cli
