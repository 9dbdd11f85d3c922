#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "roadkit/graph.hpp"
#include "roadkit/labelgen.hpp"
#include "roadkit/metrics.hpp"
#include "roadkit/vectorize.hpp"

namespace roadkit::cli {

enum ExitCode : int { kOk = 0, kValidationFailure = 1, kIoFailure = 2 };

struct TilingConfig {
  int width = 0;
  int height = 0;
  int patch = 512;
  int stride = 368;
  int margin = 72;
};

struct RunConfig {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out;  // empty: stdout for reports
  std::filesystem::path gt;
  std::filesystem::path pred;
  std::filesystem::path weights;

  LabelParams labels;
  std::optional<int> raster_width;
  std::optional<int> raster_height;
  std::optional<Window> window;

  AplsParams apls;
  double rho = 3.0;
  VectorizeParams vectorize;
  TilingConfig tiling;

  int threads = 0;  // 0: hardware concurrency
  std::uint64_t seed = 0;
  int instances = 0;  // losscheck/check instance override, 0: defaults
  bool resblock = false;

  void validate() const;
};

/// Applies the fields present in a JSON config document on top of `cfg`.
void apply_config(RunConfig& cfg, const nlohmann::json& doc);

/// Worker count: configured value (or hardware threads), capped by ROADKIT_THREADS.
unsigned effective_threads(const RunConfig& cfg);

int cmd_labelgen(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_vectorize(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_tile_plan(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_ga_forward(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_losscheck(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Report builders behind `losscheck` and `check`; "pass" is set per entry.
nlohmann::ordered_json loss_check_report(std::uint64_t seed, int instances, unsigned threads);
nlohmann::ordered_json full_check_report(std::uint64_t seed, unsigned threads);

/// Entry point; `args` includes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace roadkit::cli
