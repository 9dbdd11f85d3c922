#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "roadkit/ga_kernel.hpp"
#include "roadkit/grid.hpp"

namespace roadkit {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Binary PGM (P5). Masks are stored 0/255 with maxval 255; reading maps any
// value above maxval/2 to road. Connectivity maps keep their class values
// with maxval 5.
void write_pgm(std::ostream& out, const RasterMask& mask);
void write_pgm(std::ostream& out, const ConnectivityMap& conn);
RasterMask read_mask_pgm(std::istream& in);
ConnectivityMap read_connectivity_pgm(std::istream& in);

void write_pgm(const std::filesystem::path& path, const RasterMask& mask);
void write_pgm(const std::filesystem::path& path, const ConnectivityMap& conn);
RasterMask read_mask_pgm(const std::filesystem::path& path);
ConnectivityMap read_connectivity_pgm(const std::filesystem::path& path);

// Scalar field: "RGKF", u32 width, u32 height, 4 reserved bytes, then
// width*height little-endian float32 values in row-major order.
void write_field(std::ostream& out, const ScalarField& field);
ScalarField read_field(std::istream& in);

// Feature map: "RGKT", u32 channels, u32 height, u32 width, then
// little-endian float32 values, channel-major.
void write_feature_map(std::ostream& out, const ga::FeatureMap& fm);
ga::FeatureMap read_feature_map(std::istream& in);

}  // namespace roadkit

#include <optional>
#include <string_view>

namespace roadkit {

/// Weight file for the GA kernel:
/// `{"channels":C,"reduction":r,"w1":[[..]],"b1":[..],"w2":[[..]],"b2":[..],
///   "branch":{"conv1":{"weight":[..],"bias":[..]},"conv2":{...}}}`.
/// Matrices may be nested or flat row-major; "branch" is optional.
struct GaWeights {
  ga::GaParams ga;
  std::optional<ga::ResidualBranchParams> branch;
};

GaWeights parse_ga_weights(std::string_view document);

}  // namespace roadkit
