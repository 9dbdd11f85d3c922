#include "roadkit/io.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace roadkit {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated header");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_f32(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  put_u32(out, bits);
}

double get_f32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated payload");
  const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
                             static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  return std::bit_cast<float>(bits);
}

void expect_magic(std::istream& in, const char* magic) {
  char m[4];
  if (!in.read(m, 4) || std::memcmp(m, magic, 4) != 0)
    throw IoError(std::string("bad magic, expected ") + magic);
}

// Next whitespace-delimited header token, skipping '#' comments.
int pgm_token(std::istream& in) {
  int c = in.get();
  while (true) {
    while (c != EOF && std::isspace(c)) c = in.get();
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    break;
  }
  if (c == EOF || !std::isdigit(c)) throw IoError("malformed PGM header");
  long v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > 1'000'000'000) throw IoError("PGM header value out of range");
    c = in.get();
  }
  // exactly one whitespace byte separates maxval from the raster
  return static_cast<int>(v);
}

struct PgmRaster {
  int width = 0, height = 0, maxval = 0;
  std::vector<std::uint16_t> values;
};

PgmRaster read_pgm(std::istream& in) {
  char magic[2];
  if (!in.read(magic, 2) || magic[0] != 'P' || magic[1] != '5') throw IoError("not a binary PGM (P5)");
  PgmRaster r;
  r.width = pgm_token(in);
  r.height = pgm_token(in);
  r.maxval = pgm_token(in);
  if (r.width <= 0 || r.height <= 0) throw IoError("PGM dimensions must be positive");
  if (r.maxval <= 0 || r.maxval > 65535) throw IoError("PGM maxval out of range");
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
  r.values.resize(n);
  if (r.maxval < 256) {
    std::vector<unsigned char> buf(n);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n)))
      throw IoError("truncated PGM raster");
    for (std::size_t i = 0; i < n; ++i) r.values[i] = buf[i];
  } else {
    std::vector<unsigned char> buf(2 * n);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n)))
      throw IoError("truncated PGM raster");
    for (std::size_t i = 0; i < n; ++i) r.values[i] = static_cast<std::uint16_t>(buf[2 * i] << 8 | buf[2 * i + 1]);
  }
  return r;
}

template <typename G>
void write_pgm_bytes(std::ostream& out, const G& g, int maxval, std::uint8_t scale) {
  out << "P5\n" << g.width() << ' ' << g.height() << '\n' << maxval << '\n';
  std::vector<char> buf(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] = static_cast<char>(g.data()[i] * scale);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed to write PGM");
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  return out;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("failed to write " + path.string());
}

void write_pgm(std::ostream& out, const RasterMask& mask) { write_pgm_bytes(out, mask, 255, 255); }

void write_pgm(std::ostream& out, const ConnectivityMap& conn) {
  write_pgm_bytes(out, conn, kMaxConnectivityClass, 1);
}

RasterMask read_mask_pgm(std::istream& in) {
  const PgmRaster r = read_pgm(in);
  RasterMask mask(r.width, r.height);
  for (std::size_t i = 0; i < r.values.size(); ++i) mask.data()[i] = 2 * r.values[i] > r.maxval ? 1 : 0;
  return mask;
}

ConnectivityMap read_connectivity_pgm(std::istream& in) {
  const PgmRaster r = read_pgm(in);
  ConnectivityMap conn(r.width, r.height);
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    if (r.values[i] > kMaxConnectivityClass) throw IoError("connectivity class above 5");
    conn.data()[i] = static_cast<std::uint8_t>(r.values[i]);
  }
  return conn;
}

void write_pgm(const std::filesystem::path& path, const RasterMask& mask) {
  auto out = open_out(path);
  write_pgm(out, mask);
}

void write_pgm(const std::filesystem::path& path, const ConnectivityMap& conn) {
  auto out = open_out(path);
  write_pgm(out, conn);
}

RasterMask read_mask_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_mask_pgm(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

ConnectivityMap read_connectivity_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_connectivity_pgm(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_field(std::ostream& out, const ScalarField& field) {
  out.write("RGKF", 4);
  put_u32(out, static_cast<std::uint32_t>(field.width()));
  put_u32(out, static_cast<std::uint32_t>(field.height()));
  put_u32(out, 0);
  for (double v : field.data()) put_f32(out, v);
  if (!out) throw IoError("failed to write scalar field");
}

ScalarField read_field(std::istream& in) {
  expect_magic(in, "RGKF");
  const auto w = get_u32(in);
  const auto h = get_u32(in);
  get_u32(in);
  if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) throw IoError("scalar field dimensions out of range");
  ScalarField field(static_cast<int>(w), static_cast<int>(h));
  for (double& v : field.data()) v = get_f32(in);
  return field;
}

void write_feature_map(std::ostream& out, const ga::FeatureMap& fm) {
  out.write("RGKT", 4);
  put_u32(out, static_cast<std::uint32_t>(fm.channels()));
  put_u32(out, static_cast<std::uint32_t>(fm.height()));
  put_u32(out, static_cast<std::uint32_t>(fm.width()));
  for (double v : fm.data()) put_f32(out, v);
  if (!out) throw IoError("failed to write feature map");
}

ga::FeatureMap read_feature_map(std::istream& in) {
  expect_magic(in, "RGKT");
  const auto c = get_u32(in);
  const auto h = get_u32(in);
  const auto w = get_u32(in);
  if (c == 0 || h == 0 || w == 0 || static_cast<std::uint64_t>(c) * h * w > (1ull << 28))
    throw IoError("feature map dimensions out of range");
  ga::FeatureMap fm(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
  for (double& v : fm.data()) v = get_f32(in);
  return fm;
}

namespace {

using nlohmann::json;

std::vector<double> flat_numbers(const json& j, const std::string& field) {
  std::vector<double> out;
  auto walk = [&](const json& node, auto&& self) -> void {
    if (node.is_number()) {
      out.push_back(node.get<double>());
    } else if (node.is_array()) {
      for (const auto& child : node) self(child, self);
    } else {
      throw IoError(field + ": expected numbers");
    }
  };
  walk(j, walk);
  return out;
}

const json& member(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) throw IoError(where + ": missing \"" + key + "\"");
  return *it;
}

ga::Conv3x3 read_conv(const json& j, int channels, const std::string& where) {
  ga::Conv3x3 conv;
  conv.channels = channels;
  conv.weight = flat_numbers(member(j, "weight", where), where + ".weight");
  conv.bias = flat_numbers(member(j, "bias", where), where + ".bias");
  try {
    conv.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(where + ": " + e.what());
  }
  return conv;
}

}  // namespace

GaWeights parse_ga_weights(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw IoError(std::string("weight file: ") + e.what());
  }
  if (!doc.is_object()) throw IoError("weight file must be a JSON object");
  GaWeights w;
  const json& channels = member(doc, "channels", "weights");
  const json& reduction = member(doc, "reduction", "weights");
  if (!channels.is_number_integer() || !reduction.is_number_integer())
    throw IoError("weights: channels and reduction must be integers");
  w.ga.channels = channels.get<int>();
  w.ga.reduction = reduction.get<int>();
  w.ga.w1 = flat_numbers(member(doc, "w1", "weights"), "w1");
  w.ga.b1 = flat_numbers(member(doc, "b1", "weights"), "b1");
  w.ga.w2 = flat_numbers(member(doc, "w2", "weights"), "w2");
  w.ga.b2 = flat_numbers(member(doc, "b2", "weights"), "b2");
  try {
    w.ga.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("weights: ") + e.what());
  }
  if (const auto it = doc.find("branch"); it != doc.end()) {
    ga::ResidualBranchParams b;
    b.conv1 = read_conv(member(*it, "conv1", "branch"), w.ga.channels, "branch.conv1");
    b.conv2 = read_conv(member(*it, "conv2", "branch"), w.ga.channels, "branch.conv2");
    w.branch = std::move(b);
  }
  return w;
}

}  // namespace roadkit
