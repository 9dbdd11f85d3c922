#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace roadkit::ga {

/// Dense C x H x W tensor, channel-major.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int channels, int height, int width, double fill = 0.0);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int plane() const { return height_ * width_; }

  double& operator()(int c, int y, int x) { return data_[index(c, y, x)]; }
  double operator()(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const FeatureMap& o) const {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// Channel-attention projection: two 1x1 convolutions around a rectifier,
/// C -> C/r -> C, followed by a sigmoid gate.
struct GaParams {
  int channels = 0;
  int reduction = 1;
  std::vector<double> w1;  // (C/r) x C, row-major
  std::vector<double> b1;  // C/r
  std::vector<double> w2;  // C x (C/r), row-major
  std::vector<double> b2;  // C

  int hidden() const { return channels / reduction; }
  /// Throws std::invalid_argument unless r divides C and the shapes agree.
  void validate() const;

  static GaParams zeros(int channels, int reduction);
  /// Uniform in [-scale, scale].
  static GaParams random(int channels, int reduction, std::mt19937_64& rng, double scale = 0.1);
};

/// 3x3 same-padded, stride-1 convolution mapping C channels to C channels.
struct Conv3x3 {
  int channels = 0;
  std::vector<double> weight;  // [out][in][3][3]
  std::vector<double> bias;    // [out]

  void validate() const;
  static Conv3x3 zeros(int channels);
  static Conv3x3 random(int channels, std::mt19937_64& rng, double scale = 0.1);
};

/// BasicBlock residual branch: conv -> rectifier -> conv.
struct ResidualBranchParams {
  Conv3x3 conv1;
  Conv3x3 conv2;

  static ResidualBranchParams zeros(int channels);
  static ResidualBranchParams random(int channels, std::mt19937_64& rng, double scale = 0.1);
};

struct GaGradients {
  std::vector<double> w1, b1, w2, b2;
};

struct ConvGradients {
  std::vector<double> weight, bias;
};

/// Per-channel gate U' for `v`; every entry lies in (0, 1).
std::vector<double> channel_weights(const FeatureMap& v, const GaParams& p);
FeatureMap channel_attention(const FeatureMap& v, const GaParams& p);

/// Per-position gate R = sigmoid(mean over channels); H*W entries in (0, 1).
std::vector<double> spatial_weights(const FeatureMap& v);
FeatureMap spatial_attention(const FeatureMap& v);

/// Spatial attention cascaded after channel attention.
FeatureMap ga_module(const FeatureMap& v, const GaParams& p);

FeatureMap conv3x3(const FeatureMap& v, const Conv3x3& conv);
FeatureMap residual_branch(const FeatureMap& v, const ResidualBranchParams& branch);

/// rectifier(v + ga_module(branch(v)))
FeatureMap ga_resblock(const FeatureMap& v, const GaParams& p, const ResidualBranchParams& branch);

struct GaBackward {
  FeatureMap dv;
  GaGradients dparams;
};

/// Reverse-mode derivatives of ga_module given the upstream gradient `dy`.
GaBackward ga_backward(const FeatureMap& v, const GaParams& p, const FeatureMap& dy);

struct ResBlockBackward {
  FeatureMap dv;
  GaGradients dga;
  ConvGradients dconv1;
  ConvGradients dconv2;
};

ResBlockBackward ga_resblock_backward(const FeatureMap& v, const GaParams& p,
                                      const ResidualBranchParams& branch, const FeatureMap& dy);

}  // namespace roadkit::ga
