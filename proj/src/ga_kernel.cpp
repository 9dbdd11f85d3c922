#include "roadkit/ga_kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace roadkit::ga {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void fill_uniform(std::vector<double>& v, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (double& x : v) x = dist(rng);
}

void require_shape(const FeatureMap& a, const FeatureMap& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

struct ChannelForward {
  std::vector<double> pooled;  // U
  std::vector<double> z1;      // pre-activation of the hidden layer
  std::vector<double> hidden;
  std::vector<double> gate;  // U'
};

ChannelForward channel_forward(const FeatureMap& v, const GaParams& p) {
  p.validate();
  if (v.channels() != p.channels)
    throw std::invalid_argument("channel_attention: feature map has " + std::to_string(v.channels()) +
                                " channels, parameters expect " + std::to_string(p.channels));
  const int C = p.channels;
  const int K = p.hidden();
  const int n = v.plane();
  ChannelForward f;
  f.pooled.assign(C, 0.0);
  for (int c = 0; c < C; ++c) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += v.data()[static_cast<std::size_t>(c) * n + j];
    f.pooled[c] = sum / n;
  }
  f.z1.assign(K, 0.0);
  f.hidden.assign(K, 0.0);
  for (int k = 0; k < K; ++k) {
    double z = p.b1[k];
    for (int c = 0; c < C; ++c) z += p.w1[static_cast<std::size_t>(k) * C + c] * f.pooled[c];
    f.z1[k] = z;
    f.hidden[k] = z > 0.0 ? z : 0.0;
  }
  f.gate.assign(C, 0.0);
  for (int c = 0; c < C; ++c) {
    double z = p.b2[c];
    for (int k = 0; k < K; ++k) z += p.w2[static_cast<std::size_t>(c) * K + k] * f.hidden[k];
    f.gate[c] = sigmoid(z);
  }
  return f;
}

FeatureMap scale_channels(const FeatureMap& v, const std::vector<double>& gate) {
  FeatureMap out = v;
  const int n = v.plane();
  for (int c = 0; c < v.channels(); ++c)
    for (int j = 0; j < n; ++j) out.data()[static_cast<std::size_t>(c) * n + j] *= gate[c];
  return out;
}

FeatureMap scale_positions(const FeatureMap& v, const std::vector<double>& gate) {
  FeatureMap out = v;
  const int n = v.plane();
  for (int c = 0; c < v.channels(); ++c)
    for (int j = 0; j < n; ++j) out.data()[static_cast<std::size_t>(c) * n + j] *= gate[j];
  return out;
}

FeatureMap relu(FeatureMap v) {
  for (double& x : v.data()) x = x > 0.0 ? x : 0.0;
  return v;
}

/// Gradients of a 3x3 convolution; returns d(input).
FeatureMap conv3x3_backward(const FeatureMap& in, const Conv3x3& conv, const FeatureMap& dout,
                            ConvGradients& grads) {
  const int C = conv.channels;
  const int H = in.height();
  const int W = in.width();
  FeatureMap din(C, H, W);
  grads.weight.assign(conv.weight.size(), 0.0);
  grads.bias.assign(conv.bias.size(), 0.0);
  for (int o = 0; o < C; ++o) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double g = dout(o, y, x);
        if (g == 0.0) continue;
        grads.bias[o] += g;
        for (int i = 0; i < C; ++i) {
          const std::size_t base = (static_cast<std::size_t>(o) * C + i) * 9;
          for (int ky = 0; ky < 3; ++ky) {
            const int yy = y + ky - 1;
            if (yy < 0 || yy >= H) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int xx = x + kx - 1;
              if (xx < 0 || xx >= W) continue;
              grads.weight[base + ky * 3 + kx] += in(i, yy, xx) * g;
              din(i, yy, xx) += conv.weight[base + ky * 3 + kx] * g;
            }
          }
        }
      }
    }
  }
  return din;
}

}  // namespace

FeatureMap::FeatureMap(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 1 || height < 1 || width < 1)
    throw std::invalid_argument("feature map dimensions must be >= 1");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

void GaParams::validate() const {
  if (channels < 1 || reduction < 1 || channels % reduction != 0)
    throw std::invalid_argument("reduction " + std::to_string(reduction) + " must divide channel count " +
                                std::to_string(channels));
  const std::size_t C = channels;
  const std::size_t K = hidden();
  if (w1.size() != K * C || b1.size() != K || w2.size() != C * K || b2.size() != C)
    throw std::invalid_argument("channel attention weights have inconsistent shapes");
}

GaParams GaParams::zeros(int channels, int reduction) {
  GaParams p;
  p.channels = channels;
  p.reduction = reduction;
  if (channels < 1 || reduction < 1 || channels % reduction != 0) p.validate();
  const std::size_t C = channels;
  const std::size_t K = p.hidden();
  p.w1.assign(K * C, 0.0);
  p.b1.assign(K, 0.0);
  p.w2.assign(C * K, 0.0);
  p.b2.assign(C, 0.0);
  return p;
}

GaParams GaParams::random(int channels, int reduction, std::mt19937_64& rng, double scale) {
  GaParams p = zeros(channels, reduction);
  fill_uniform(p.w1, rng, scale);
  fill_uniform(p.b1, rng, scale);
  fill_uniform(p.w2, rng, scale);
  fill_uniform(p.b2, rng, scale);
  return p;
}

void Conv3x3::validate() const {
  const std::size_t C = channels;
  if (channels < 1 || weight.size() != C * C * 9 || bias.size() != C)
    throw std::invalid_argument("3x3 convolution weights have inconsistent shapes");
}

Conv3x3 Conv3x3::zeros(int channels) {
  Conv3x3 c;
  c.channels = channels;
  c.weight.assign(static_cast<std::size_t>(channels) * channels * 9, 0.0);
  c.bias.assign(channels, 0.0);
  return c;
}

Conv3x3 Conv3x3::random(int channels, std::mt19937_64& rng, double scale) {
  Conv3x3 c = zeros(channels);
  fill_uniform(c.weight, rng, scale);
  fill_uniform(c.bias, rng, scale);
  return c;
}

ResidualBranchParams ResidualBranchParams::zeros(int channels) {
  return {Conv3x3::zeros(channels), Conv3x3::zeros(channels)};
}

ResidualBranchParams ResidualBranchParams::random(int channels, std::mt19937_64& rng, double scale) {
  ResidualBranchParams b;
  b.conv1 = Conv3x3::random(channels, rng, scale);
  b.conv2 = Conv3x3::random(channels, rng, scale);
  return b;
}

std::vector<double> channel_weights(const FeatureMap& v, const GaParams& p) {
  return channel_forward(v, p).gate;
}

FeatureMap channel_attention(const FeatureMap& v, const GaParams& p) {
  return scale_channels(v, channel_weights(v, p));
}

std::vector<double> spatial_weights(const FeatureMap& v) {
  const int n = v.plane();
  std::vector<double> gate(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double sum = 0.0;
    for (int c = 0; c < v.channels(); ++c) sum += v.data()[static_cast<std::size_t>(c) * n + j];
    gate[j] = sigmoid(sum / v.channels());
  }
  return gate;
}

FeatureMap spatial_attention(const FeatureMap& v) { return scale_positions(v, spatial_weights(v)); }

FeatureMap ga_module(const FeatureMap& v, const GaParams& p) {
  return spatial_attention(channel_attention(v, p));
}

FeatureMap conv3x3(const FeatureMap& v, const Conv3x3& conv) {
  conv.validate();
  if (v.channels() != conv.channels) throw std::invalid_argument("conv3x3: channel mismatch");
  const int C = conv.channels;
  const int H = v.height();
  const int W = v.width();
  FeatureMap out(C, H, W);
  for (int o = 0; o < C; ++o) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        double acc = conv.bias[o];
        for (int i = 0; i < C; ++i) {
          const std::size_t base = (static_cast<std::size_t>(o) * C + i) * 9;
          for (int ky = 0; ky < 3; ++ky) {
            const int yy = y + ky - 1;
            if (yy < 0 || yy >= H) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int xx = x + kx - 1;
              if (xx < 0 || xx >= W) continue;
              acc += conv.weight[base + ky * 3 + kx] * v(i, yy, xx);
            }
          }
        }
        out(o, y, x) = acc;
      }
    }
  }
  return out;
}

FeatureMap residual_branch(const FeatureMap& v, const ResidualBranchParams& branch) {
  return conv3x3(relu(conv3x3(v, branch.conv1)), branch.conv2);
}

FeatureMap ga_resblock(const FeatureMap& v, const GaParams& p, const ResidualBranchParams& branch) {
  FeatureMap sum = ga_module(residual_branch(v, branch), p);
  require_shape(v, sum, "ga_resblock");
  for (std::size_t i = 0; i < sum.data().size(); ++i) sum.data()[i] += v.data()[i];
  return relu(std::move(sum));
}

GaBackward ga_backward(const FeatureMap& v, const GaParams& p, const FeatureMap& dy) {
  require_shape(v, dy, "ga_backward");
  const ChannelForward cf = channel_forward(v, p);
  const int C = p.channels;
  const int K = p.hidden();
  const int n = v.plane();
  const FeatureMap x = scale_channels(v, cf.gate);
  const std::vector<double> r = spatial_weights(x);

  // spatial attention: y = x * R, R = sigmoid(mean_c x)
  FeatureMap dx(C, v.height(), v.width());
  for (int j = 0; j < n; ++j) {
    double dR = 0.0;
    for (int c = 0; c < C; ++c) {
      const std::size_t i = static_cast<std::size_t>(c) * n + j;
      dR += dy.data()[i] * x.data()[i];
    }
    const double dm = dR * r[j] * (1.0 - r[j]) / C;
    for (int c = 0; c < C; ++c) {
      const std::size_t i = static_cast<std::size_t>(c) * n + j;
      dx.data()[i] = dy.data()[i] * r[j] + dm;
    }
  }

  // channel attention: x = v * s, s = sigmoid(W2 relu(W1 U + b1) + b2)
  GaBackward out{FeatureMap(C, v.height(), v.width()), {}};
  auto& g = out.dparams;
  g.w1.assign(p.w1.size(), 0.0);
  g.b1.assign(p.b1.size(), 0.0);
  g.w2.assign(p.w2.size(), 0.0);
  g.b2.assign(p.b2.size(), 0.0);

  std::vector<double> dz2(C, 0.0);
  for (int c = 0; c < C; ++c) {
    double ds = 0.0;
    for (int j = 0; j < n; ++j) {
      const std::size_t i = static_cast<std::size_t>(c) * n + j;
      ds += dx.data()[i] * v.data()[i];
      out.dv.data()[i] = dx.data()[i] * cf.gate[c];
    }
    dz2[c] = ds * cf.gate[c] * (1.0 - cf.gate[c]);
    g.b2[c] = dz2[c];
    for (int k = 0; k < K; ++k) g.w2[static_cast<std::size_t>(c) * K + k] = dz2[c] * cf.hidden[k];
  }
  std::vector<double> dpooled(C, 0.0);
  for (int k = 0; k < K; ++k) {
    double dh = 0.0;
    for (int c = 0; c < C; ++c) dh += p.w2[static_cast<std::size_t>(c) * K + k] * dz2[c];
    const double dz1 = cf.z1[k] > 0.0 ? dh : 0.0;
    g.b1[k] = dz1;
    for (int c = 0; c < C; ++c) {
      g.w1[static_cast<std::size_t>(k) * C + c] = dz1 * cf.pooled[c];
      dpooled[c] += p.w1[static_cast<std::size_t>(k) * C + c] * dz1;
    }
  }
  for (int c = 0; c < C; ++c)
    for (int j = 0; j < n; ++j) out.dv.data()[static_cast<std::size_t>(c) * n + j] += dpooled[c] / n;
  return out;
}

ResBlockBackward ga_resblock_backward(const FeatureMap& v, const GaParams& p,
                                      const ResidualBranchParams& branch, const FeatureMap& dy) {
  require_shape(v, dy, "ga_resblock_backward");
  const FeatureMap a1 = conv3x3(v, branch.conv1);
  const FeatureMap h1 = relu(a1);
  const FeatureMap b = conv3x3(h1, branch.conv2);
  const FeatureMap gated = ga_module(b, p);

  FeatureMap dsum = dy;
  for (std::size_t i = 0; i < dsum.data().size(); ++i)
    if (v.data()[i] + gated.data()[i] <= 0.0) dsum.data()[i] = 0.0;

  ResBlockBackward out;
  GaBackward ga = ga_backward(b, p, dsum);
  out.dga = std::move(ga.dparams);
  FeatureMap dh1 = conv3x3_backward(h1, branch.conv2, ga.dv, out.dconv2);
  for (std::size_t i = 0; i < dh1.data().size(); ++i)
    if (a1.data()[i] <= 0.0) dh1.data()[i] = 0.0;
  FeatureMap dv = conv3x3_backward(v, branch.conv1, dh1, out.dconv1);
  for (std::size_t i = 0; i < dv.data().size(); ++i) dv.data()[i] += dsum.data()[i];
  out.dv = std::move(dv);
  return out;
}

}  // namespace roadkit::ga
