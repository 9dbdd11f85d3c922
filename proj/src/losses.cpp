#include "roadkit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace roadkit::loss {

namespace {

void require_same(const ProbMap& pred, const ProbMap& gt, const char* what) {
  if (!pred.same_shape(gt)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace

ProbMap::ProbMap(int classes, int width, int height, double fill)
    : classes_(classes), width_(width), height_(height) {
  if (classes < 1 || width < 1 || height < 1) throw std::invalid_argument("ProbMap dimensions must be >= 1");
  data_.assign(static_cast<std::size_t>(classes) * width * height, fill);
}

ProbMap one_hot(std::span<const int> labels, int classes, int width, int height) {
  ProbMap out(classes, width, height);
  if (labels.size() != static_cast<std::size_t>(out.pixels()))
    throw std::invalid_argument("one_hot: label count does not match width * height");
  for (int i = 0; i < out.pixels(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) throw std::invalid_argument("one_hot: label out of range");
    out.at(labels[i], i) = 1.0;
  }
  return out;
}

LossResult soft_iou_loss(const ProbMap& pred, const ProbMap& gt) {
  require_same(pred, gt, "soft_iou_loss");
  const int C = pred.classes();
  const int N = pred.pixels();
  LossResult r;
  r.gradient.assign(pred.data().size(), 0.0);
  double ratio_sum = 0.0;
  for (int c = 0; c < C; ++c) {
    double inter = 0.0, uni = 0.0;
    for (int i = 0; i < N; ++i) {
      const double y = pred.at(c, i);
      const double g = gt.at(c, i);
      inter += g * y;
      uni += g + y - g * y;
    }
    if (uni <= 0.0) {
      ratio_sum += 1.0;
      continue;
    }
    ratio_sum += inter / uni;
    const double scale = -1.0 / (C * uni * uni);
    for (int i = 0; i < N; ++i) {
      const double g = gt.at(c, i);
      r.gradient[static_cast<std::size_t>(c) * N + i] = scale * (g * uni - inter * (1.0 - g));
    }
  }
  r.value = -ratio_sum / C;
  return r;
}

ClassWeights inverse_boundary_weights(std::span<const double> freqs) {
  ClassWeights w;
  for (double p : freqs) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("class frequency must lie in [0, 1]");
    w.weights.push_back(1.0 / std::log(1.02 + p));
  }
  return w;
}

std::vector<double> class_frequencies(const ProbMap& gt) {
  std::vector<double> f(gt.classes(), 0.0);
  for (int c = 0; c < gt.classes(); ++c) {
    double s = 0.0;
    for (int i = 0; i < gt.pixels(); ++i) s += gt.at(c, i);
    f[c] = s / gt.pixels();
  }
  return f;
}

LossResult balanced_ce_loss(const ProbMap& pred, const ProbMap& gt, const ClassWeights& w) {
  require_same(pred, gt, "balanced_ce_loss");
  const int C = pred.classes();
  const int N = pred.pixels();
  if (w.weights.size() != static_cast<std::size_t>(C))
    throw std::invalid_argument("balanced_ce_loss: expected " + std::to_string(C) + " class weights");
  double wsum = 0.0;
  for (double v : w.weights) {
    if (!(v > 0.0)) throw std::invalid_argument("class weights must be > 0");
    wsum += v;
  }
  const double norm = 1.0 / (static_cast<double>(N) * wsum);
  constexpr double lo = kProbabilityClamp;
  constexpr double hi = 1.0 - kProbabilityClamp;

  LossResult r;
  r.gradient.assign(pred.data().size(), 0.0);
  double total = 0.0;
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < N; ++i) {
      const double g = gt.at(c, i);
      if (g == 0.0) continue;
      const double y = pred.at(c, i);
      const double yc = std::clamp(y, lo, hi);
      total += g * w.weights[c] * std::log(yc);
      if (y > lo && y < hi) r.gradient[static_cast<std::size_t>(c) * N + i] = -norm * g * w.weights[c] / y;
    }
  }
  r.value = -norm * total;
  return r;
}

double total_loss(std::span<const double> seg_losses, std::span<const double> conn_losses) {
  if (seg_losses.size() != conn_losses.size())
    throw std::invalid_argument("total_loss: segmentation and connectivity loss counts differ");
  double s = 0.0;
  for (std::size_t i = 0; i < seg_losses.size(); ++i) s += seg_losses[i] + conn_losses[i];
  return s;
}

std::vector<double> finite_diff_gradient(const ScalarFunction& f, std::span<const double> x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("max_relative_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace roadkit::loss
