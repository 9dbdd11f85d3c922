#pragma once

#include <functional>
#include <span>
#include <vector>

namespace roadkit::loss {

/// Class-major probability volume: data[(c * height + y) * width + x].
class ProbMap {
 public:
  ProbMap() = default;
  ProbMap(int classes, int width, int height, double fill = 0.0);

  int classes() const { return classes_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int pixels() const { return width_ * height_; }

  double& at(int c, int pixel) { return data_[static_cast<std::size_t>(c) * pixels() + pixel]; }
  double at(int c, int pixel) const { return data_[static_cast<std::size_t>(c) * pixels() + pixel]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const ProbMap& o) const {
    return classes_ == o.classes_ && width_ == o.width_ && height_ == o.height_;
  }

 private:
  int classes_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// One-hot encoding of per-pixel class labels.
ProbMap one_hot(std::span<const int> labels, int classes, int width, int height);

struct ClassWeights {
  std::vector<double> weights;
};

struct LossResult {
  double value = 0.0;
  std::vector<double> gradient;  // d value / d pred, same layout as ProbMap
};

/// Negative mean per-class soft IoU, each class scored as
/// sum(gt * pred) / sum(gt + pred - gt * pred). A class with an empty union
/// scores 1.
LossResult soft_iou_loss(const ProbMap& pred, const ProbMap& gt);

/// w_c = 1 / ln(1.02 + p_c) for class frequencies p_c in [0, 1].
ClassWeights inverse_boundary_weights(std::span<const double> freqs);

/// Fraction of pixels whose ground-truth class is c, for each class.
std::vector<double> class_frequencies(const ProbMap& gt);

inline constexpr double kProbabilityClamp = 1e-7;

/// -(1 / (N * sum w)) * sum_pixels sum_c gt_c * w_c * log(pred_c), with pred
/// clamped to [1e-7, 1 - 1e-7]; N is the pixel count.
LossResult balanced_ce_loss(const ProbMap& pred, const ProbMap& gt, const ClassWeights& w);

/// Sum of paired segmentation and connectivity losses.
double total_loss(std::span<const double> seg_losses, std::span<const double> conn_losses);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
std::vector<double> finite_diff_gradient(const ScalarFunction& f, std::span<const double> x, double eps);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6);

}  // namespace roadkit::loss
