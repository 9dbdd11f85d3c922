#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace roadkit {

/// Row-major 2-D grid. The tag keeps masks, connectivity maps and real-valued
/// fields from being mixed up even when they share a cell type.
template <typename T, typename Tag>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("grid dimensions must be positive, got " +
                                  std::to_string(width) + "x" + std::to_string(height));
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  /// Out-of-range reads return `outside`.
  T get_or(int x, int y, T outside) const { return contains(x, y) ? (*this)(x, y) : outside; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct MaskTag;
struct ConnectivityTag;
struct FieldTag;

/// Binary road (1) / background (0) labels.
using RasterMask = Grid<std::uint8_t, MaskTag>;
/// Per-pixel branch count classes 0..5.
using ConnectivityMap = Grid<std::uint8_t, ConnectivityTag>;
/// Real-valued grid: distance maps, heatmaps, probabilities.
using ScalarField = Grid<double, FieldTag>;

inline constexpr int kMaxConnectivityClass = 5;

template <typename G>
void require_same_shape(const G& a, const G& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                " vs " + std::to_string(b.width()) + "x" +
                                std::to_string(b.height()) + ")");
}

}  // namespace roadkit
