#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "roomlayout/errors.hpp"

namespace roomlayout {

// Row-major raster. Pixel (col, row) has its center at u = col, v = row.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      fail(ErrorCode::InvalidArgument, "negative raster dimensions");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int col, int row) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }
  int col_of(std::size_t i) const noexcept { return static_cast<int>(i % width_); }
  int row_of(std::size_t i) const noexcept { return static_cast<int>(i / width_); }
  bool contains(int col, int row) const noexcept {
    return col >= 0 && row >= 0 && col < width_ && row < height_;
  }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(int col, int row) { return data_[index(col, row)]; }
  const T& at(int col, int row) const { return data_[index(col, row)]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool same_shape(int width, int height) const noexcept {
    return width_ == width && height_ == height;
  }
  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return same_shape(other.width(), other.height());
  }

  bool operator==(const Grid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Grid plus a per-pixel validity mask.
template <typename T>
class MaskedGrid : public Grid<T> {
 public:
  MaskedGrid() = default;
  MaskedGrid(int width, int height, T fill = T{}, bool valid = true)
      : Grid<T>(width, height, fill), mask_(Grid<std::uint8_t>(width, height, valid ? 1 : 0)) {}

  bool valid(std::size_t i) const noexcept { return mask_[i] != 0; }
  bool valid(int col, int row) const noexcept { return mask_.at(col, row) != 0; }
  void set_valid(std::size_t i, bool v) noexcept { mask_[i] = v ? 1 : 0; }

  std::size_t valid_count() const noexcept {
    std::size_t n = 0;
    for (auto m : mask_.values()) n += m != 0;
    return n;
  }

  const Grid<std::uint8_t>& mask() const noexcept { return mask_; }

  bool operator==(const MaskedGrid&) const = default;

 private:
  Grid<std::uint8_t> mask_;
};

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const std::string& what) {
  if (!a.same_shape(b)) {
    fail(ErrorCode::ShapeMismatch,
         what + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
             std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

}  // namespace roomlayout
