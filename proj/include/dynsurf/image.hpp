#pragma once

#include <cstdint>
#include <vector>

namespace dynsurf {

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb8& a, const Rgb8& b) {
    return a.r == b.r && a.g == b.g && a.b == b.b;
  }
};

/// Dense row-major image container. Index order is (x, y) with y*width+x
/// storage, matching the pixel loops throughout the kernels.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height) : w_(width), h_(height), data_(static_cast<std::size_t>(width) * height) {}
  Image(int width, int height, const T& fill)
      : w_(width), h_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return w_; }
  int height() const { return h_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool in_bounds(int x, int y) const { return x >= 0 && x < w_ && y >= 0 && y < h_; }

  T& operator()(int x, int y) { return data_[static_cast<std::size_t>(y) * w_ + x]; }
  const T& operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * w_ + x]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * w_; }
  const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * w_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Image& a, const Image& b) {
    return a.w_ == b.w_ && a.h_ == b.h_ && a.data_ == b.data_;
  }

 private:
  int w_ = 0;
  int h_ = 0;
  std::vector<T> data_;
};

using Mask = Image<std::uint8_t>;
using GrayF = Image<float>;
using ColorImage = Image<Rgb8>;
using LabelImage = Image<std::int32_t>;

inline std::size_t count_nonzero(const Mask& m) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) n += m[i] != 0;
  return n;
}

inline Mask mask_union(const Mask& a, const Mask& b) {
  Mask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] || b[i]) ? 1 : 0;
  return out;
}

}  // namespace dynsurf
