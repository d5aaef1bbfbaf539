#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace oceanbo::fno {

using Complex = std::complex<double>;

// (batch, channels, height, width)
struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

// Dense row-major (n, c, h, w) tensor. Each (n, c) plane is contiguous.
template <class T>
class BasicTensor4 {
 public:
  BasicTensor4() = default;
  explicit BasicTensor4(Shape4 shape, T fill = T{}) : shape_(shape), data_(shape.numel(), fill) {}

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  std::size_t offset(int n, int c, int h = 0, int w = 0) const {
    return ((static_cast<std::size_t>(n) * static_cast<std::size_t>(shape_.c) + static_cast<std::size_t>(c)) *
                static_cast<std::size_t>(shape_.h) +
            static_cast<std::size_t>(h)) *
               static_cast<std::size_t>(shape_.w) +
           static_cast<std::size_t>(w);
  }
  T& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }

  std::span<T> plane(int n, int c) { return {data_.data() + offset(n, c), shape_.plane()}; }
  std::span<const T> plane(int n, int c) const { return {data_.data() + offset(n, c), shape_.plane()}; }

 private:
  Shape4 shape_;
  std::vector<T> data_;
};

using Tensor4 = BasicTensor4<double>;
using ComplexTensor4 = BasicTensor4<Complex>;

bool all_finite(const Tensor4& t);

}  // namespace oceanbo::fno
