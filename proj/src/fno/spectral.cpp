#include "oceanbo/fno/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oceanbo/common/error.hpp"

namespace oceanbo::fno {

namespace {

using ConstRealMap = Eigen::Map<const RealMatrix>;
using RealMap = Eigen::Map<RealMatrix>;

double column_factor(int k, int width) {
  if (k == 0) return 1.0;
  if (width % 2 == 0 && k == width / 2) return 1.0;
  return 2.0;
}

}  // namespace

int max_modes(int height, int width) { return std::min(height, width) / 2 + 1; }

SpectralBasis::SpectralBasis(int height, int width, std::vector<int> row_freq, int cols)
    : height_(height), width_(width), cols_(cols), row_freq_(std::move(row_freq)) {
  if (height < 2 || width < 2) throw ShapeError("spectral transforms need H, W >= 2");
  const int rows = static_cast<int>(row_freq_.size());
  const double two_pi = 2.0 * std::numbers::pi;

  cos_w_.resize(width, cols);
  sin_w_.resize(width, cols);
  for (int w = 0; w < width; ++w) {
    for (int k = 0; k < cols; ++k) {
      // Reduce the phase index first to keep the twiddles exact-ish at large sizes.
      const double phase = two_pi * static_cast<double>((static_cast<long>(k) * w) % width) / width;
      cos_w_(w, k) = std::cos(phase);
      sin_w_(w, k) = std::sin(phase);
    }
  }
  cos_h_ = RealMatrix::Zero(rows, height);
  sin_h_ = RealMatrix::Zero(rows, height);
  for (int r = 0; r < rows; ++r) {
    const int f = row_freq_[static_cast<std::size_t>(r)];
    if (f < 0) continue;
    for (int h = 0; h < height; ++h) {
      const double phase = two_pi * static_cast<double>((static_cast<long>(f) * h) % height) / height;
      cos_h_(r, h) = std::cos(phase);
      sin_h_(r, h) = std::sin(phase);
    }
  }
  inverse_weight_.resize(static_cast<std::size_t>(cols));
  inv_cos_w_.resize(cols, width);
  inv_sin_w_.resize(cols, width);
  for (int k = 0; k < cols; ++k) {
    const double s = column_factor(k, width) / (static_cast<double>(height) * width);
    inverse_weight_[static_cast<std::size_t>(k)] = s;
    inv_cos_w_.row(k) = s * cos_w_.col(k).transpose();
    inv_sin_w_.row(k) = s * sin_w_.col(k).transpose();
  }
  adj_cos_w_ = cos_w_.transpose();
  adj_sin_w_ = sin_w_.transpose();
}

SpectralBasis SpectralBasis::full(int height, int width) {
  std::vector<int> rows(static_cast<std::size_t>(height));
  for (int h = 0; h < height; ++h) rows[static_cast<std::size_t>(h)] = h;
  return SpectralBasis(height, width, std::move(rows), width / 2 + 1);
}

SpectralBasis SpectralBasis::truncated(int height, int width, int modes) {
  if (modes < 1 || modes > max_modes(height, width)) {
    throw ShapeError("num_modes " + std::to_string(modes) + " does not fit a " + std::to_string(height) + "x" +
                     std::to_string(width) + " grid (max " + std::to_string(max_modes(height, width)) + ")");
  }
  std::vector<int> rows;
  for (int r = 0; r < modes; ++r) rows.push_back(r);
  for (int j = 1; j < modes; ++j) {
    const int f = height - j;
    rows.push_back(f <= modes - 1 ? -1 : f);
  }
  return SpectralBasis(height, width, std::move(rows), modes);
}

void SpectralBasis::analyze(const double* x, int planes, Complex* out) const {
  const int rows = this->rows();
  const Eigen::Index wide = static_cast<Eigen::Index>(planes) * cols_;
  ConstRealMap in(x, static_cast<Eigen::Index>(planes) * height_, width_);
  const RealMatrix a_re = in * cos_w_;
  const RealMatrix a_im = -(in * sin_w_);
  // Side by side as H x (planes * cols) so the row transform is one product.
  RealMatrix t_re(height_, wide), t_im(height_, wide);
  for (int p = 0; p < planes; ++p) {
    t_re.middleCols(static_cast<Eigen::Index>(p) * cols_, cols_) =
        a_re.middleRows(static_cast<Eigen::Index>(p) * height_, height_);
    t_im.middleCols(static_cast<Eigen::Index>(p) * cols_, cols_) =
        a_im.middleRows(static_cast<Eigen::Index>(p) * height_, height_);
  }
  RealMatrix x_re(rows, wide), x_im(rows, wide);
  x_re.noalias() = cos_h_ * t_re;
  x_re.noalias() += sin_h_ * t_im;
  x_im.noalias() = cos_h_ * t_im;
  x_im.noalias() -= sin_h_ * t_re;
  for (int p = 0; p < planes; ++p) {
    Complex* dst = out + static_cast<std::size_t>(p) * static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols_);
    const Eigen::Index c0 = static_cast<Eigen::Index>(p) * cols_;
    for (int r = 0; r < rows; ++r) {
      for (int k = 0; k < cols_; ++k) dst[r * cols_ + k] = Complex(x_re(r, c0 + k), x_im(r, c0 + k));
    }
  }
}

void SpectralBasis::synthesize(const Complex* spectrum, int planes, double* y, Weighting weighting) const {
  const int rows = this->rows();
  const Eigen::Index wide = static_cast<Eigen::Index>(planes) * cols_;
  RealMatrix y_re(rows, wide), y_im(rows, wide);
  for (int p = 0; p < planes; ++p) {
    const Complex* src =
        spectrum + static_cast<std::size_t>(p) * static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols_);
    const Eigen::Index c0 = static_cast<Eigen::Index>(p) * cols_;
    for (int r = 0; r < rows; ++r) {
      for (int k = 0; k < cols_; ++k) {
        y_re(r, c0 + k) = src[r * cols_ + k].real();
        y_im(r, c0 + k) = src[r * cols_ + k].imag();
      }
    }
  }
  RealMatrix t_re(height_, wide), t_im(height_, wide);
  t_re.noalias() = cos_h_.transpose() * y_re;
  t_re.noalias() -= sin_h_.transpose() * y_im;
  t_im.noalias() = cos_h_.transpose() * y_im;
  t_im.noalias() += sin_h_.transpose() * y_re;
  RealMatrix b_re(static_cast<Eigen::Index>(planes) * height_, cols_);
  RealMatrix b_im(static_cast<Eigen::Index>(planes) * height_, cols_);
  for (int p = 0; p < planes; ++p) {
    b_re.middleRows(static_cast<Eigen::Index>(p) * height_, height_) =
        t_re.middleCols(static_cast<Eigen::Index>(p) * cols_, cols_);
    b_im.middleRows(static_cast<Eigen::Index>(p) * height_, height_) =
        t_im.middleCols(static_cast<Eigen::Index>(p) * cols_, cols_);
  }
  RealMap out(y, static_cast<Eigen::Index>(planes) * height_, width_);
  if (weighting == Weighting::kInverse) {
    out.noalias() = b_re * inv_cos_w_;
    out.noalias() -= b_im * inv_sin_w_;
  } else {
    out.noalias() = b_re * adj_cos_w_;
    out.noalias() -= b_im * adj_sin_w_;
  }
}

void SpectralBasis::apply_inverse_weights(Complex* spectrum, int planes) const {
  const std::size_t per_plane = static_cast<std::size_t>(rows()) * static_cast<std::size_t>(cols_);
  for (std::size_t i = 0; i < per_plane * static_cast<std::size_t>(planes); ++i) {
    spectrum[i] *= inverse_weight_[i % static_cast<std::size_t>(cols_)];
  }
}

ComplexTensor4 rfft2(const Tensor4& x) {
  const auto& s = x.shape();
  const auto basis = SpectralBasis::full(s.h, s.w);
  ComplexTensor4 out(Shape4{s.n, s.c, basis.rows(), basis.cols()});
  basis.analyze(x.data(), s.n * s.c, out.data());
  return out;
}

Tensor4 irfft2(const ComplexTensor4& spectrum, int width) {
  const auto& s = spectrum.shape();
  if (s.w != width / 2 + 1) throw ShapeError("irfft2: spectrum width does not match real width");
  const auto basis = SpectralBasis::full(s.h, width);
  Tensor4 out(Shape4{s.n, s.c, s.h, width});
  basis.synthesize(spectrum.data(), s.n * s.c, out.data(), SpectralBasis::Weighting::kInverse);
  return out;
}

Tensor4 spectral_conv(const SpectralBasis& basis, const Tensor4& x, const Complex* weights, int out_channels,
                      SpectralCache* cache) {
  const auto& s = x.shape();
  if (s.h != basis.height() || s.w != basis.width()) {
    throw ShapeError("spectral_conv: input " + s.str() + " does not match the basis grid");
  }
  const int batch = s.n;
  const int cin = s.c;
  const int cout = out_channels;
  const std::size_t modes = static_cast<std::size_t>(basis.rows()) * static_cast<std::size_t>(basis.cols());

  std::vector<Complex> spec(static_cast<std::size_t>(batch) * static_cast<std::size_t>(cin) * modes);
  basis.analyze(x.data(), batch * cin, spec.data());

  std::vector<Complex> by_mode(spec.size());
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < cin; ++i) {
      const Complex* src = spec.data() + (static_cast<std::size_t>(b) * cin + i) * modes;
      for (std::size_t k = 0; k < modes; ++k) by_mode[(k * batch + b) * cin + i] = src[k];
    }
  }

  std::vector<Complex> out_spec(static_cast<std::size_t>(batch) * static_cast<std::size_t>(cout) * modes);
  std::vector<double> acc(2 * static_cast<std::size_t>(cout));
  for (std::size_t k = 0; k < modes; ++k) {
    const auto* wk = reinterpret_cast<const double*>(weights + k * static_cast<std::size_t>(cin) * cout);
    const auto* xk = reinterpret_cast<const double*>(by_mode.data() + k * batch * cin);
    for (int b = 0; b < batch; ++b) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int i = 0; i < cin; ++i) {
        const double xr = xk[2 * (b * cin + i)];
        const double xi = xk[2 * (b * cin + i) + 1];
        const double* r = wk + 2 * static_cast<std::size_t>(i) * cout;
        for (int o = 0; o < cout; ++o) {
          acc[2 * o] += xr * r[2 * o] - xi * r[2 * o + 1];
          acc[2 * o + 1] += xr * r[2 * o + 1] + xi * r[2 * o];
        }
      }
      for (int o = 0; o < cout; ++o) {
        out_spec[(static_cast<std::size_t>(b) * cout + o) * modes + k] = Complex(acc[2 * o], acc[2 * o + 1]);
      }
    }
  }

  Tensor4 out(Shape4{batch, cout, s.h, s.w});
  basis.synthesize(out_spec.data(), batch * cout, out.data(), SpectralBasis::Weighting::kInverse);
  if (cache) {
    cache->batch = batch;
    cache->modes_in = std::move(by_mode);
  }
  return out;
}

Tensor4 spectral_conv_backward(const SpectralBasis& basis, const SpectralCache& cache, const Complex* weights,
                               int in_channels, const Tensor4& grad_out, Complex* grad_weights) {
  const auto& s = grad_out.shape();
  const int batch = s.n;
  const int cout = s.c;
  const int cin = in_channels;
  if (batch != cache.batch) throw ShapeError("spectral_conv_backward: batch does not match the cache");
  const std::size_t modes = static_cast<std::size_t>(basis.rows()) * static_cast<std::size_t>(basis.cols());

  std::vector<Complex> gspec(static_cast<std::size_t>(batch) * static_cast<std::size_t>(cout) * modes);
  basis.analyze(grad_out.data(), batch * cout, gspec.data());
  basis.apply_inverse_weights(gspec.data(), batch * cout);

  std::vector<double> gy(2 * static_cast<std::size_t>(batch) * cout);
  std::vector<double> wt(2 * static_cast<std::size_t>(cin) * cout);
  std::vector<double> acc(2 * static_cast<std::size_t>(cin));
  std::vector<Complex> gx_spec(static_cast<std::size_t>(batch) * static_cast<std::size_t>(cin) * modes);
  for (std::size_t k = 0; k < modes; ++k) {
    for (int b = 0; b < batch; ++b) {
      for (int o = 0; o < cout; ++o) {
        const Complex g = gspec[(static_cast<std::size_t>(b) * cout + o) * modes + k];
        gy[2 * (b * cout + o)] = g.real();
        gy[2 * (b * cout + o) + 1] = g.imag();
      }
    }
    const std::size_t offset = k * static_cast<std::size_t>(cin) * cout;
    const auto* wk = reinterpret_cast<const double*>(weights + offset);
    auto* gw = reinterpret_cast<double*>(grad_weights + offset);
    const auto* xk = reinterpret_cast<const double*>(cache.modes_in.data() + k * batch * cin);
    for (int i = 0; i < cin; ++i) {
      for (int o = 0; o < cout; ++o) {
        wt[2 * (o * cin + i)] = wk[2 * (i * cout + o)];
        wt[2 * (o * cin + i) + 1] = wk[2 * (i * cout + o) + 1];
      }
    }
    for (int b = 0; b < batch; ++b) {
      const double* g = gy.data() + 2 * static_cast<std::size_t>(b) * cout;
      for (int i = 0; i < cin; ++i) {
        const double xr = xk[2 * (b * cin + i)];
        const double xi = xk[2 * (b * cin + i) + 1];
        double* gr = gw + 2 * static_cast<std::size_t>(i) * cout;
        for (int o = 0; o < cout; ++o) {
          gr[2 * o] += xr * g[2 * o] + xi * g[2 * o + 1];
          gr[2 * o + 1] += xr * g[2 * o + 1] - xi * g[2 * o];
        }
      }
      // gx = gy * conj(R)^T, accumulated over outputs against the transposed weights
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int o = 0; o < cout; ++o) {
        const double gr_ = g[2 * o];
        const double gi_ = g[2 * o + 1];
        const double* rt = wt.data() + 2 * static_cast<std::size_t>(o) * cin;
        for (int i = 0; i < cin; ++i) {
          acc[2 * i] += gr_ * rt[2 * i] + gi_ * rt[2 * i + 1];
          acc[2 * i + 1] += gi_ * rt[2 * i] - gr_ * rt[2 * i + 1];
        }
      }
      for (int i = 0; i < cin; ++i) {
        gx_spec[(static_cast<std::size_t>(b) * cin + i) * modes + k] = Complex(acc[2 * i], acc[2 * i + 1]);
      }
    }
  }

  Tensor4 grad_in(Shape4{batch, cin, s.h, s.w});
  basis.synthesize(gx_spec.data(), batch * cin, grad_in.data(), SpectralBasis::Weighting::kAdjoint);
  return grad_in;
}

}  // namespace oceanbo::fno
