#pragma once

#include <vector>

#include <Eigen/Core>

#include "oceanbo/fno/tensor.hpp"

namespace oceanbo::fno {

using RealMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Largest mode count whose corner blocks fit the half spectrum.
int max_modes(int height, int width);

// Precomputed DFT twiddles for a set of retained frequency rows and the
// first `cols` columns of the half spectrum of an H x W real field.
//
// analyze() evaluates X[r, k] = sum_{h,w} x[h,w] exp(-2 pi i (f_r h / H + k w / W)).
// synthesize() evaluates y[h,w] = sum_{r,k} s_k Re(Y[r,k] exp(+2 pi i (...))) with
// s_k = c_k / (H W) for the inverse (c_k = 1 on the DC and Nyquist columns,
// 2 elsewhere), or s_k = 1 for the adjoint of analyze().
class SpectralBasis {
 public:
  enum class Weighting { kInverse, kAdjoint };

  // Every row in natural order and all W/2 + 1 columns.
  static SpectralBasis full(int height, int width);
  // Rows 0..m-1 then -1..-(m-1) (stored as H-1..H-m+1), columns 0..m-1.
  // Negative rows that alias a positive row are kept as zero rows, so the
  // layout is always (2m-1) x m.
  static SpectralBasis truncated(int height, int width, int modes);

  int height() const { return height_; }
  int width() const { return width_; }
  int rows() const { return static_cast<int>(row_freq_.size()); }
  int cols() const { return cols_; }
  // Frequency row index in [0, H) for each stored row, -1 if unused.
  const std::vector<int>& row_frequencies() const { return row_freq_; }

  // x: `planes` contiguous H x W planes; out: planes x rows x cols.
  void analyze(const double* x, int planes, Complex* out) const;
  void synthesize(const Complex* spectrum, int planes, double* y, Weighting weighting) const;
  // Multiplies column k by c_k / (H W): maps dL/dy to dL/dY for synthesize(kInverse).
  void apply_inverse_weights(Complex* spectrum, int planes) const;

 private:
  SpectralBasis(int height, int width, std::vector<int> row_freq, int cols);

  int height_ = 0;
  int width_ = 0;
  int cols_ = 0;
  std::vector<int> row_freq_;
  std::vector<double> inverse_weight_;
  RealMatrix cos_w_, sin_w_;           // W x cols
  RealMatrix cos_h_, sin_h_;           // rows x H
  RealMatrix inv_cos_w_, inv_sin_w_;   // cols x W, scaled by inverse weights
  RealMatrix adj_cos_w_, adj_sin_w_;   // cols x W, unit weights
};

// Unnormalized forward real 2-D DFT of every (n, c) plane: (n, c, H, W/2+1).
ComplexTensor4 rfft2(const Tensor4& x);
// Inverse of rfft2, scaled by 1/(H W); `width` is the real-space width.
Tensor4 irfft2(const ComplexTensor4& spectrum, int width);

// Cached quantities of one spectral_conv call needed for its gradient.
struct SpectralCache {
  int batch = 0;
  // Retained input spectrum, layout [mode][batch][in].
  std::vector<Complex> modes_in;
};

// y = irfft2(R . rfft2(x)) restricted to the retained corner modes.
// `weights` points to rows*cols*in*out complex values.
Tensor4 spectral_conv(const SpectralBasis& basis, const Tensor4& x, const Complex* weights, int out_channels,
                      SpectralCache* cache = nullptr);

// Accumulates dL/dR (same layout as the weights) and returns dL/dx.
Tensor4 spectral_conv_backward(const SpectralBasis& basis, const SpectralCache& cache, const Complex* weights,
                               int in_channels, const Tensor4& grad_out, Complex* grad_weights);

}  // namespace oceanbo::fno
