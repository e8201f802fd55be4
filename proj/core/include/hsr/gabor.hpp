#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "hsr/types.hpp"

namespace hsr {

// Parameters of a bank of complex Gabor wavelets indexed by scale nu and
// orientation mu. Defaults are the usual face-recognition setting
// (5 scales, 8 orientations, k_max = pi/2, f = sqrt(2), sigma = pi).
struct GaborParams {
  int num_scales = 5;
  int num_orientations = 8;
  double k_max = std::numbers::pi / 2.0;
  double f = std::numbers::sqrt2;
  double sigma = std::numbers::pi;
  int kernel_size = 33;
  int downsample = 1;

  // Throws ParameterError naming the first violated invariant.
  void validate() const;

  int num_bands() const { return num_scales * num_orientations; }
};

// One complex kernel psi_{mu,nu}. Entries are stored row-major over offsets
// (dy, dx) in [-h, h]^2 with h = kernel_size / 2, so values(h + dy, h + dx).
//
// The kernel is the sum of two separable terms:
//   values(dy, dx) = wave_y[dy] * wave_x[dx] - dc_offset * envelope_y[dy] * envelope_x[dx]
// which convolve_bank exploits.
struct GaborKernel {
  int scale = 0;
  int orientation = 0;
  double wave_number = 0.0;  // k_nu = k_max / f^nu
  double phi = 0.0;          // pi * mu / num_orientations
  std::complex<double> dc_offset;
  ComplexImage values;
  Eigen::VectorXcd wave_x;
  Eigen::VectorXcd wave_y;
  Vector envelope_x;
  Vector envelope_y;
};

class GaborBank {
 public:
  explicit GaborBank(const GaborParams& params);

  const GaborParams& params() const { return params_; }
  std::span<const GaborKernel> kernels() const { return kernels_; }
  std::size_t size() const { return kernels_.size(); }

  // Kernels are ordered nu-major, mu-minor.
  const GaborKernel& kernel(int scale, int orientation) const;

 private:
  GaborParams params_;
  std::vector<GaborKernel> kernels_;
};

GaborBank build_gabor_bank(const GaborParams& params);

// Complex responses of one image against every kernel, in bank order.
struct ResponseStack {
  std::vector<ComplexImage> bands;
  int rows = 0;
  int cols = 0;
};

// "Same"-size discrete convolution of the image with each kernel. Samples
// outside the image take the value of the nearest edge pixel.
ResponseStack convolve_bank(const Image& image, const GaborBank& bank);

enum class FeatureStage { kRawImage, kGaborAugmented, kReduced };

struct FeatureVector {
  Vector values;
  FeatureStage stage = FeatureStage::kRawImage;
  int source_rows = 0;
  int source_cols = 0;
  std::vector<std::size_t> band_offsets;  // only for kGaborAugmented
  int degenerate_bands = 0;               // zero-variance bands replaced by zeros
};

// Magnitude, stride-downsample, per-band standardization, then concatenation
// in bank order.
FeatureVector augment_features(const ResponseStack& responses, const GaborParams& params);

// convolve_bank followed by augment_features.
FeatureVector gabor_features(const Image& image, const GaborBank& bank);

std::size_t augmented_length(int rows, int cols, const GaborParams& params);

}  // namespace hsr
