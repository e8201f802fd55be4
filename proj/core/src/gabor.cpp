#include "hsr/gabor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "hsr/error.hpp"

namespace hsr {

namespace {

using Complex = std::complex<double>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError("invalid GaborParams: " + what);
}

// Builds the 1D factors of one axis for wave-vector component k_axis.
void axis_factors(int half, double wave_number, double sigma, double k_axis,
                  Eigen::VectorXcd& wave, Vector& envelope) {
  const int n = 2 * half + 1;
  wave.resize(n);
  envelope.resize(n);
  const double decay = wave_number * wave_number / (2.0 * sigma * sigma);
  for (int i = 0; i < n; ++i) {
    const double t = i - half;
    const double g = std::exp(-decay * t * t);
    envelope[i] = g;
    wave[i] = g * Complex(std::cos(k_axis * t), std::sin(k_axis * t));
  }
}

}  // namespace

void GaborParams::validate() const {
  require(num_scales >= 1, "num_scales must be >= 1");
  require(num_orientations >= 1, "num_orientations must be >= 1");
  require(k_max > 0.0 && std::isfinite(k_max), "k_max must be > 0");
  require(f > 1.0 && std::isfinite(f), "f must be > 1");
  require(sigma > 0.0 && std::isfinite(sigma), "sigma must be > 0");
  require(kernel_size >= 3 && kernel_size % 2 == 1, "kernel_size must be odd and >= 3");
  require(downsample >= 1, "downsample must be >= 1");
}

GaborBank::GaborBank(const GaborParams& params) : params_(params) {
  params_.validate();
  const int half = params_.kernel_size / 2;
  const double sigma = params_.sigma;
  kernels_.reserve(static_cast<std::size_t>(params_.num_bands()));

  for (int nu = 0; nu < params_.num_scales; ++nu) {
    const double k = params_.k_max / std::pow(params_.f, nu);
    const double prefactor = k * k / (sigma * sigma);
    for (int mu = 0; mu < params_.num_orientations; ++mu) {
      GaborKernel kern;
      kern.scale = nu;
      kern.orientation = mu;
      kern.wave_number = k;
      kern.phi = std::numbers::pi * mu / params_.num_orientations;

      axis_factors(half, k, sigma, k * std::cos(kern.phi), kern.wave_x, kern.envelope_x);
      axis_factors(half, k, sigma, k * std::sin(kern.phi), kern.wave_y, kern.envelope_y);
      kern.wave_y *= prefactor;
      kern.envelope_y *= prefactor;

      // The offset that makes the windowed kernel sum to zero. On an
      // unbounded window this is exp(-sigma^2 / 2).
      const Complex wave_sum = kern.wave_x.sum() * kern.wave_y.sum();
      const double envelope_sum = kern.envelope_x.sum() * kern.envelope_y.sum();
      kern.dc_offset = wave_sum / envelope_sum;

      const int n = params_.kernel_size;
      kern.values.resize(n, n);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          kern.values(r, c) = kern.wave_y[r] * kern.wave_x[c] -
                              kern.dc_offset * (kern.envelope_y[r] * kern.envelope_x[c]);
        }
      }
      kernels_.push_back(std::move(kern));
    }
  }
}

const GaborKernel& GaborBank::kernel(int scale, int orientation) const {
  if (scale < 0 || scale >= params_.num_scales || orientation < 0 ||
      orientation >= params_.num_orientations) {
    throw ParameterError("kernel index out of range");
  }
  return kernels_[static_cast<std::size_t>(scale * params_.num_orientations + orientation)];
}

GaborBank build_gabor_bank(const GaborParams& params) { return GaborBank(params); }

namespace {

template <typename T>
ComplexImage convolve_rows(const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& src,
                           const Eigen::Ref<const Eigen::VectorXcd>& taps) {
  const int rows = static_cast<int>(src.rows());
  const int cols = static_cast<int>(src.cols());
  const int half = static_cast<int>(taps.size()) / 2;
  ComplexImage out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Complex acc(0.0, 0.0);
      for (int t = -half; t <= half; ++t) {
        const int cc = std::clamp(c - t, 0, cols - 1);
        acc += Complex(src(r, cc)) * taps[t + half];
      }
      out(r, c) = acc;
    }
  }
  return out;
}

ComplexImage convolve_cols(const ComplexImage& src, const Eigen::Ref<const Eigen::VectorXcd>& taps) {
  const int rows = static_cast<int>(src.rows());
  const int cols = static_cast<int>(src.cols());
  const int half = static_cast<int>(taps.size()) / 2;
  ComplexImage out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Complex acc(0.0, 0.0);
      for (int t = -half; t <= half; ++t) {
        const int rr = std::clamp(r - t, 0, rows - 1);
        acc += src(rr, c) * taps[t + half];
      }
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

ResponseStack convolve_bank(const Image& image, const GaborBank& bank) {
  const int size = bank.params().kernel_size;
  if (image.rows() < size || image.cols() < size) {
    std::ostringstream msg;
    msg << "image " << image.rows() << "x" << image.cols() << " is smaller than the "
        << size << "x" << size << " Gabor kernel";
    throw DimensionError(msg.str());
  }
  if (!image.allFinite()) throw DataError("image contains non-finite pixels");

  ResponseStack stack;
  stack.rows = static_cast<int>(image.rows());
  stack.cols = static_cast<int>(image.cols());
  stack.bands.reserve(bank.size());

  // The envelope pass depends only on the scale, so share it across
  // orientations.
  int cached_scale = -1;
  ComplexImage envelope_response;
  for (const GaborKernel& kern : bank.kernels()) {
    if (kern.scale != cached_scale) {
      const Eigen::VectorXcd ex = kern.envelope_x.cast<Complex>();
      const Eigen::VectorXcd ey = kern.envelope_y.cast<Complex>();
      envelope_response = convolve_cols(convolve_rows(image, ex), ey);
      cached_scale = kern.scale;
    }
    ComplexImage band = convolve_cols(convolve_rows(image, kern.wave_x), kern.wave_y);
    band -= kern.dc_offset * envelope_response;
    stack.bands.push_back(std::move(band));
  }
  return stack;
}

std::size_t augmented_length(int rows, int cols, const GaborParams& params) {
  const auto s = static_cast<std::size_t>(params.downsample);
  const std::size_t r = (static_cast<std::size_t>(rows) + s - 1) / s;
  const std::size_t c = (static_cast<std::size_t>(cols) + s - 1) / s;
  return static_cast<std::size_t>(params.num_bands()) * r * c;
}

FeatureVector augment_features(const ResponseStack& responses, const GaborParams& params) {
  params.validate();
  if (static_cast<int>(responses.bands.size()) != params.num_bands()) {
    throw DimensionError("response stack has " + std::to_string(responses.bands.size()) +
                         " bands, parameters describe " + std::to_string(params.num_bands()));
  }
  const int step = params.downsample;
  const int out_rows = (responses.rows + step - 1) / step;
  const int out_cols = (responses.cols + step - 1) / step;
  const Eigen::Index band_len = static_cast<Eigen::Index>(out_rows) * out_cols;

  FeatureVector fv;
  fv.stage = FeatureStage::kGaborAugmented;
  fv.source_rows = responses.rows;
  fv.source_cols = responses.cols;
  fv.values.resize(band_len * params.num_bands());
  fv.band_offsets.reserve(responses.bands.size());

  Eigen::Index offset = 0;
  for (const ComplexImage& band : responses.bands) {
    if (band.rows() != responses.rows || band.cols() != responses.cols) {
      throw DimensionError("response band size differs from stack size");
    }
    auto seg = fv.values.segment(offset, band_len);
    Eigen::Index k = 0;
    for (int r = 0; r < responses.rows; r += step) {
      for (int c = 0; c < responses.cols; c += step) seg[k++] = std::abs(band(r, c));
    }
    const double mean = seg.mean();
    seg.array() -= mean;
    const double var = seg.squaredNorm() / static_cast<double>(band_len);
    if (var <= 1e-24 * std::max(1.0, mean * mean)) {
      seg.setZero();
      ++fv.degenerate_bands;
    } else {
      seg /= std::sqrt(var);
    }
    fv.band_offsets.push_back(static_cast<std::size_t>(offset));
    offset += band_len;
  }
  return fv;
}

FeatureVector gabor_features(const Image& image, const GaborBank& bank) {
  return augment_features(convolve_bank(image, bank), bank.params());
}

}  // namespace hsr
