#pragma once

#include <Eigen/Dense>

namespace hsr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using ComplexMatrix = Eigen::MatrixXcd;

// Grayscale raster, row-major so that flattening matches pixel order.
using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexImage =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-major flattening of an image into a column vector.
inline Vector flatten(const Image& img) {
  return Eigen::Map<const Vector>(img.data(), img.size());
}

}  // namespace hsr
