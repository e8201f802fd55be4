#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "hsr/gabor.hpp"
#include "hsr/types.hpp"

namespace hsr {

enum class Activation { kSigmoid, kTanh };

std::string_view activation_name(Activation act);
Activation parse_activation(std::string_view name);

struct OrthogonalWeights {
  Matrix a;  // input_dim x hidden_dim, orthonormal columns
  Vector b;  // hidden_dim, unit Euclidean norm
};

// Orthonormalizes a seeded Gaussian matrix. Column j depends only on the first
// j + 1 Gaussian columns, so models of increasing width share a prefix of a.
OrthogonalWeights generate_orthogonal_weights(int input_dim, int hidden_dim, std::uint64_t seed);

// ELM autoencoder with orthogonal random hidden layer. beta is the ridge
// solution of H beta ~ X and doubles as the learned compression map.
struct ProjectionModel {
  Matrix a;
  Vector b;
  Matrix beta;  // hidden_dim x input_dim
  double C = 100.0;
  Activation activation = Activation::kSigmoid;
  std::uint64_t seed = 0;

  int input_dim() const { return static_cast<int>(a.rows()); }
  int hidden_dim() const { return static_cast<int>(a.cols()); }

  // Stable identifier derived from the stored parameters.
  std::uint64_t id() const;

  // Row-wise g(x a + b) for the rows of X (N x input_dim).
  Matrix hidden(const Matrix& X) const;

  // Hidden-layer reconstruction of the rows of X.
  Matrix reconstruct(const Matrix& X) const { return hidden(X) * beta; }

  // x -> beta x, the length-hidden_dim reduced representation.
  Vector project(const Vector& x) const;

  // Projects every column of a (input_dim x n) matrix.
  Matrix project_columns(const Matrix& columns) const;
};

struct ReducedFeature {
  Vector values;
  std::uint64_t model_id = 0;
};

// X holds one sample per row.
ProjectionModel train_elm_ae(const Matrix& X, int hidden_dim, double C, std::uint64_t seed,
                             Activation activation = Activation::kSigmoid);

ReducedFeature project(const FeatureVector& x, const ProjectionModel& model);

// Text container; values use the shortest round-trip representation so a
// save/load cycle is bit-exact.
void save_model(const ProjectionModel& model, std::ostream& out);
ProjectionModel load_model(std::istream& in);

}  // namespace hsr
