#include "hsr/elm_ae.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

#include "hsr/error.hpp"
#include "hsr/serialization.hpp"

namespace hsr {

std::string_view activation_name(Activation act) {
  switch (act) {
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
  }
  return "sigmoid";
}

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid" || name == "sig") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  throw ParameterError("unknown activation '" + std::string(name) + "'");
}

OrthogonalWeights generate_orthogonal_weights(int input_dim, int hidden_dim, std::uint64_t seed) {
  if (hidden_dim < 1 || input_dim < 1) throw ParameterError("dimensions must be >= 1");
  if (hidden_dim > input_dim) {
    throw ParameterError("hidden_dim (" + std::to_string(hidden_dim) + ") exceeds input_dim (" +
                         std::to_string(input_dim) +
                         "); a compressed representation needs fewer hidden nodes");
  }
  std::mt19937_64 weight_rng(seed);
  std::mt19937_64 bias_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix gaussian(input_dim, hidden_dim);
  for (Eigen::Index j = 0; j < gaussian.cols(); ++j)
    for (Eigen::Index i = 0; i < gaussian.rows(); ++i) gaussian(i, j) = normal(weight_rng);

  Eigen::HouseholderQR<Matrix> qr(gaussian);
  OrthogonalWeights w;
  w.a = qr.householderQ() * Matrix::Identity(input_dim, hidden_dim);
  // Fix the sign ambiguity so column j matches Gram-Schmidt on the input.
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < hidden_dim; ++j) {
    if (r(j, j) < 0.0) w.a.col(j) *= -1.0;
  }

  w.b.resize(hidden_dim);
  for (Eigen::Index j = 0; j < hidden_dim; ++j) w.b[j] = normal(bias_rng);
  const double norm = w.b.norm();
  if (norm == 0.0) throw DataError("degenerate bias draw");
  w.b /= norm;
  return w;
}

std::uint64_t ProjectionModel::id() const {
  // FNV-1a over the shape, seed and regularizer.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(input_dim()));
  mix(static_cast<std::uint64_t>(hidden_dim()));
  mix(seed);
  std::uint64_t cbits = 0;
  static_assert(sizeof(cbits) == sizeof(C));
  std::memcpy(&cbits, &C, sizeof(C));
  mix(cbits);
  mix(static_cast<std::uint64_t>(activation));
  return h;
}

Matrix ProjectionModel::hidden(const Matrix& X) const {
  if (X.cols() != a.rows()) {
    throw DimensionError("sample width " + std::to_string(X.cols()) + " does not match input_dim " +
                         std::to_string(a.rows()));
  }
  Matrix pre = X * a;
  pre.rowwise() += b.transpose();
  switch (activation) {
    case Activation::kSigmoid: return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
    case Activation::kTanh: return pre.array().tanh().matrix();
  }
  return pre;
}

Vector ProjectionModel::project(const Vector& x) const {
  if (x.size() != beta.cols()) {
    throw DimensionError("feature length " + std::to_string(x.size()) +
                         " does not match model input_dim " + std::to_string(beta.cols()));
  }
  return beta * x;
}

Matrix ProjectionModel::project_columns(const Matrix& columns) const {
  if (columns.rows() != beta.cols()) {
    throw DimensionError("feature length " + std::to_string(columns.rows()) +
                         " does not match model input_dim " + std::to_string(beta.cols()));
  }
  return beta * columns;
}

ProjectionModel train_elm_ae(const Matrix& X, int hidden_dim, double C, std::uint64_t seed,
                             Activation activation) {
  if (X.rows() < 1) throw DataError("ELM-AE needs at least one sample");
  if (!(C > 0.0) || !std::isfinite(C)) throw ParameterError("ridge regularizer C must be > 0");
  if (!X.allFinite()) throw DataError("training matrix contains non-finite entries");

  ProjectionModel model;
  OrthogonalWeights w = generate_orthogonal_weights(static_cast<int>(X.cols()), hidden_dim, seed);
  model.a = std::move(w.a);
  model.b = std::move(w.b);
  model.C = C;
  model.activation = activation;
  model.seed = seed;

  const Matrix H = model.hidden(X);
  Matrix gram = H.transpose() * H;
  gram.diagonal().array() += 1.0 / C;
  model.beta = gram.llt().solve(H.transpose() * X);
  return model;
}

ReducedFeature project(const FeatureVector& x, const ProjectionModel& model) {
  return ReducedFeature{model.project(x.values), model.id()};
}

void save_model(const ProjectionModel& model, std::ostream& out) {
  out << "hsr-elm-ae 1\n";
  out << "input_dim " << model.input_dim() << "\n";
  out << "hidden_dim " << model.hidden_dim() << "\n";
  out << "seed " << model.seed << "\n";
  out << "activation " << activation_name(model.activation) << "\n";
  out << "C ";
  write_scalar(out, model.C);
  out << "\n";
  write_matrix(out, "a", model.a);
  write_matrix(out, "b", model.b);
  write_matrix(out, "beta", model.beta);
  if (!out) throw IoError("failed writing ELM-AE model");
}

ProjectionModel load_model(std::istream& in) {
  expect_header(in, "hsr-elm-ae", 1);
  ProjectionModel model;
  const long input_dim = read_keyed<long>(in, "input_dim");
  const long hidden_dim = read_keyed<long>(in, "hidden_dim");
  model.seed = read_keyed<std::uint64_t>(in, "seed");
  model.activation = parse_activation(read_keyed<std::string>(in, "activation"));
  model.C = read_keyed_scalar(in, "C");
  model.a = read_matrix(in, "a");
  model.b = read_matrix(in, "b");
  model.beta = read_matrix(in, "beta");
  if (model.a.rows() != input_dim || model.a.cols() != hidden_dim ||
      model.b.size() != hidden_dim || model.beta.rows() != hidden_dim ||
      model.beta.cols() != input_dim) {
    throw IoError("ELM-AE model blocks have inconsistent shapes");
  }
  return model;
}

}  // namespace hsr
