#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hsr/elm_ae.hpp"
#include "hsr/error.hpp"

namespace {

using hsr::Matrix;
using hsr::Vector;

Matrix random_matrix(int r, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  return Matrix::NullaryExpr(r, c, [&] { return nd(rng); });
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

TEST(OrthogonalWeights, ColumnsOrthonormalAndBiasUnit) {
  for (auto [in, hid] : {std::pair{10, 10}, std::pair{50, 8}, std::pair{3, 3}}) {
    const auto w = hsr::generate_orthogonal_weights(in, hid, 7);
    const Matrix gram = w.a.transpose() * w.a;
    EXPECT_LE((gram - Matrix::Identity(hid, hid)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(w.b.norm(), 1.0, 1e-14);
  }
}

TEST(OrthogonalWeights, SquareCaseIsRotation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto w = hsr::generate_orthogonal_weights(3, 3, seed);
    EXPECT_NEAR(std::abs(w.a.determinant()), 1.0, 1e-12);
  }
}

TEST(OrthogonalWeights, WiderModelsSharePrefix) {
  const auto small = hsr::generate_orthogonal_weights(40, 4, 3);
  const auto large = hsr::generate_orthogonal_weights(40, 12, 3);
  EXPECT_LE((large.a.leftCols(4) - small.a).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OrthogonalWeights, RejectsHiddenWiderThanInput) {
  EXPECT_THROW(hsr::generate_orthogonal_weights(4, 5, 1), hsr::ParameterError);
  EXPECT_THROW(hsr::generate_orthogonal_weights(4, 0, 1), hsr::ParameterError);
}

TEST(TrainElmAe, BetaSolvesTheRidgeNormalEquations) {
  const Matrix X = random_matrix(30, 12, 1);
  const double C = 10.0;
  const auto m = hsr::train_elm_ae(X, 6, C, 2);
  const Matrix H = m.hidden(X);
  const Matrix lhs = (Matrix::Identity(6, 6) / C + H.transpose() * H) * m.beta;
  EXPECT_LE((lhs - H.transpose() * X).norm() / (H.transpose() * X).norm(), 1e-10);
}

TEST(TrainElmAe, HiddenLayerMatchesDefinition) {
  const Matrix X = random_matrix(5, 8, 3);
  const auto m = hsr::train_elm_ae(X, 4, 1.0, 4);
  const Matrix H = m.hidden(X);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j)
      EXPECT_NEAR(H(i, j), sigmoid(X.row(i).dot(m.a.col(j)) + m.b[j]), 1e-14);
  const auto t = hsr::train_elm_ae(X, 4, 1.0, 4, hsr::Activation::kTanh);
  EXPECT_NEAR(t.hidden(X)(2, 1), std::tanh(X.row(2).dot(t.a.col(1)) + t.b[1]), 1e-14);
}

TEST(TrainElmAe, DuplicatedRowsMatchWeightedOracle) {
  // Duplicating every sample doubles H^T H and H^T X.
  const Matrix X = random_matrix(10, 7, 5);
  Matrix XX(20, 7);
  XX << X, X;
  const double C = 3.0;
  const auto m = hsr::train_elm_ae(XX, 5, C, 6);
  const Matrix H = m.hidden(X);
  const Matrix oracle = (Matrix::Identity(5, 5) / C + 2.0 * H.transpose() * H)
                            .ldlt()
                            .solve(2.0 * H.transpose() * X);
  EXPECT_LE((m.beta - oracle).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TrainElmAe, LargeCFitsSingleSample) {
  const Matrix X = random_matrix(1, 6, 8);
  const auto m = hsr::train_elm_ae(X, 3, 1e9, 9);
  EXPECT_LE((m.reconstruct(X) - X).norm(), 1e-4);
}

TEST(TrainElmAe, RejectsBadInputs) {
  const Matrix X = random_matrix(6, 4, 1);
  EXPECT_THROW(hsr::train_elm_ae(X, 5, 1.0, 1), hsr::ParameterError);
  EXPECT_THROW(hsr::train_elm_ae(X, 2, 0.0, 1), hsr::ParameterError);
  EXPECT_THROW(hsr::train_elm_ae(X, 2, -1.0, 1), hsr::ParameterError);
  Matrix bad = X;
  bad(2, 1) = std::nan("");
  EXPECT_THROW(hsr::train_elm_ae(bad, 2, 1.0, 1), hsr::DataError);
  EXPECT_THROW(hsr::train_elm_ae(Matrix(0, 4), 2, 1.0, 1), hsr::Error);
}

TEST(TrainElmAe, DeterministicForSeed) {
  const Matrix X = random_matrix(20, 10, 2);
  const auto a = hsr::train_elm_ae(X, 5, 100.0, 42);
  const auto b = hsr::train_elm_ae(X, 5, 100.0, 42);
  EXPECT_EQ(a.beta, b.beta);
  EXPECT_EQ(a.id(), b.id());
  const auto c = hsr::train_elm_ae(X, 5, 100.0, 43);
  EXPECT_NE(a.id(), c.id());
}

TEST(Project, LinearAndMatchesDenseProduct) {
  const Matrix X = random_matrix(25, 16, 3);
  const auto m = hsr::train_elm_ae(X, 6, 50.0, 4);
  const Vector u = random_matrix(16, 1, 5).col(0), v = random_matrix(16, 1, 6).col(0);
  EXPECT_LE((m.project(2.0 * u - 3.0 * v) - (2.0 * m.project(u) - 3.0 * m.project(v))).norm(), 1e-12);
  EXPECT_EQ(m.project(Vector::Zero(16)).norm(), 0.0);
  EXPECT_LE((m.project(u) - m.beta * u).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix cols = random_matrix(16, 4, 7);
  EXPECT_LE((m.project_columns(cols) - m.beta * cols).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(m.project(Vector::Zero(15)), hsr::DimensionError);
}

TEST(Project, FeatureVectorCarriesModelId) {
  const Matrix X = random_matrix(10, 8, 1);
  const auto m = hsr::train_elm_ae(X, 3, 1.0, 2);
  hsr::FeatureVector fv;
  fv.values = X.row(0).transpose();
  const auto r = hsr::project(fv, m);
  EXPECT_EQ(r.model_id, m.id());
  EXPECT_EQ(r.values, m.project(fv.values));
}

TEST(Project, ReconstructionErrorFallsWithWidth) {
  const Matrix X = random_matrix(60, 3, 1) * random_matrix(3, 40, 2);
  double prev = std::numeric_limits<double>::infinity();
  for (int h : {2, 4, 8, 16}) {
    const double err = (hsr::train_elm_ae(X, h, 1e4, 9).reconstruct(X) - X).norm();
    EXPECT_LE(err, prev * (1.0 + 1e-9));
    prev = err;
  }
}

TEST(ModelIo, RoundTripIsBitExact) {
  const Matrix X = random_matrix(12, 9, 4);
  const auto m = hsr::train_elm_ae(X, 4, 7.5, 11, hsr::Activation::kTanh);
  std::stringstream ss;
  hsr::save_model(m, ss);
  const auto l = hsr::load_model(ss);
  EXPECT_EQ(l.a, m.a);
  EXPECT_EQ(l.b, m.b);
  EXPECT_EQ(l.beta, m.beta);
  EXPECT_EQ(l.C, m.C);
  EXPECT_EQ(l.activation, m.activation);
  EXPECT_EQ(l.seed, m.seed);
  EXPECT_EQ(l.id(), m.id());
}

TEST(ModelIo, RejectsGarbage) {
  std::stringstream ss("not a model");
  EXPECT_THROW(hsr::load_model(ss), hsr::IoError);
}

TEST(ActivationNames, RoundTrip) {
  for (auto a : {hsr::Activation::kSigmoid, hsr::Activation::kTanh})
    EXPECT_EQ(hsr::parse_activation(hsr::activation_name(a)), a);
  EXPECT_THROW(hsr::parse_activation("relu"), hsr::ParameterError);
}

}  // namespace
