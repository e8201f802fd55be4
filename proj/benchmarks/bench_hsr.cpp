// Timings for the pipeline stages plus the occlusion robustness radius.

#include <benchmark/benchmark.h>

#include <random>

#include "hsr/classifier.hpp"
#include "hsr/dictionary_learning.hpp"
#include "hsr/elm_ae.hpp"
#include "hsr/gabor.hpp"
#include "hsr/sparse_coding.hpp"

namespace {

using hsr::Matrix;
using hsr::Vector;

Matrix gaussian(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  return Matrix::NullaryExpr(rows, cols, [&] { return nd(rng); });
}

Matrix unit_columns(int rows, int cols, std::uint64_t seed) {
  Matrix m = gaussian(rows, cols, seed);
  m.colwise().normalize();
  return m;
}

// 2000 samples of dimension 4000 reduced to 256, the compression speed setting.
void BM_ElmAeTrainProject(benchmark::State& state) {
  const Matrix X = gaussian(2000, 4000, 909);
  for (auto _ : state) {
    const hsr::ProjectionModel m = hsr::train_elm_ae(X, 256, 100.0, 9);
    benchmark::DoNotOptimize(m.project_columns(X.transpose()).data());
  }
}
BENCHMARK(BM_ElmAeTrainProject)->Unit(benchmark::kSecond)->Iterations(1);

// Exact PCA of the same data through the centered Gram eigendecomposition.
void BM_PcaBaseline(benchmark::State& state) {
  const Matrix X = gaussian(2000, 4000, 909);
  for (auto _ : state) {
    const Matrix Xc = X.rowwise() - X.colwise().mean();
    Matrix G = Matrix::Zero(Xc.rows(), Xc.rows());
    G.selfadjointView<Eigen::Lower>().rankUpdate(Xc);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(G.selfadjointView<Eigen::Lower>());
    const Matrix U = eig.eigenvectors().rightCols(256);
    const Vector s = eig.eigenvalues().tail(256).cwiseMax(1e-300).cwiseSqrt();
    const Matrix reduced = Xc * ((Xc.transpose() * U) * s.cwiseInverse().asDiagonal());
    benchmark::DoNotOptimize(reduced.data());
  }
}
BENCHMARK(BM_PcaBaseline)->Unit(benchmark::kSecond)->Iterations(1);

void BM_GaborFeatures(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  hsr::GaborParams params;
  params.kernel_size = std::min(33, size - (size % 2 == 0 ? 1 : 0));
  const hsr::GaborBank bank(params);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const hsr::Image img = hsr::Image::NullaryExpr(size, size, [&] { return u(rng); });
  for (auto _ : state) benchmark::DoNotOptimize(hsr::gabor_features(img, bank).values.data());
  state.counters["feature_dim"] = static_cast<double>(40 * size * size);
}
BENCHMARK(BM_GaborFeatures)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

// Coding against 100 training atoms plus 16 occlusion atoms in 256 dimensions.
void solver_bench(benchmark::State& state, hsr::Penalty norm, hsr::StepRule rule) {
  const hsr::GramCache cache(unit_columns(256, 116, 5));
  const Vector y = (cache.dictionary().leftCols(3) * Vector::Constant(3, 0.5) +
                    0.05 * gaussian(256, 1, 6).col(0))
                       .normalized();
  hsr::SolverSchedule s;
  s.step_rule = rule;
  double nnz = 0.0, iters = 0.0;
  for (auto _ : state) {
    const hsr::SparseCode c = hsr::solve(cache, y, 0.02, norm, s);
    nnz = static_cast<double>(c.nonzeros());
    iters = c.iterations;
    benchmark::DoNotOptimize(c.omega.data());
  }
  state.counters["nnz"] = nnz;
  state.counters["iterations"] = iters;
}
void BM_SolveL1CoordinateDescent(benchmark::State& s) {
  solver_bench(s, hsr::Penalty::kL1, hsr::StepRule::kCoordinateDescent);
}
void BM_SolveL1ProximalGradient(benchmark::State& s) {
  solver_bench(s, hsr::Penalty::kL1, hsr::StepRule::kProximalGradient);
}
void BM_SolveLHalf(benchmark::State& s) {
  solver_bench(s, hsr::Penalty::kLHalf, hsr::StepRule::kCoordinateDescent);
}
BENCHMARK(BM_SolveL1CoordinateDescent)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SolveL1ProximalGradient)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SolveLHalf)->Unit(benchmark::kMicrosecond);

void BM_LearnOcclusionDictionary(benchmark::State& state) {
  const Matrix Z = gaussian(256, 400, 7);
  const hsr::SolverSchedule s;
  double residual = 0.0;
  for (auto _ : state) {
    const auto d = hsr::learn_compressed_dictionary(Z, static_cast<int>(state.range(0)), 0.05, s, 1);
    residual = d.training_residual;
    benchmark::DoNotOptimize(d.gamma.data());
  }
  state.counters["residual"] = residual;
}
BENCHMARK(BM_LearnOcclusionDictionary)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

// Largest ||v|| for which y = clean_atom + Gamma v still gets the atom's class
// on every trial, scanned geometrically from 0.05 up to 1e4 (saturated = 1
// when no trial ever failed). The argument is a model mismatch in percent: the
// corruption uses Gamma plus that much relative Gaussian perturbation, while
// the classifier keeps Gamma.
void BM_OcclusionRobustnessRadius(benchmark::State& state) {
  const int dim = 64, classes = 10, per_class = 5, occ = 8;
  const Matrix train = unit_columns(dim, classes * per_class, 11);
  std::vector<int> labels;
  for (int k = 0; k < classes; ++k)
    for (int i = 0; i < per_class; ++i) labels.push_back(k);
  const Matrix gamma = unit_columns(dim, occ, 12);
  const double mismatch = static_cast<double>(state.range(0)) / 100.0;
  Matrix corruptor = gamma + mismatch * unit_columns(dim, occ, 14);
  corruptor.colwise().normalize();
  const hsr::SparseClassifier clf(
      hsr::build_global_dictionary(train, labels, hsr::OcclusionKind::kLearned, &gamma), 0.001,
      hsr::Penalty::kLHalf, hsr::SolverSchedule{});
  const int trials = 20;
  const double r_max = 1e4;
  double radius = 0.0;
  for (auto _ : state) {
    radius = r_max;
    std::mt19937_64 rng(13);
    for (int t = 0; t < trials; ++t) {
      const int atom = static_cast<int>(rng() % train.cols());
      const Vector dir = gaussian(occ, 1, 100 + t).col(0).normalized();
      double last_ok = 0.0;
      for (double r = 0.05; r <= radius; r *= 1.25) {
        const Vector y = train.col(atom) + corruptor * (r * dir);
        if (clf.classify(y).identity != labels[static_cast<std::size_t>(atom)]) {
          radius = last_ok;
          break;
        }
        last_ok = r;
      }
    }
  }
  state.counters["radius"] = radius;
  state.counters["saturated"] = radius == r_max ? 1.0 : 0.0;
}
BENCHMARK(BM_OcclusionRobustnessRadius)->Arg(0)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
