// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Each check builds its own reference values independently of the
// code under test where a reference exists.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstring>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsr/classifier.hpp"
#include "hsr/dataset.hpp"
#include "hsr/dictionary_learning.hpp"
#include "hsr/elm_ae.hpp"
#include "hsr/experiment.hpp"
#include "hsr/gabor.hpp"
#include "hsr/random.hpp"
#include "hsr/sparse_coding.hpp"

namespace {

using hsr::Matrix;
using hsr::Vector;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string join(std::initializer_list<std::string> parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ", ";
    out += p;
  }
  return out;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1D objective (y - d w)^2 + lambda * R(w), minimized over a uniform grid.
double grid_argmin(double d, double y, double lambda, bool half, double lo, double hi, double step) {
  const long n = std::lround((hi - lo) / step);
  double best_w = 0.0;
  double best = y * y;  // w = 0
  for (long i = 0; i <= n; ++i) {
    const double w = lo + static_cast<double>(i) * step;
    const double r = y - d * w;
    const double pen = half ? std::sqrt(std::abs(w)) : std::abs(w);
    const double f = r * r + lambda * pen;
    if (f < best) {
      best = f;
      best_w = w;
    }
  }
  return best_w;
}

Outcome criterion_1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ud(0.8, 1.25), uy(-1.5, 1.5), ul(0.02, 0.8);
  hsr::SolverSchedule sched;
  sched.optimality_tol = 1e-12;
  // The reweighting converges linearly near a nonzero minimizer; the default
  // four rounds stop well short of the 1e-4 agreement the grid oracle checks.
  sched.outer_reweight_iters = 200;
  double worst_l1 = 0.0, worst_half = 0.0;
  for (int p = 0; p < 50; ++p) {
    const double d = ud(rng), y = uy(rng), lambda = ul(rng);
    Matrix D(1, 1);
    D(0, 0) = d;
    Vector yv(1);
    yv[0] = y;
    const double dy = d * y, thr = lambda / 2.0;
    const double analytic = (std::abs(dy) <= thr ? 0.0 : (dy - std::copysign(thr, dy))) / (d * d);
    const hsr::SparseCode l1 = hsr::solve_weighted_l1(D, yv, lambda, Vector::Ones(1), sched);
    worst_l1 = std::max(worst_l1, std::abs(l1.omega[0] - analytic));
    const double ref = grid_argmin(d, y, lambda, true, -2.0, 2.0, 1e-6);
    const hsr::SparseCode lh = hsr::solve_l_half(D, yv, lambda, sched);
    worst_half = std::max(worst_half, std::abs(lh.omega[0] - ref));
  }
  const double secs = seconds_since(t0);
  return {worst_l1 <= 1e-6 && worst_half <= 1e-4 && secs < 10.0,
          join({fmt("max|dw| L1 = %.2e", worst_l1), fmt("max|dw| L1/2 = %.2e", worst_half),
                fmt("%.2f s", secs)})};
}

Matrix random_dictionary(std::mt19937_64& rng, int m, int n) {
  std::normal_distribution<double> nd;
  Matrix D(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) D(i, j) = nd(rng);
    D.col(j).normalize();
  }
  return D;
}

Outcome criterion_2() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> uw(0.5, 2.0), ul(0.05, 0.5);
  const hsr::SolverSchedule sched;
  int converged = 0, certified = 0;
  double worst = 0.0;
  for (int p = 0; p < 200; ++p) {
    const Matrix D = random_dictionary(rng, 40, 80);
    Vector y(40);
    for (auto& v : y) v = nd(rng);
    Vector w(80);
    for (auto& v : w) v = uw(rng);
    const double lambda = ul(rng) * (2.0 * D.transpose() * y).cwiseAbs().maxCoeff();
    const hsr::SparseCode c = hsr::solve_weighted_l1(D, y, lambda, w, sched);
    // Certificate recomputed here rather than trusted from the solver.
    const Vector g = 2.0 * D.transpose() * (D * c.omega - y);
    double viol = 0.0;
    for (Eigen::Index i = 0; i < 80; ++i) {
      const double v = c.omega[i] == 0.0 ? std::max(0.0, std::abs(g[i]) - lambda * w[i])
                                          : std::abs(g[i] + lambda * w[i] * (c.omega[i] > 0 ? 1.0 : -1.0));
      viol = std::max(viol, v);
    }
    if (c.converged) {
      ++converged;
      if (viol <= 1e-5) ++certified;
      worst = std::max(worst, viol);
    }
  }
  const double secs = seconds_since(t0);
  return {converged > 0 && certified == converged && secs < 60.0,
          join({std::to_string(certified) + "/" + std::to_string(converged) + " converged certified",
                std::to_string(converged) + "/200 converged", fmt("worst violation %.2e", worst),
                fmt("%.2f s", secs)})};
}

struct SparseProblem {
  Matrix D;
  Vector y;
  std::vector<Eigen::Index> support;
};

std::vector<SparseProblem> sparse_family(std::uint64_t seed, int count, double noise) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  std::vector<SparseProblem> out;
  for (int p = 0; p < count; ++p) {
    SparseProblem sp;
    sp.D = random_dictionary(rng, 40, 80);
    std::vector<Eigen::Index> idx(80);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    sp.support.assign(idx.begin(), idx.begin() + 5);
    std::sort(sp.support.begin(), sp.support.end());
    Vector x = Vector::Zero(80);
    for (auto i : sp.support) x[i] = (rng() & 1 ? 1.0 : -1.0) * mag(rng);
    sp.y = sp.D * x;
    for (auto& v : sp.y) v += noise * nd(rng);
    out.push_back(std::move(sp));
  }
  return out;
}

struct FamilyStats {
  double mean_error = 0.0;
  double mean_nnz = 0.0;
  int exact_support = 0;
};

FamilyStats run_family(const std::vector<SparseProblem>& fam, double lambda, hsr::Penalty norm,
                       const hsr::SolverSchedule& sched) {
  FamilyStats s;
  for (const auto& p : fam) {
    const hsr::GramCache cache(p.D);
    const hsr::SparseCode c = hsr::solve(cache, p.y, lambda, norm, sched);
    s.mean_error += (p.y - p.D * c.omega).norm();
    s.mean_nnz += static_cast<double>(c.nonzeros());
    std::vector<Eigen::Index> supp;
    for (Eigen::Index i = 0; i < c.omega.size(); ++i) {
      if (std::abs(c.omega[i]) > hsr::kNonzeroThreshold) supp.push_back(i);
    }
    if (supp == p.support) ++s.exact_support;
  }
  s.mean_error /= static_cast<double>(fam.size());
  s.mean_nnz /= static_cast<double>(fam.size());
  return s;
}

// Bisection on log(lambda) for the lambda whose mean reconstruction error
// equals `target`.
double match_lambda(const std::vector<SparseProblem>& fam, hsr::Penalty norm, double target,
                    const hsr::SolverSchedule& sched) {
  double lo = std::log(1e-5), hi = std::log(2.0);
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (run_family(fam, std::exp(mid), norm, sched).mean_error < target) lo = mid;
    else hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

Outcome criterion_3() {
  const auto t0 = Clock::now();
  hsr::SolverSchedule sched;
  sched.max_inner_iter = 5000;
  sched.optimality_tol = 1e-8;

  const auto fam = sparse_family(303, 200, 0.01);
  const double lambda_ref = 0.05;
  const double target = run_family(fam, lambda_ref, hsr::Penalty::kL1, sched).mean_error;
  const double lambda_half = match_lambda(fam, hsr::Penalty::kLHalf, target, sched);
  const FamilyStats l1 = run_family(fam, lambda_ref, hsr::Penalty::kL1, sched);
  const FamilyStats lh = run_family(fam, lambda_half, hsr::Penalty::kLHalf, sched);

  // Support recovery at the family-wide oracle-best lambda (picked from a grid
  // with knowledge of the true supports).
  const auto quiet = sparse_family(304, 200, 1e-3);
  int best_exact = -1;
  double best_lambda = 0.0;
  for (double lam : {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2}) {
    const FamilyStats s = run_family(quiet, lam, hsr::Penalty::kLHalf, sched);
    if (s.exact_support > best_exact) {
      best_exact = s.exact_support;
      best_lambda = lam;
    }
  }
  const double recovery = best_exact / 200.0;
  const bool error_matched = std::abs(lh.mean_error - l1.mean_error) <= 0.01 * l1.mean_error;
  return {error_matched && lh.mean_nnz <= l1.mean_nnz && recovery >= 0.90,
          join({fmt("nnz L1 = %.2f", l1.mean_nnz), fmt("nnz L1/2 = %.2f", lh.mean_nnz),
                fmt("err L1 = %.5f", l1.mean_error), fmt("err L1/2 = %.5f", lh.mean_error),
                fmt("support recovery %.3f", recovery), fmt("at lambda %.3g", best_lambda),
                fmt("%.1f s", seconds_since(t0))})};
}

// Same-size convolution by direct summation with edge replication.
hsr::ComplexImage direct_convolution(const hsr::Image& img, const hsr::ComplexImage& k) {
  const int R = static_cast<int>(img.rows()), C = static_cast<int>(img.cols());
  const int h = static_cast<int>(k.rows()) / 2;
  hsr::ComplexImage out(R, C);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      std::complex<double> acc = 0.0;
      for (int dy = -h; dy <= h; ++dy) {
        for (int dx = -h; dx <= h; ++dx) {
          const int rr = std::clamp(r - dy, 0, R - 1), cc = std::clamp(c - dx, 0, C - 1);
          acc += k(h + dy, h + dx) * img(rr, cc);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

Outcome criterion_4() {
  const auto t0 = Clock::now();
  const hsr::GaborBank bank{hsr::GaborParams{}};
  double worst_dc = 0.0;
  for (const auto& k : bank.kernels()) {
    worst_dc = std::max(worst_dc, std::abs(k.values.sum()) / k.values.cwiseAbs().sum());
  }

  // A 16x16 image only admits kernels up to 15 pixels wide.
  hsr::GaborParams small;
  small.kernel_size = 15;
  const hsr::GaborBank sbank{small};
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_conv = 0.0;
  for (int t = 0; t < 20; ++t) {
    hsr::Image img(16, 16);
    for (auto& v : img.reshaped()) v = u(rng);
    const hsr::ResponseStack rs = hsr::convolve_bank(img, sbank);
    for (std::size_t b = 0; b < sbank.size(); ++b) {
      const hsr::ComplexImage ref = direct_convolution(img, sbank.kernels()[b].values);
      worst_conv = std::max(worst_conv, (rs.bands[b] - ref).cwiseAbs().maxCoeff() /
                                            ref.cwiseAbs().maxCoeff());
    }
  }

  struct Combo { int rows, cols, ds; };
  int length_ok = 0;
  for (const Combo c : {Combo{32, 32, 1}, Combo{32, 32, 2}, Combo{33, 31, 3}, Combo{40, 24, 4},
                        Combo{17, 45, 5}}) {
    hsr::GaborParams p;
    p.kernel_size = 15;
    p.downsample = c.ds;
    const hsr::GaborBank b{p};
    hsr::Image img(c.rows, c.cols);
    for (auto& v : img.reshaped()) v = u(rng);
    const std::size_t expected = 40u * static_cast<std::size_t>((c.rows + c.ds - 1) / c.ds) *
                                 static_cast<std::size_t>((c.cols + c.ds - 1) / c.ds);
    const auto fv = hsr::gabor_features(img, b);
    if (hsr::augmented_length(c.rows, c.cols, p) == expected &&
        static_cast<std::size_t>(fv.values.size()) == expected) {
      ++length_ok;
    }
  }
  return {worst_dc <= 1e-6 && worst_conv <= 1e-8 && length_ok == 5,
          join({fmt("max DC ratio %.2e", worst_dc), fmt("max conv rel err %.2e", worst_conv),
                std::to_string(length_ok) + "/5 lengths exact", fmt("%.2f s", seconds_since(t0))})};
}

Outcome criterion_5() {
  const auto t0 = Clock::now();
  double worst_orth = 0.0;
  for (int s = 0; s < 20; ++s) {
    const int in = 10 + 7 * s, hid = 1 + (5 * s) % in;
    const auto w = hsr::generate_orthogonal_weights(in, hid, 1000 + s);
    worst_orth = std::max(worst_orth,
                          (w.a.transpose() * w.a - Matrix::Identity(hid, hid)).cwiseAbs().maxCoeff());
  }

  std::mt19937_64 rng(505);
  std::normal_distribution<double> nd;
  Matrix X(120, 64);
  // Low-rank data plus a little noise, so wider hidden layers keep helping.
  const Matrix U = Matrix::NullaryExpr(120, 12, [&] { return nd(rng); });
  const Matrix V = Matrix::NullaryExpr(12, 64, [&] { return nd(rng); });
  X = 0.2 * U * V + 0.01 * Matrix::NullaryExpr(120, 64, [&] { return nd(rng); });

  double worst_ridge = 0.0;
  std::vector<double> errors;
  for (int hid : {4, 8, 16, 32}) {
    const hsr::ProjectionModel m = hsr::train_elm_ae(X, hid, 100.0, 77);
    const Matrix H = m.hidden(X);
    const Matrix lhs = (H.transpose() * H + Matrix::Identity(hid, hid) / m.C) * m.beta;
    const Matrix rhs = H.transpose() * X;
    worst_ridge = std::max(worst_ridge, (lhs - rhs).norm() / rhs.norm());
    errors.push_back((m.reconstruct(X) - X).squaredNorm() / static_cast<double>(X.rows()));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < errors.size(); ++i) monotone &= errors[i] <= errors[i - 1] + 1e-9;

  const hsr::ProjectionModel a = hsr::train_elm_ae(X, 16, 100.0, 9);
  const hsr::ProjectionModel b = hsr::train_elm_ae(X, 16, 100.0, 9);
  const bool deterministic = a.a == b.a && a.b == b.b && a.beta == b.beta;

  std::string errs;
  for (double e : errors) errs += (errs.empty() ? "" : " ") + fmt("%.4g", e);
  return {worst_orth <= 1e-8 && worst_ridge <= 1e-8 && monotone && deterministic,
          join({fmt("orth %.2e", worst_orth), fmt("ridge rel residual %.2e", worst_ridge),
                "recon error [" + errs + "]", deterministic ? "deterministic" : "NOT deterministic",
                fmt("%.2f s", seconds_since(t0))})};
}

// Structured occlusions over the 64-pixel identity basis: every column is a
// flattened 8x8 image carrying one 4x4 constant block at a seeded position.
Matrix block_occlusions(std::mt19937_64& rng, int count) {
  std::uniform_int_distribution<int> pos(0, 4);
  std::uniform_real_distribution<double> val(0.5, 1.0);
  Matrix Z = Matrix::Zero(64, count);
  for (int c = 0; c < count; ++c) {
    const int r0 = pos(rng), c0 = pos(rng);
    const double v = val(rng);
    for (int r = r0; r < r0 + 4; ++r) {
      for (int k = c0; k < c0 + 4; ++k) Z(r * 8 + k, c) = v;
    }
  }
  return Z;
}

Outcome criterion_6() {
  const auto t0 = Clock::now();
  hsr::SolverSchedule sched;
  sched.max_alternations = 30;
  const double zeta = 0.05;
  bool monotone = true;
  double worst_norm = 0.0;
  double learned_total = 0.0, random_total = 0.0;
  int wins = 0;
  for (int s = 0; s < 10; ++s) {
    std::mt19937_64 rng(600 + s);
    const Matrix Z = block_occlusions(rng, 200);
    const Matrix held = block_occlusions(rng, 100);
    const hsr::LearnedOcclusionDictionary d = hsr::learn_compressed_dictionary(Z, 8, zeta, sched, 600 + s);
    for (std::size_t i = 1; i < d.residual_history.size(); ++i) {
      monotone &= d.residual_history[i] <= d.residual_history[i - 1] * (1.0 + 1e-9) + 1e-9;
    }
    for (double v : d.norm_deviation_history) worst_norm = std::max(worst_norm, v);
    worst_norm = std::max(worst_norm, (d.gamma.colwise().norm().array() - 1.0).abs().maxCoeff());

    std::vector<Eigen::Index> cols(static_cast<std::size_t>(Z.cols()));
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(cols.begin(), cols.end(), rng);
    Matrix random_atoms(Z.rows(), 8);
    for (int j = 0; j < 8; ++j) random_atoms.col(j) = Z.col(cols[static_cast<std::size_t>(j)]).normalized();

    const double learned = hsr::coding_residual(d.gamma, held, zeta, sched);
    const double random = hsr::coding_residual(random_atoms, held, zeta, sched);
    learned_total += learned;
    random_total += random;
    if (learned < random) ++wins;
  }
  return {monotone && worst_norm <= 1e-10 && learned_total < random_total,
          join({monotone ? "residual monotone" : "residual NOT monotone", fmt("max norm dev %.2e", worst_norm),
                fmt("held-out residual learned %.2f", learned_total / 10.0),
                fmt("random %.2f", random_total / 10.0), std::to_string(wins) + "/10 seeds won",
                fmt("%.1f s", seconds_since(t0))})};
}

hsr::ExperimentConfig clean_hsr_config(std::uint64_t seed) {
  hsr::ExperimentConfig cfg;
  cfg.name = "clean-hsr";
  cfg.seed = seed;
  cfg.dataset.synth = hsr::SynthSpec{10, 20, 32, 32, 0.05, seed};
  cfg.dataset.train_per_class = 10;
  cfg.pipeline.mode = hsr::PipelineMode::kHsr;
  // The default 33-pixel kernel does not fit a 32x32 image.
  cfg.pipeline.gabor.kernel_size = 15;
  cfg.pipeline.gabor.downsample = 2;
  cfg.pipeline.reduce_dim = 64;
  cfg.pipeline.lambda = 0.001;
  return cfg;
}

// Per-class least-squares residual on unit-norm normalized pixels.
double nearest_subspace_rate(const hsr::TrainTestSplit& data) {
  auto vec = [](const hsr::Image& img) {
    Vector v = hsr::flatten(hsr::normalize_image(img).image);
    return Vector(v.normalized());
  };
  const int K = data.train.num_classes();
  std::vector<Matrix> bases(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    std::vector<Vector> cols;
    for (std::size_t i = 0; i < data.train.size(); ++i) {
      if (data.train.labels[i] == k) cols.push_back(vec(data.train.images[i]));
    }
    Matrix A(cols.front().size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) A.col(static_cast<Eigen::Index>(j)) = cols[j];
    bases[static_cast<std::size_t>(k)] = A;
  }
  int correct = 0;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    const Vector y = vec(data.test.images[i]);
    int best = 0;
    double best_r = 1e300;
    for (int k = 0; k < K; ++k) {
      const Matrix& A = bases[static_cast<std::size_t>(k)];
      const Vector x = A.colPivHouseholderQr().solve(y);
      const double r = (y - A * x).norm();
      if (r < best_r) {
        best_r = r;
        best = k;
      }
    }
    if (best == data.test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.test.size());
}

Outcome criterion_7() {
  const auto t0 = Clock::now();
  const hsr::ExperimentConfig cfg = clean_hsr_config(7);
  const hsr::MetricsReport r = hsr::run_experiment(cfg);
  const double oracle = nearest_subspace_rate(hsr::load_experiment_data(cfg));
  const double secs = seconds_since(t0);
  return {r.recognition_rate >= 0.95 && r.recognition_rate >= oracle - 0.05 && secs < 300.0,
          join({fmt("HSR rate %.3f", r.recognition_rate), fmt("nearest-subspace %.3f", oracle),
                fmt("%.1f s", secs)})};
}

hsr::ExperimentConfig occluded_config(std::uint64_t seed, hsr::OcclusionKind occ, bool partitioned) {
  hsr::ExperimentConfig cfg = clean_hsr_config(seed);
  cfg.name = "occluded-hsr";
  cfg.pipeline.lambda = 0.0005;
  cfg.occlusion = hsr::OcclusionSpec{hsr::OcclusionShape::kBand, 0.4, hsr::OcclusionFill::kRandomNoise, 0, 0.0};
  cfg.pipeline.occlusion.kind = occ;
  cfg.pipeline.occlusion.atoms = 16;
  cfg.pipeline.occlusion.training_occlusion = *cfg.occlusion;
  if (partitioned) {
    // 8x16 blocks need a kernel of at most 7 pixels.
    cfg.pipeline.gabor.kernel_size = 7;
    cfg.pipeline.gabor.downsample = 2;
    cfg.pipeline.reduce_dim = 32;
    cfg.partition = hsr::PartitionConfig{4, 2, 8, 16, 16};
  }
  return cfg;
}

Outcome criterion_8() {
  const auto t0 = Clock::now();
  double none = 0.0, learned = 0.0, part = 0.0;
  std::string per_seed;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const double a = hsr::run_experiment(occluded_config(s, hsr::OcclusionKind::kNone, false)).recognition_rate;
    const double b = hsr::run_experiment(occluded_config(s, hsr::OcclusionKind::kLearned, false)).recognition_rate;
    const double c = hsr::run_experiment(occluded_config(s, hsr::OcclusionKind::kLearned, true)).recognition_rate;
    none += a / 5.0;
    learned += b / 5.0;
    part += c / 5.0;
  }
  return {part >= learned && learned >= none,
          join({fmt("no occ dict %.3f", none), fmt("learned p=16 %.3f", learned),
                fmt("partitioned %.3f", part), fmt("%.1f s", seconds_since(t0))})};
}

// Exact PCA through the eigendecomposition of the centered Gram matrix.
Matrix pca_project(const Matrix& X, int dim) {
  const Matrix Xc = X.rowwise() - X.colwise().mean();
  Matrix G = Matrix::Zero(Xc.rows(), Xc.rows());
  G.selfadjointView<Eigen::Lower>().rankUpdate(Xc);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(G.selfadjointView<Eigen::Lower>());
  const Matrix U = eig.eigenvectors().rightCols(dim);
  const Vector s = eig.eigenvalues().tail(dim).cwiseMax(1e-300).cwiseSqrt();
  const Matrix components = (Xc.transpose() * U) * s.cwiseInverse().asDiagonal();  // d x dim
  return Xc * components;
}

Outcome criterion_9() {
  std::mt19937_64 rng(909);
  std::normal_distribution<double> nd;
  const Matrix X = Matrix::NullaryExpr(2000, 4000, [&] { return nd(rng); });
  auto t0 = Clock::now();
  const hsr::ProjectionModel m = hsr::train_elm_ae(X, 256, 100.0, 9);
  const Matrix reduced = m.project_columns(X.transpose());
  const double elm = seconds_since(t0);
  t0 = Clock::now();
  const Matrix pca = pca_project(X, 256);
  const double pca_s = seconds_since(t0);
  const bool shapes = reduced.rows() == 256 && reduced.cols() == 2000 && pca.cols() == 256;
  return {shapes && std::isfinite(elm) && elm > 0.0,
          join({fmt("ELM-AE train+project %.2f s", elm), fmt("exact PCA baseline %.2f s", pca_s)})};
}

Outcome criterion_10() {
  const auto t0 = Clock::now();
  bool identical = true;
  std::string detail;
  for (bool occluded : {false, true}) {
    const hsr::ExperimentConfig cfg =
        occluded ? occluded_config(3, hsr::OcclusionKind::kLearned, true) : clean_hsr_config(3);
    const hsr::MetricsReport a = hsr::run_experiment(cfg);
    const hsr::MetricsReport b = hsr::run_experiment(hsr::ExperimentConfig::parse(a.config_echo));
    bool same = std::memcmp(&a.recognition_rate, &b.recognition_rate, sizeof(double)) == 0 &&
                a.confusion == b.confusion && a.samples.size() == b.samples.size();
    for (std::size_t i = 0; same && i < a.samples.size(); ++i) {
      same = a.samples[i].nnz == b.samples[i].nnz && a.samples[i].predicted == b.samples[i].predicted &&
             a.samples[i].iterations == b.samples[i].iterations;
    }
    identical &= same;
  }
  return {identical, join({identical ? "rate, confusion and nnz bit-identical across re-runs"
                                     : "re-run differs",
                           fmt("%.1f s", seconds_since(t0))})};
}

}  // namespace

// Optional arguments select criteria by number; all run by default.
int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"1 solver oracle equivalence", criterion_1},
      {"2 optimality certificates", criterion_2},
      {"3 sparsity ordering and support recovery", criterion_3},
      {"4 Gabor invariants", criterion_4},
      {"5 ELM-AE invariants", criterion_5},
      {"6 dictionary learning", criterion_6},
      {"7 end-to-end clean recognition", criterion_7},
      {"8 occlusion and partition direction", criterion_8},
      {"9 compression speed report", criterion_9},
      {"10 determinism", criterion_10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    if (!selected.empty() && !selected.count(static_cast<int>(i) + 1)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
