#include "hsr/dictionary_learning.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "hsr/error.hpp"
#include "hsr/serialization.hpp"

namespace hsr {

namespace {

// Least-squares coefficients of z on the atoms listed in `support`, via the
// small Gram system; a near-singular support falls back to an orthogonal
// decomposition of the atom columns.
Vector refit(const GramCache& atoms, const Vector& z, const Vector& dtz,
             const std::vector<Eigen::Index>& support) {
  Vector code = Vector::Zero(atoms.atoms());
  if (support.empty()) return code;
  const auto k = static_cast<Eigen::Index>(support.size());
  Matrix gss(k, k);
  Vector rhs(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) gss(a, b) = atoms.gram()(support[a], support[b]);
    rhs[a] = dtz[support[a]];
  }
  const Eigen::LDLT<Matrix> ldlt(gss);
  const Vector pivots = ldlt.vectorD().cwiseAbs();
  Vector coef;
  if (ldlt.info() == Eigen::Success && pivots.minCoeff() > 1e-10 * pivots.maxCoeff()) {
    coef = ldlt.solve(rhs);
  } else {
    Matrix sub(atoms.dim(), k);
    for (Eigen::Index j = 0; j < k; ++j) sub.col(j) = atoms.dictionary().col(support[j]);
    coef = sub.completeOrthogonalDecomposition().solve(z);
  }
  for (Eigen::Index j = 0; j < k; ++j) code[support[j]] = coef[j];
  return code;
}

Vector code_column(const GramCache& atoms, const Vector& z, double zeta,
                   const SolverSchedule& schedule) {
  const SparseCode l1 = solve_l1(atoms, z, zeta, schedule);
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < l1.omega.size(); ++i)
    if (l1.omega[i] != 0.0) support.push_back(i);
  const Vector dtz = atoms.dictionary().transpose() * z;
  Vector code = refit(atoms, z, dtz, support);
  if ((z - atoms.dictionary() * code).squaredNorm() >
      (z - atoms.dictionary() * l1.omega).squaredNorm()) {
    code = l1.omega;
  }
  return code;
}

double max_norm_deviation(const Matrix& gamma) {
  return (gamma.colwise().norm().array() - 1.0).abs().maxCoeff();
}

}  // namespace

Matrix sparse_code_columns(const GramCache& atoms, const Matrix& Z, double zeta,
                           const SolverSchedule& schedule) {
  if (Z.rows() != atoms.dim()) throw DimensionError("occlusion matrix rows do not match atoms");
  Matrix codes(atoms.atoms(), Z.cols());
  for (Eigen::Index k = 0; k < Z.cols(); ++k)
    codes.col(k) = code_column(atoms, Z.col(k), zeta, schedule);
  return codes;
}

double coding_residual(const Matrix& atoms, const Matrix& Z, double zeta,
                       const SolverSchedule& schedule) {
  const GramCache cache(atoms);
  return (Z - atoms * sparse_code_columns(cache, Z, zeta, schedule)).squaredNorm();
}

LearnedOcclusionDictionary learn_compressed_dictionary(const Matrix& Z, int p, double zeta,
                                                       const SolverSchedule& schedule,
                                                       std::uint64_t seed) {
  schedule.validate();
  if (p < 1) throw ParameterError("atom count p must be >= 1");
  if (p > Z.cols()) {
    throw ParameterError("atom count p (" + std::to_string(p) + ") exceeds the " +
                         std::to_string(Z.cols()) + " columns of the occlusion matrix");
  }
  if (!(zeta > 0.0)) throw ParameterError("zeta must be > 0");
  if (!Z.allFinite()) throw DataError("occlusion matrix contains non-finite entries");
  const Vector column_norms = Z.colwise().norm().transpose();
  if ((column_norms.array() == 0.0).any()) throw DataError("occlusion matrix has an all-zero column");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(Z.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  LearnedOcclusionDictionary out;
  out.atoms = p;
  out.zeta = zeta;
  out.gamma.resize(Z.rows(), p);
  for (int j = 0; j < p; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.gamma.col(j) = Z.col(src) / column_norms[src];
  }

  Matrix& codes = out.codes;
  codes = sparse_code_columns(GramCache(out.gamma), Z, zeta, schedule);
  Matrix residual = Z - out.gamma * codes;
  double current = residual.squaredNorm();
  out.residual_history.push_back(current);

  for (int alt = 1; alt <= schedule.max_alternations; ++alt) {
    // Atom step: for a fixed code row the unconstrained least-squares atom is
    // optimal; moving its norm into the code row keeps the product.
    for (int j = 0; j < p; ++j) {
      auto row = codes.row(j);
      const double row_energy = row.squaredNorm();
      if (row_energy == 0.0) {
        Eigen::Index worst = 0;
        residual.colwise().squaredNorm().maxCoeff(&worst);
        Vector replacement = residual.col(worst);
        if (replacement.norm() == 0.0) replacement = Z.col(worst);
        out.gamma.col(j) = replacement / replacement.norm();
        ++out.dead_atom_resets;
        continue;
      }
      residual.noalias() += out.gamma.col(j) * row;
      Vector direction = residual * row.transpose() / row_energy;
      const double norm = direction.norm();
      if (norm > 0.0) {
        out.gamma.col(j) = direction / norm;
        row *= norm;
      }
      residual.noalias() -= out.gamma.col(j) * row;
    }

    // Coding step, accepting only non-worsening codes per column.
    const GramCache cache(out.gamma);
    for (Eigen::Index k = 0; k < Z.cols(); ++k) {
      const Vector candidate = code_column(cache, Z.col(k), zeta, schedule);
      const Vector cand_residual = Z.col(k) - out.gamma * candidate;
      if (cand_residual.squaredNorm() <= residual.col(k).squaredNorm()) {
        codes.col(k) = candidate;
        residual.col(k) = cand_residual;
      }
    }

    const double next = residual.squaredNorm();
    out.residual_history.push_back(next);
    out.norm_deviation_history.push_back(max_norm_deviation(out.gamma));
    out.alternations = alt;
    const bool small_change =
        current - next <= schedule.inner_tol * std::max(current, std::numeric_limits<double>::min());
    current = next;
    if (small_change) {
      out.converged = true;
      break;
    }
  }
  // Recompute from scratch to shed accumulated update error.
  out.training_residual = (Z - out.gamma * codes).squaredNorm();
  return out;
}

void save_occlusion_dictionary(const LearnedOcclusionDictionary& dict, std::ostream& out) {
  out << "hsr-occlusion-dictionary 1\n";
  out << "atoms " << dict.atoms << "\n";
  out << "zeta " << format_double(dict.zeta) << "\n";
  out << "training_residual " << format_double(dict.training_residual) << "\n";
  write_matrix(out, "gamma", dict.gamma);
  write_matrix(out, "codes", dict.codes);
  if (!out) throw IoError("failed writing occlusion dictionary");
}

LearnedOcclusionDictionary load_occlusion_dictionary(std::istream& in) {
  expect_header(in, "hsr-occlusion-dictionary", 1);
  LearnedOcclusionDictionary dict;
  dict.atoms = read_keyed<int>(in, "atoms");
  dict.zeta = read_keyed_scalar(in, "zeta");
  dict.training_residual = read_keyed_scalar(in, "training_residual");
  dict.gamma = read_matrix(in, "gamma");
  dict.codes = read_matrix(in, "codes");
  if (dict.gamma.cols() != dict.atoms || dict.codes.rows() != dict.atoms) {
    throw IoError("occlusion dictionary atom count mismatch");
  }
  return dict;
}

}  // namespace hsr
