#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hsr/sparse_coding.hpp"
#include "hsr/types.hpp"

namespace hsr {

// Compressed occlusion dictionary: p unit-norm atoms that sparsely code the
// columns of a (much wider) occlusion matrix Z.
struct LearnedOcclusionDictionary {
  Matrix gamma;  // feature_dim x p
  Matrix codes;  // p x columns(Z)
  int atoms = 0;
  double zeta = 0.0;
  double training_residual = 0.0;  // ||Z - gamma codes||_F^2
  // Residual after the initial coding pass and after every alternation.
  std::vector<double> residual_history;
  // max_j | ||d_j|| - 1 | after every alternation.
  std::vector<double> norm_deviation_history;
  int alternations = 0;
  int dead_atom_resets = 0;
  bool converged = false;
};

// Codes every column of Z over the atoms: weighted-L1 with weight zeta selects
// a support, then a least-squares refit on that support sets the values.
Matrix sparse_code_columns(const GramCache& atoms, const Matrix& Z, double zeta,
                           const SolverSchedule& schedule);

// ||Z - atoms * sparse_code_columns(atoms, Z)||_F^2
double coding_residual(const Matrix& atoms, const Matrix& Z, double zeta,
                       const SolverSchedule& schedule);

// Alternates sparse coding of Z over the current atoms with sequential
// per-atom least-squares updates followed by renormalization. The initial
// atoms are p distinct seeded columns of Z. An atom used by no column is
// replaced by the worst-reconstructed column of Z. A new code for a column is
// accepted only if it does not increase that column's residual, so the
// training residual is non-increasing across alternations.
LearnedOcclusionDictionary learn_compressed_dictionary(const Matrix& Z, int p, double zeta,
                                                       const SolverSchedule& schedule,
                                                       std::uint64_t seed);

void save_occlusion_dictionary(const LearnedOcclusionDictionary& dict, std::ostream& out);
LearnedOcclusionDictionary load_occlusion_dictionary(std::istream& in);

}  // namespace hsr
