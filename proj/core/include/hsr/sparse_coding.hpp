#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

#include "hsr/types.hpp"

namespace hsr {

// Coefficients with magnitude above this count as nonzero.
inline constexpr double kNonzeroThreshold = 1e-6;

enum class Penalty { kL1, kLHalf, kWeightedL1 };

std::string_view penalty_name(Penalty p);
Penalty parse_penalty(std::string_view name);

enum class StepRule {
  kCoordinateDescent,  // cyclic exact coordinate minimization
  kProximalGradient,   // monotone FISTA with backtracking
};

std::string_view step_rule_name(StepRule r);
StepRule parse_step_rule(std::string_view name);

// Iteration controls shared by the sparse solvers.
//
// An inner (weighted-L1) solve is converged when the subgradient optimality
// certificate holds to optimality_tol. It also stops early once the relative
// objective decrease per iteration drops below inner_tol, which only happens
// at the round-off floor; that exit leaves `converged` false unless the
// certificate holds. Outer loops (reweighting, dictionary alternations) stop
// when their relative objective decrease drops below inner_tol.
struct SolverSchedule {
  double inner_tol = 1e-15;
  int max_inner_iter = 20000;
  int outer_reweight_iters = 4;
  double epsilon_smoothing = 1e-6;
  StepRule step_rule = StepRule::kCoordinateDescent;
  double optimality_tol = 1e-7;
  int max_alternations = 30;
  bool record_trace = false;

  void validate() const;
};

struct SparseCode {
  Vector omega;
  double lambda = 0.0;
  Penalty norm = Penalty::kL1;
  int iterations = 0;
  double objective = 0.0;
  bool converged = false;
  // Largest violation of the weighted-L1 optimality condition at the final
  // iterate (of the last inner solve for L1/2).
  double certificate = 0.0;
  // Objective after every iteration when SolverSchedule::record_trace is set.
  std::vector<double> trace;

  Eigen::Index nonzeros(double threshold = kNonzeroThreshold) const;
};

// Dictionary together with its Gram matrix, shared by every code computed
// against the same atoms.
class GramCache {
 public:
  explicit GramCache(Matrix dictionary);

  const Matrix& dictionary() const { return dictionary_; }
  const Matrix& gram() const { return gram_; }
  Eigen::Index atoms() const { return dictionary_.cols(); }
  Eigen::Index dim() const { return dictionary_.rows(); }
  // Upper bound on the Lipschitz constant of the gradient of ||y - D w||^2.
  double lipschitz() const { return lipschitz_; }

 private:
  Matrix dictionary_;
  Matrix gram_;
  double lipschitz_ = 0.0;
};

// min_w ||y - D w||^2 + lambda * sum_i weights_i |w_i|
SparseCode solve_weighted_l1(const GramCache& dict, const Vector& y, double lambda,
                             const Vector& weights, const SolverSchedule& schedule,
                             const Vector* warm_start = nullptr);
SparseCode solve_weighted_l1(const Matrix& D, const Vector& y, double lambda,
                             const Vector& weights, const SolverSchedule& schedule);

// Unit weights.
SparseCode solve_l1(const GramCache& dict, const Vector& y, double lambda,
                    const SolverSchedule& schedule);
SparseCode solve_l1(const Matrix& D, const Vector& y, double lambda,
                    const SolverSchedule& schedule);

// min_w ||y - D w||^2 + lambda * sum_i |w_i|^(1/2) by majorize-minimize:
// repeated weighted-L1 solves with weights 0.5 (|w_i| + eps)^(-1/2), started
// from the unit-weight L1 solution. Returns the best iterate seen.
SparseCode solve_l_half(const GramCache& dict, const Vector& y, double lambda,
                        const SolverSchedule& schedule);
SparseCode solve_l_half(const Matrix& D, const Vector& y, double lambda,
                        const SolverSchedule& schedule);

SparseCode solve(const GramCache& dict, const Vector& y, double lambda, Penalty norm,
                 const SolverSchedule& schedule);

// ||y - D w||^2 + lambda R(w). `weights` is required for kWeightedL1 only.
double penalized_objective(const Matrix& D, const Vector& y, const Vector& omega, double lambda,
                           Penalty norm, const Vector* weights = nullptr);

// Max over coordinates of the violation of
//   |2 d_i^T (D w - y)| <= lambda weights_i                   (w_i == 0)
//   2 d_i^T (D w - y) + lambda weights_i sign(w_i) == 0      (w_i != 0)
double optimality_violation(const Matrix& D, const Vector& y, const Vector& omega, double lambda,
                            const Vector& weights);

// Appends one `label,iteration,objective` row per recorded trace entry.
void write_trace_csv(std::ostream& out, std::string_view label, const SparseCode& code);

}  // namespace hsr
