#include "hsr/sparse_coding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "hsr/error.hpp"
#include "hsr/serialization.hpp"

namespace hsr {

std::string_view penalty_name(Penalty p) {
  switch (p) {
    case Penalty::kL1: return "l1";
    case Penalty::kLHalf: return "lhalf";
    case Penalty::kWeightedL1: return "weighted-l1";
  }
  return "l1";
}

Penalty parse_penalty(std::string_view name) {
  if (name == "l1" || name == "L1") return Penalty::kL1;
  if (name == "lhalf" || name == "l_half" || name == "l1/2") return Penalty::kLHalf;
  if (name == "weighted-l1") return Penalty::kWeightedL1;
  throw ParameterError("unknown penalty '" + std::string(name) + "'");
}

std::string_view step_rule_name(StepRule r) {
  switch (r) {
    case StepRule::kCoordinateDescent: return "coordinate";
    case StepRule::kProximalGradient: return "proximal-gradient";
  }
  return "coordinate";
}

StepRule parse_step_rule(std::string_view name) {
  if (name == "coordinate" || name == "cd") return StepRule::kCoordinateDescent;
  if (name == "proximal-gradient" || name == "fista") return StepRule::kProximalGradient;
  throw ParameterError("unknown step rule '" + std::string(name) + "'");
}

void SolverSchedule::validate() const {
  if (!(inner_tol > 0.0)) throw ParameterError("inner_tol must be > 0");
  if (!(optimality_tol > 0.0)) throw ParameterError("optimality_tol must be > 0");
  if (!(epsilon_smoothing > 0.0)) throw ParameterError("epsilon_smoothing must be > 0");
  if (max_inner_iter < 1) throw ParameterError("max_inner_iter must be >= 1");
  if (outer_reweight_iters < 1) throw ParameterError("outer_reweight_iters must be >= 1");
  if (max_alternations < 1) throw ParameterError("max_alternations must be >= 1");
}

Eigen::Index SparseCode::nonzeros(double threshold) const {
  return (omega.array().abs() > threshold).count();
}

GramCache::GramCache(Matrix dictionary) : dictionary_(std::move(dictionary)) {
  if (!dictionary_.allFinite()) throw DataError("dictionary contains non-finite entries");
  gram_ = dictionary_.transpose() * dictionary_;
  // Power iteration on the PSD Gram matrix; the 1.05 margin and the trace
  // cap keep the estimate an upper bound in practice, and backtracking in the
  // proximal solver covers the rest.
  const Eigen::Index n = gram_.rows();
  if (n == 0) return;
  Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double est = 0.0;
  for (int it = 0; it < 60; ++it) {
    Vector w = gram_ * v;
    const double norm = w.norm();
    if (norm == 0.0) break;
    est = norm;
    v = w / norm;
  }
  lipschitz_ = 2.0 * std::min(1.05 * est, gram_.trace()) + std::numeric_limits<double>::min();
}

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;  // includes |z| == t: the sparser choice
}

struct Problem {
  const Matrix& D;
  const Vector& y;
  const Matrix& G;
  Vector c;  // D^T y
  double yy;
  Vector thresholds;  // lambda * weights
};

// ||y - Dw||^2 from Gram quantities given g = Gw - c.
double smooth_from_gradient(const Problem& p, const Vector& w, const Vector& g) {
  return p.yy + w.dot(g - p.c);
}

double penalty_value(const Problem& p, const Vector& w) {
  return (p.thresholds.array() * w.array().abs()).sum();
}

double certificate(const Problem& p, const Vector& w, const Vector& g) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double grad = 2.0 * g[i];
    double viol;
    if (w[i] == 0.0) {
      viol = std::abs(grad) - p.thresholds[i];
    } else {
      viol = std::abs(grad + p.thresholds[i] * (w[i] > 0.0 ? 1.0 : -1.0));
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

// Certificate restricted to the nonzero coefficients.
double support_violation(const Problem& p, const Vector& w, const Vector& g) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] != 0.0) {
      worst = std::max(worst, std::abs(2.0 * g[i] + p.thresholds[i] * (w[i] > 0.0 ? 1.0 : -1.0)));
    }
  }
  return worst;
}

bool stagnated(double before, double after, double tol) {
  return before - after <= tol * std::max(std::abs(after), std::numeric_limits<double>::min());
}

// Moves w to a basic solution with the same fit: while the support columns
// are dependent, step along a null vector of D_A in the direction that does
// not raise the penalty until a coefficient reaches zero. One kernel basis is
// computed up front and updated by elimination as coefficients drop out.
bool reduce_to_basic(const Matrix& Da, const Vector& ta, Vector& wa) {
  const Eigen::FullPivLU<Matrix> lu(Da);
  Matrix kernel = lu.kernel();
  if (lu.rank() == Da.cols() || kernel.cols() == 0) return false;
  bool moved = false;
  for (Eigen::Index col = 0; col < kernel.cols(); ++col) {
    Vector v = kernel.col(col);
    if (v.cwiseAbs().maxCoeff() == 0.0) continue;
    double slope = 0.0;
    for (Eigen::Index a = 0; a < wa.size(); ++a) {
      if (wa[a] != 0.0) slope += ta[a] * (wa[a] > 0.0 ? 1.0 : -1.0) * v[a];
    }
    if (slope > 0.0) v = -v;
    double reach = std::numeric_limits<double>::infinity();
    Eigen::Index hit = -1;
    for (Eigen::Index a = 0; a < wa.size(); ++a) {
      if (wa[a] != 0.0 && v[a] != 0.0 && (wa[a] > 0.0) != (v[a] > 0.0)) {
        const double t = -wa[a] / v[a];
        if (t < reach) {
          reach = t;
          hit = a;
        }
      }
    }
    if (hit < 0) continue;
    wa += reach * v;
    wa[hit] = 0.0;
    moved = true;
    // Keep the remaining kernel vectors inside {v : v_hit = 0}.
    for (Eigen::Index other = col + 1; other < kernel.cols(); ++other) {
      kernel.col(other) -= (kernel(hit, other) / v[hit]) * v;
      kernel(hit, other) = 0.0;
    }
  }
  return moved;
}

// Feature-sign step on the current support A with signs s held fixed: the
// minimizer of the quadratic model solves
//   G_AA w_A = c_A - thresholds_A s_A / 2.
// A line search from w toward that point evaluates the true objective at the
// endpoint and at every zero crossing on the way, and keeps the best point
// if it improves on w. A dependent support is first reduced to a basic
// solution. Returns true when w moved.
bool polish_support(const Problem& p, Vector& w, Vector& g, double& f) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w[i] != 0.0) support.push_back(i);
  const auto k = static_cast<Eigen::Index>(support.size());
  if (k == 0) return false;
  Matrix Da(p.D.rows(), k);
  Vector ta(k), wa(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const Eigen::Index i = support[static_cast<std::size_t>(a)];
    Da.col(a) = p.D.col(i);
    ta[a] = p.thresholds[i];
    wa[a] = w[i];
  }
  // Objective restricted to the support; coordinates off A stay zero. The fit
  // is evaluated directly, not through Gram quantities, to avoid cancellation.
  auto objective = [&](const Vector& x) {
    return (p.y - Da * x).squaredNorm() + (ta.array() * x.array().abs()).sum();
  };
  const double start_f = objective(wa);

  auto commit = [&](const Vector& x) {
    for (Eigen::Index a = 0; a < k; ++a) w[support[static_cast<std::size_t>(a)]] = x[a];
    g.noalias() = p.G * w - p.c;
    f = smooth_from_gradient(p, w, g) + penalty_value(p, w);
  };

  Matrix Gaa(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      Gaa(a, b) = p.G(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
  const Eigen::LDLT<Matrix> ldlt(Gaa);
  const Vector pivots = ldlt.vectorD().cwiseAbs();
  if (k > p.D.rows() || ldlt.info() != Eigen::Success ||
      !(pivots.minCoeff() > 1e-10 * pivots.maxCoeff())) {
    Vector x = wa;
    if (!reduce_to_basic(Da, ta, x)) return false;
    // The fit is unchanged up to round-off and the penalty can only drop.
    if (!(objective(x) <= start_f * (1.0 + 1e-14))) return false;
    commit(x);
    return true;
  }

  Vector rhs(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    rhs[a] = p.c[support[static_cast<std::size_t>(a)]] - 0.5 * ta[a] * (wa[a] > 0.0 ? 1.0 : -1.0);
  }
  const Vector target = ldlt.solve(rhs);
  if (!target.allFinite()) return false;
  const Vector dir = target - wa;

  // (step, coordinate that reaches zero there); -1 marks the endpoint.
  std::vector<std::pair<double, Eigen::Index>> steps{{1.0, -1}};
  for (Eigen::Index a = 0; a < k; ++a) {
    if (dir[a] != 0.0) {
      const double t = -wa[a] / dir[a];
      if (t > 0.0 && t < 1.0) steps.emplace_back(t, a);
    }
  }
  // Along the segment the fit is the quadratic |r0|^2 - 2 t r0.u + t^2 |u|^2.
  const Vector r0 = p.y - Da * wa;
  const Vector u = Da * dir;
  const double rr = r0.squaredNorm(), ru = r0.dot(u), uu = u.squaredNorm();
  double best_f = start_f, best_t = 0.0;
  Eigen::Index best_zeroed = -1;
  for (const auto& [t, zeroed] : steps) {
    Vector x = wa + t * dir;
    if (zeroed >= 0) x[zeroed] = 0.0;
    const double fx = rr - 2.0 * t * ru + t * t * uu + (ta.array() * x.array().abs()).sum();
    if (fx < best_f) {
      best_f = fx;
      best_t = t;
      best_zeroed = zeroed;
    }
  }
  if (best_t == 0.0) return false;
  Vector best = wa + best_t * dir;
  if (best_zeroed >= 0) best[best_zeroed] = 0.0;
  if (!(objective(best) < start_f)) return false;
  commit(best);
  return true;
}

// Cyclic coordinate descent interleaved with feature-sign steps on the current
// support. Plain cycling converges only linearly on correlated atoms; the
// support solves finish the job once the sweeps have found the right atoms.
void coordinate_descent(const Problem& p, Vector& w, const SolverSchedule& s, SparseCode& out) {
  const Eigen::Index n = w.size();
  Vector g = p.G * w - p.c;
  double f_prev = smooth_from_gradient(p, w, g) + penalty_value(p, w);
  out.converged = false;
  int next_polish = 1, polish_gap = 1;
  for (int it = 1; it <= s.max_inner_iter; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double gii = p.G(i, i);
      double next = 0.0;
      if (gii > 0.0) {
        const double q = g[i] - gii * w[i];
        next = soft_threshold(-q, 0.5 * p.thresholds[i]) / gii;
      }
      const double delta = next - w[i];
      if (delta != 0.0) {
        w[i] = next;
        g.noalias() += delta * p.G.col(i);
      }
    }
    if (it % 64 == 0) g.noalias() = p.G * w - p.c;
    double f = smooth_from_gradient(p, w, g) + penalty_value(p, w);
    out.iterations = it;
    out.certificate = certificate(p, w, g);
    if (out.certificate > s.optimality_tol && it >= next_polish) {
      // Repeated feature-sign steps until the support itself is optimal; the
      // next sweep then handles coefficients that should enter.
      int moves = 0;
      while (moves < n && polish_support(p, w, g, f)) {
        ++moves;
        if (support_violation(p, w, g) <= s.optimality_tol) break;
      }
      out.certificate = certificate(p, w, g);
      polish_gap = moves > 0 ? 1 : std::min(2 * polish_gap, 64);
      next_polish = it + polish_gap;
    }
    if (s.record_trace) out.trace.push_back(f);
    if (out.certificate <= s.optimality_tol) {
      g.noalias() = p.G * w - p.c;
      out.certificate = certificate(p, w, g);
      if (out.certificate <= s.optimality_tol) {
        out.converged = true;
        return;
      }
    }
    if (stagnated(f_prev, f, s.inner_tol)) {
      g.noalias() = p.G * w - p.c;
      out.certificate = certificate(p, w, g);
      out.converged = out.certificate <= s.optimality_tol;
      return;
    }
    f_prev = f;
  }
  g.noalias() = p.G * w - p.c;
  out.certificate = certificate(p, w, g);
  out.converged = out.certificate <= s.optimality_tol;
}

// Monotone FISTA with backtracking and function-value momentum restarts.
void proximal_gradient(const Problem& p, double lipschitz, Vector& w, const SolverSchedule& s,
                       SparseCode& out) {
  auto smooth = [&](const Vector& v, Vector& grad_half) {
    grad_half.noalias() = p.G * v - p.c;
    return smooth_from_gradient(p, v, grad_half);
  };
  double L = std::max(lipschitz, std::numeric_limits<double>::min());
  Vector x = w;
  Vector gx;
  double fx = smooth(x, gx) + penalty_value(p, x);
  Vector v = x;
  double t = 1.0;
  Vector gv, gz;
  out.converged = false;
  for (int it = 1; it <= s.max_inner_iter; ++it) {
    const double sv = smooth(v, gv);
    Vector z;
    double sz = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      z = v - (2.0 / L) * gv;
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = soft_threshold(z[i], p.thresholds[i] / L);
      sz = smooth(z, gz);
      const Vector d = z - v;
      if (sz <= sv + 2.0 * gv.dot(d) + 0.5 * L * d.squaredNorm() + 1e-12 * std::abs(sv)) break;
      L *= 2.0;
    }
    const double fz = sz + penalty_value(p, z);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const Vector x_prev = x;
    const double f_prev = fx;
    // Near the optimum objective changes drown in rounding; a tie within a
    // few ulps is then settled by the optimality certificate.
    const bool tie = fz <= fx + 8.0 * std::numeric_limits<double>::epsilon() * std::abs(fx);
    if (fz <= fx || (tie && certificate(p, z, gz) < certificate(p, x, gx))) {
      x = z;
      fx = std::min(fx, fz);
      gx = gz;
    }
    v = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;

    out.iterations = it;
    if (s.record_trace) out.trace.push_back(fx);
    out.certificate = certificate(p, x, gx);
    if (out.certificate <= s.optimality_tol) {
      out.converged = true;
      break;
    }
    if (fz > f_prev) {
      // The extrapolated step went uphill: restart the momentum.
      v = x;
      t = 1.0;
    }
  }
  w = x;
}

void check_inputs(const GramCache& dict, const Vector& y, double lambda, const Vector& weights,
                  const SolverSchedule& schedule) {
  schedule.validate();
  if (y.size() != dict.dim()) {
    throw DimensionError("target length " + std::to_string(y.size()) +
                         " does not match dictionary rows " + std::to_string(dict.dim()));
  }
  if (weights.size() != dict.atoms()) {
    throw DimensionError("weight count " + std::to_string(weights.size()) +
                         " does not match dictionary columns " + std::to_string(dict.atoms()));
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be > 0");
  if (!y.allFinite()) throw DataError("target contains non-finite entries");
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw ParameterError("weights must be finite and nonnegative");
  }
}

}  // namespace

SparseCode solve_weighted_l1(const GramCache& dict, const Vector& y, double lambda,
                             const Vector& weights, const SolverSchedule& schedule,
                             const Vector* warm_start) {
  check_inputs(dict, y, lambda, weights, schedule);
  Problem p{dict.dictionary(), y, dict.gram(), dict.dictionary().transpose() * y, y.squaredNorm(), lambda * weights};

  SparseCode out;
  out.lambda = lambda;
  out.norm = Penalty::kWeightedL1;
  Vector w = Vector::Zero(dict.atoms());
  if (warm_start != nullptr) {
    if (warm_start->size() != dict.atoms()) throw DimensionError("warm start has wrong length");
    w = *warm_start;
    // Atoms with zero norm cannot carry weight.
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (p.G(i, i) <= 0.0) w[i] = 0.0;
  }
  if (schedule.step_rule == StepRule::kCoordinateDescent) {
    coordinate_descent(p, w, schedule, out);
  } else {
    proximal_gradient(p, dict.lipschitz(), w, schedule, out);
  }
  out.omega = std::move(w);
  out.objective = penalized_objective(dict.dictionary(), y, out.omega, lambda,
                                      Penalty::kWeightedL1, &weights);
  return out;
}

SparseCode solve_weighted_l1(const Matrix& D, const Vector& y, double lambda,
                             const Vector& weights, const SolverSchedule& schedule) {
  return solve_weighted_l1(GramCache(D), y, lambda, weights, schedule);
}

SparseCode solve_l1(const GramCache& dict, const Vector& y, double lambda,
                    const SolverSchedule& schedule) {
  SparseCode code =
      solve_weighted_l1(dict, y, lambda, Vector::Ones(dict.atoms()), schedule);
  code.norm = Penalty::kL1;
  return code;
}

SparseCode solve_l1(const Matrix& D, const Vector& y, double lambda,
                    const SolverSchedule& schedule) {
  return solve_l1(GramCache(D), y, lambda, schedule);
}

SparseCode solve_l_half(const GramCache& dict, const Vector& y, double lambda,
                        const SolverSchedule& schedule) {
  schedule.validate();
  const Matrix& D = dict.dictionary();
  if (lambda == 0.0) {
    if (y.size() != dict.dim()) throw DimensionError("target length does not match dictionary");
    SparseCode ls;
    ls.lambda = 0.0;
    ls.norm = Penalty::kLHalf;
    ls.omega = D.completeOrthogonalDecomposition().solve(y);
    ls.objective = (y - D * ls.omega).squaredNorm();
    ls.converged = true;
    ls.iterations = 1;
    return ls;
  }

  SparseCode current = solve_l1(dict, y, lambda, schedule);
  int total_iterations = current.iterations;
  bool all_converged = current.converged;
  std::vector<double> trace = std::move(current.trace);

  SparseCode best = current;
  best.objective = penalized_objective(D, y, best.omega, lambda, Penalty::kLHalf);
  // The zero code is always feasible; keep it as a candidate so a spurious
  // local minimum never beats the trivial solution.
  const double zero_objective = y.squaredNorm();

  bool oscillated = false;
  double previous = best.objective;
  for (int round = 0; round < schedule.outer_reweight_iters; ++round) {
    const Vector weights =
        0.5 * (current.omega.array().abs() + schedule.epsilon_smoothing).rsqrt().matrix();
    SparseCode next = solve_weighted_l1(dict, y, lambda, weights, schedule, &current.omega);
    total_iterations += next.iterations;
    all_converged = all_converged && next.converged;
    trace.insert(trace.end(), next.trace.begin(), next.trace.end());

    const double f = penalized_objective(D, y, next.omega, lambda, Penalty::kLHalf);
    if (f < best.objective) {
      best = next;
      best.objective = f;
    }
    if (f > previous + 1e-9 * std::max(1.0, std::abs(previous))) {
      oscillated = true;
      break;
    }
    const bool done = stagnated(previous, f, schedule.inner_tol);
    previous = f;
    current = std::move(next);
    if (done) break;
  }

  if (zero_objective < best.objective) {
    best.omega.setZero();
    best.objective = zero_objective;
  }
  best.lambda = lambda;
  best.norm = Penalty::kLHalf;
  best.iterations = total_iterations;
  best.converged = all_converged && !oscillated;
  best.trace = std::move(trace);
  return best;
}

SparseCode solve_l_half(const Matrix& D, const Vector& y, double lambda,
                        const SolverSchedule& schedule) {
  return solve_l_half(GramCache(D), y, lambda, schedule);
}

SparseCode solve(const GramCache& dict, const Vector& y, double lambda, Penalty norm,
                 const SolverSchedule& schedule) {
  switch (norm) {
    case Penalty::kL1: return solve_l1(dict, y, lambda, schedule);
    case Penalty::kLHalf: return solve_l_half(dict, y, lambda, schedule);
    case Penalty::kWeightedL1: break;
  }
  throw ParameterError("weighted-l1 coding needs explicit weights");
}

double penalized_objective(const Matrix& D, const Vector& y, const Vector& omega, double lambda,
                           Penalty norm, const Vector* weights) {
  if (D.rows() != y.size() || D.cols() != omega.size()) {
    throw DimensionError("objective operands do not compose");
  }
  const double fit = (y - D * omega).squaredNorm();
  switch (norm) {
    case Penalty::kL1: return fit + lambda * omega.lpNorm<1>();
    case Penalty::kLHalf: return fit + lambda * omega.array().abs().sqrt().sum();
    case Penalty::kWeightedL1:
      if (weights == nullptr || weights->size() != omega.size()) {
        throw DimensionError("weighted-l1 objective needs one weight per coefficient");
      }
      return fit + lambda * (weights->array() * omega.array().abs()).sum();
  }
  return fit;
}

double optimality_violation(const Matrix& D, const Vector& y, const Vector& omega, double lambda,
                            const Vector& weights) {
  if (D.rows() != y.size() || D.cols() != omega.size() || weights.size() != omega.size()) {
    throw DimensionError("certificate operands do not compose");
  }
  const Vector grad = 2.0 * (D.transpose() * (D * omega - y));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < omega.size(); ++i) {
    const double t = lambda * weights[i];
    const double viol = omega[i] == 0.0
                            ? std::abs(grad[i]) - t
                            : std::abs(grad[i] + t * (omega[i] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, viol);
  }
  return worst;
}

void write_trace_csv(std::ostream& out, std::string_view label, const SparseCode& code) {
  for (std::size_t i = 0; i < code.trace.size(); ++i) {
    out << label << ',' << i + 1 << ',' << format_double(code.trace[i]) << '\n';
  }
}

}  // namespace hsr
