#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "stts/types.hpp"

namespace stts {

// Inputs for the fixed-budget error bound. One gap and one conditional
// entropy (nats) per task.
struct BoundInputs {
  Index n = 100;
  Index J = 10;
  VectorXd gaps;
  VectorXd entropies;
  double mistake_cost = 1.0;

  Index M() const { return gaps.size(); }
  void validate() const {
    require(n >= 1, "BoundInputs: n must be >= 1");
    require(J >= 2, "BoundInputs: J must be >= 2");
    require(gaps.size() >= 1 && gaps.size() == entropies.size(),
            "BoundInputs: need one gap and one entropy per task");
    require((gaps.array() > 0.0).all(), "BoundInputs: gaps must be positive");
    require((entropies.array() >= 0.0).all() &&
                (entropies.array() <= std::log(double(J)) + 1e-12).all(),
            "BoundInputs: entropies must lie in [0, ln J]");
  }
};

struct BoundTerms {
  double main_term = 0.0;
  double remainder_term = 0.0;
  double total = 0.0;
};

// Per-task error probabilities p_m = (6 / gap_m) sqrt(ln(J(1+n)) H_m / (1+n)),
// unclipped.
inline VectorXd per_task_error_terms(const BoundInputs& in) {
  in.validate();
  const double n1 = double(in.n) + 1.0;
  const double scale = std::sqrt(std::log(double(in.J) * n1) / n1);
  return (6.0 * scale * in.entropies.array().sqrt() / in.gaps.array()).matrix();
}

// main = (1/M) sum_m p_m
// remainder = 1 - (1/M) sum_m prod_{j<m} (1 - min(p_j, 1))
inline BoundTerms theorem1_bound(const BoundInputs& in) {
  const VectorXd p = per_task_error_terms(in);
  const double M = double(in.M());
  BoundTerms out;
  out.main_term = p.sum() / M;
  double survival = 1.0;
  double accumulated = 0.0;
  for (Index m = 0; m < p.size(); ++m) {
    accumulated += survival;
    survival *= 1.0 - std::clamp(p(m), 0.0, 1.0);
  }
  out.remainder_term = 1.0 - accumulated / M;
  out.total = out.main_term + out.remainder_term;
  return out;
}

struct OracleBound {
  double error_sum = 0.0;
  double expected_mistake_cost = 0.0;
};

// Truth revealed after every task: sum_m min(p_m, 1) and c times that.
inline OracleBound oracle_bound(const BoundInputs& in) {
  const VectorXd p = per_task_error_terms(in);
  OracleBound out;
  out.error_sum = p.cwiseMin(1.0).sum();
  out.expected_mistake_cost = in.mistake_cost * out.error_sum;
  return out;
}

// beta on the best arm, (1 - beta) / (J - 1) on each other arm.
template <typename Scalar = double>
Vector<Scalar> optimal_allocation(Index J, Scalar beta, Index best_arm = 0) {
  require(J >= 2, "optimal_allocation: J must be >= 2");
  require(beta > Scalar(0) && beta <= Scalar(1), "optimal_allocation: beta in (0,1]");
  require_arm(best_arm, J, "optimal_allocation");
  Vector<Scalar> p = Vector<Scalar>::Constant(J, (Scalar(1) - beta) / Scalar(J - 1));
  p(best_arm) = beta;
  return p;
}

// KL(p || q) with 0 ln 0 = 0; +infinity when p puts mass where q does not.
template <typename Derived1, typename Derived2>
typename Derived1::Scalar kl_discrete(const Eigen::MatrixBase<Derived1>& p,
                                      const Eigen::MatrixBase<Derived2>& q) {
  using Scalar = typename Derived1::Scalar;
  require(p.size() == q.size(), "kl_discrete: dimension mismatch");
  Scalar kl = 0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p(i) <= Scalar(0)) continue;
    if (q(i) <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
    kl += p(i) * std::log(p(i) / q(i));
  }
  return kl;
}

struct AllocationSnapshot {
  Vector<Index> counts;
  Index t = 0;
  Index best_arm = 0;
};

struct AllocationPoint {
  Index t = 0;
  double kl = 0.0;
};

// KL(p_t, p*) at each checkpoint, p_t = counts / t. Snapshots at t = 0 are
// skipped. `run_length` bounds the admissible checkpoints.
std::vector<AllocationPoint> allocation_trace(
    const std::vector<AllocationSnapshot>& snapshots, Index J, double beta,
    Index run_length);

}  // namespace stts
