#pragma once

#include <cmath>
#include <utility>

#include "stts/posterior.hpp"
#include "stts/types.hpp"

namespace stts {

// Markov prior on optimal arms: the successor of the previous optimal arm
// (cyclically) receives mass p, every other arm (1 - p) / (J - 1).
struct MarkovPrior {
  double p = 0.1;
  Index num_arms = 10;

  MarkovPrior() = default;
  MarkovPrior(double strength, Index J) : p(strength), num_arms(J) {
    require(strength >= 0.0 && strength <= 1.0, "MarkovPrior: p outside [0,1]");
    require(J >= 2, "MarkovPrior: need at least two arms");
  }
};

// Gaussian-mixture prior over the per-task mean vector. sigma1 is the rate
// of the exponential gap prior; no run mode draws gaps from it.
struct MixturePriorParams {
  double mu = 0.0;
  double gap = 2.0;
  double sigma0 = 0.4472135954999579;  // sqrt(0.2)
  double sigma1 = 1.0;
  bool perturb = false;

  void validate() const {
    require(gap > 0.0, "MixturePriorParams: gap must be positive");
    require(sigma0 > 0.0, "MixturePriorParams: sigma0 must be positive");
    require(sigma1 > 0.0, "MixturePriorParams: sigma1 must be positive");
  }
};

template <typename Scalar = double>
Vector<Scalar> markov_next_dist(Index prev, const MarkovPrior& prior) {
  const Index J = prior.num_arms;
  require_arm(prev, J, "markov_next_dist");
  const Scalar p = static_cast<Scalar>(prior.p);
  Vector<Scalar> dist =
      Vector<Scalar>::Constant(J, (Scalar(1) - p) / Scalar(J - 1));
  dist((prev + 1) % J) = p;
  return dist;
}

// Entropy in nats with 0 ln 0 = 0.
template <typename Derived>
typename Derived::Scalar conditional_entropy(
    const Eigen::MatrixBase<Derived>& dist) {
  using Scalar = typename Derived::Scalar;
  require((dist.array() >= Scalar(0)).all(),
          "conditional_entropy: negative probability");
  require(std::abs(dist.sum() - Scalar(1)) <= Scalar(1e-9),
          "conditional_entropy: distribution does not sum to 1");
  Scalar h = 0;
  for (Index i = 0; i < dist.size(); ++i) {
    const Scalar q = dist(i);
    if (q > Scalar(0)) h -= q * std::log(q);
  }
  return h;
}

// Component j: arm j ~ N(mu + gap, sigma0^2), every other arm N(mu, sigma0^2).
template <typename Derived>
MixturePosterior<typename Derived::Scalar> build_mixture_prior(
    const Eigen::MatrixBase<Derived>& weights, const MixturePriorParams& params,
    typename Derived::Scalar noise_var = 1) {
  using Scalar = typename Derived::Scalar;
  params.validate();
  const Index J = weights.size();
  require(J >= 1, "build_mixture_prior: empty weight vector");
  Matrix<Scalar> means = Matrix<Scalar>::Constant(J, J, Scalar(params.mu));
  means.diagonal().array() += Scalar(params.gap);
  const Matrix<Scalar> variances =
      Matrix<Scalar>::Constant(J, J, Scalar(params.sigma0 * params.sigma0));
  return MixturePosterior<Scalar>(weights.derived(), std::move(means),
                                  variances, noise_var);
}

// Mean vector of the prior conditional on the optimal arm (no perturbation).
template <typename Scalar = double>
Vector<Scalar> conditional_mean(Index optimal_arm, Index num_arms,
                                const MixturePriorParams& params) {
  require_arm(optimal_arm, num_arms, "conditional_mean");
  Vector<Scalar> theta = Vector<Scalar>::Constant(num_arms, Scalar(params.mu));
  theta(optimal_arm) += Scalar(params.gap);
  return theta;
}

enum class UKind { kCycle = 1, kTwoGroups = 2, kCycleWithSecond = 3 };

UKind u_kind_from_int(int kind);

// Transition-shaped mean matrices used by the Gaussian prior.
//   kCycle:           1 on j2 - j1 in {1, 1 - J}
//   kTwoGroups:       cycle over arms 1..J-2, plus the pair (J-1, J) swapping
//   kCycleWithSecond: kCycle plus 0.5 on j2 - j1 in {2, 2 - J}
template <typename Scalar = double>
Matrix<Scalar> u_matrix(UKind kind, Index J) {
  require(J >= 2, "u_matrix: need at least two arms");
  if (kind != UKind::kCycle) require(J >= 3, "u_matrix: kinds 2 and 3 need J >= 3");
  Matrix<Scalar> U = Matrix<Scalar>::Zero(J, J);
  switch (kind) {
    case UKind::kCycle:
      for (Index j = 0; j < J; ++j) U(j, (j + 1) % J) = Scalar(1);
      break;
    case UKind::kTwoGroups: {
      const Index group = J - 2;
      for (Index j = 0; j < group; ++j) U(j, (j + 1) % group) = Scalar(1);
      U(J - 2, J - 1) = Scalar(1);
      U(J - 1, J - 2) = Scalar(1);
      break;
    }
    case UKind::kCycleWithSecond:
      for (Index j = 0; j < J; ++j) {
        U(j, (j + 1) % J) = Scalar(1);
        U(j, (j + 2) % J) = Scalar(0.5);
      }
      break;
  }
  return U;
}

struct GaussianUPrior {
  MatrixXd U;
  double mu0 = 5.0;
  double sigma0 = 0.5;

  GaussianUPrior() = default;
  GaussianUPrior(MatrixXd u, double magnitude, double sd)
      : U(std::move(u)), mu0(magnitude), sigma0(sd) {
    require(U.rows() == U.cols() && U.rows() >= 2,
            "GaussianUPrior: U must be square with J >= 2");
    require((U.array() >= 0.0).all() && (U.array() <= 1.0).all(),
            "GaussianUPrior: U entries must lie in [0, 1]");
    require(mu0 > 0.0 && sigma0 > 0.0,
            "GaussianUPrior: mu0 and sigma0 must be positive");
  }

  Index num_arms() const { return U.rows(); }
};

// Prior mean mu0 * U[prev, :] and variance sigma0^2 (times identity).
inline std::pair<VectorXd, double> gaussian_prior_from_u(
    Index prev, const GaussianUPrior& prior) {
  require_arm(prev, prior.num_arms(), "gaussian_prior_from_u");
  return {prior.mu0 * prior.U.row(prev).transpose(),
          prior.sigma0 * prior.sigma0};
}

// Prior for the first task: each arm is optimal with equal probability and,
// given arm j, the mean vector is N(mu0 e_j, sigma0^2 I).
MixturePosteriord gaussian_u_first_task_prior(const GaussianUPrior& prior,
                                              double noise_var);

// Single-Gaussian prior for later tasks.
MixturePosteriord gaussian_u_task_prior(Index prev, const GaussianUPrior& prior,
                                        double noise_var);

}  // namespace stts
