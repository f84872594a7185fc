#pragma once

#include <cmath>
#include <limits>

#include "stts/algorithms.hpp"
#include "stts/posterior.hpp"
#include "stts/rng.hpp"
#include "stts/types.hpp"

namespace stts {

enum class StopMode { kFixedConfidence, kFixedBudget };

// kMomentMatched: pairwise standardized gaps of the moment-matched
//   Gaussians against gamma_t = sqrt(2 ln(ln(t) M / delta)).
// kAsymptotic: Chernoff GLR statistic against
//   4 ln(4 + ln t) + 2 C (ln((J - 1) / delta_M) / 2).
enum class GammaVariant { kMomentMatched, kAsymptotic };

// How the moment-matched threshold groups its inner logarithm:
//   kLogLogT:  ln(ln(t) * M / delta)
//   kLogTMD:   ln(ln(t * M / delta))
enum class ThresholdGrouping { kLogLogT, kLogTMD };

struct StoppingConfig {
  StopMode mode = StopMode::kFixedConfidence;
  double delta = 0.1;
  Index M = 20;
  Index t_max = 100;
  GammaVariant gamma_variant = GammaVariant::kMomentMatched;
  ThresholdGrouping grouping = ThresholdGrouping::kLogLogT;
  double C = 1.0;
  Index min_t = 3;

  void validate() const {
    require(delta > 0.0 && delta < 1.0, "StoppingConfig: delta must lie in (0,1)");
    require(M >= 1, "StoppingConfig: M must be >= 1");
    if (mode == StopMode::kFixedBudget) {
      require(t_max >= 1, "StoppingConfig: t_max must be >= 1");
    }
    if (mode == StopMode::kFixedConfidence &&
        gamma_variant == GammaVariant::kMomentMatched) {
      require(min_t >= 3, "StoppingConfig: min_t must be >= 3 for the moment-matched rule");
    }
    require(min_t >= 1, "StoppingConfig: min_t must be >= 1");
  }
};

inline double bonferroni(double delta, Index M) {
  require(delta > 0.0 && delta < 1.0, "bonferroni: delta must lie in (0,1)");
  require(M >= 1, "bonferroni: M must be >= 1");
  return delta / double(M);
}

template <typename Scalar>
struct GLRInputs {
  Vector<Index> pulls;
  Vector<Scalar> means;
  Vector<Scalar> variances;
  Scalar noise_var = Scalar(1);
};

template <typename Scalar>
GLRInputs<Scalar> glr_inputs(const MixturePosterior<Scalar>& post) {
  GLRInputs<Scalar> in;
  in.pulls = post.stats().pulls;
  post.all_moments(in.means, in.variances);
  in.noise_var = post.noise_var();
  return in;
}

// Chernoff generalized likelihood ratio statistic
//   max_i min_{j != i} Z(i, j)
// with Z(i, j) = N_i KL(mu_i, mu_ij) + N_j KL(mu_j, mu_ij) when mu_i > mu_j
// and 0 otherwise, mu_ij the pull-weighted mean and KL the Gaussian
// divergence at the known noise variance. Zero if any arm is unpulled.
template <typename Scalar>
Scalar chernoff_glr(const GLRInputs<Scalar>& in) {
  const Index J = in.means.size();
  require(in.pulls.size() == J, "chernoff_glr: pulls/means length mismatch");
  require(in.noise_var > Scalar(0), "chernoff_glr: noise_var must be positive");
  if (J < 2 || (in.pulls.array() <= 0).any()) return Scalar(0);
  auto kl = [&](Scalar a, Scalar b) {
    return (a - b) * (a - b) / (Scalar(2) * in.noise_var);
  };
  Scalar best = Scalar(0);
  for (Index i = 0; i < J; ++i) {
    Scalar worst = std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < J && worst > Scalar(0); ++j) {
      if (j == i) continue;
      Scalar z = Scalar(0);
      if (in.means(j) < in.means(i)) {
        const Scalar ni = Scalar(in.pulls(i));
        const Scalar nj = Scalar(in.pulls(j));
        const Scalar pooled = (ni * in.means(i) + nj * in.means(j)) / (ni + nj);
        z = ni * kl(in.means(i), pooled) + nj * kl(in.means(j), pooled);
      }
      worst = std::min(worst, z);
    }
    best = std::max(best, worst);
  }
  return best;
}

inline double moment_matched_threshold(Index t, const StoppingConfig& cfg) {
  require(t >= 2, "moment_matched_threshold: t must be >= 2");
  const double log_t = std::log(double(t));
  const double inner = cfg.grouping == ThresholdGrouping::kLogLogT
                           ? std::log(log_t * double(cfg.M) / cfg.delta)
                           : std::log(std::log(double(t) * double(cfg.M) / cfg.delta));
  return std::sqrt(2.0 * std::max(inner, 0.0));
}

// min over j != psi of (mu_psi - mu_j) / sqrt(var_psi + var_j), psi the
// argmax of the means.
template <typename Derived1, typename Derived2>
typename Derived1::Scalar moment_matched_statistic(
    const Eigen::MatrixBase<Derived1>& means,
    const Eigen::MatrixBase<Derived2>& variances) {
  using Scalar = typename Derived1::Scalar;
  const Index psi = argmax(means);
  Scalar worst = std::numeric_limits<Scalar>::infinity();
  for (Index j = 0; j < means.size(); ++j) {
    if (j == psi) continue;
    const Scalar denom = std::sqrt(variances(psi) + variances(j));
    const Scalar diff = means(psi) - means(j);
    const Scalar z = denom > Scalar(0) ? diff / denom
                                       : (diff > Scalar(0)
                                              ? std::numeric_limits<Scalar>::infinity()
                                              : Scalar(0));
    worst = std::min(worst, z);
  }
  return worst;
}

template <typename Derived1, typename Derived2>
bool gaussian_mixture_stop(const Eigen::MatrixBase<Derived1>& means,
                           const Eigen::MatrixBase<Derived2>& variances,
                           Index t, const StoppingConfig& cfg) {
  if (t < cfg.min_t) return false;
  return moment_matched_statistic(means, variances) >=
         moment_matched_threshold(t, cfg);
}

inline double asymptotic_threshold(Index t, Index J, double delta, double C) {
  require(t >= 1, "asymptotic_threshold: t must be >= 1");
  require(J >= 2, "asymptotic_threshold: J must be >= 2");
  return 4.0 * std::log(4.0 + std::log(double(t))) +
         2.0 * C * (std::log(double(J - 1) / delta) / 2.0);
}

// Fixed-confidence check for a posterior-based learner at round t.
template <typename Scalar>
bool posterior_stop(const MixturePosterior<Scalar>& post, Index t,
                    const StoppingConfig& cfg) {
  if (t < cfg.min_t) return false;
  if (cfg.gamma_variant == GammaVariant::kMomentMatched) {
    Vector<Scalar> means, variances;
    post.all_moments(means, variances);
    return gaussian_mixture_stop(means, variances, t, cfg);
  }
  const double delta_task = bonferroni(cfg.delta, cfg.M);
  return chernoff_glr(glr_inputs(post)) >=
         asymptotic_threshold(t, post.num_arms(), delta_task, cfg.C);
}

// Bayes decision: argmax of posterior means, lowest index on ties.
template <typename Scalar>
Index decide(const MixturePosterior<Scalar>& post) {
  return argmax(post.posterior_means());
}

inline bool budget_stop(Index t, const StoppingConfig& cfg) {
  return t >= cfg.t_max;
}

inline double bbts_p_max(double delta, Index M) {
  return 1.0 - delta / (1000.0 * double(M));
}

// Monte Carlo estimate (num_draws Beta draws per arm) of the probability
// that the current best arm's success rate exceeds every other arm's.
// Stops drawing as soon as the p_max target becomes unreachable.
bool bbts_stop(const BBTSState& state, RngStream& rng, int num_draws = 10000);

// Probability that some other arm's success rate is at least the best
// arm's, by one-dimensional quadrature over the best arm's Beta density.
double bbts_failure_prob(const BBTSState& state);
// Same criterion as bbts_stop without Monte Carlo error.
bool bbts_stop_exact(const BBTSState& state);

// Posterior over which single arm is the target when successes occur with
// probability hit_rate on the target and false_alarm_rate elsewhere, under
// a uniform prior. Counts come from the Beta parameters minus the Beta(1,1)
// prior.
VectorXd bbts_target_posterior(const BBTSState& state, double hit_rate,
                               double false_alarm_rate);

}  // namespace stts
