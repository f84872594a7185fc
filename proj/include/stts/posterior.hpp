#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "stts/rng.hpp"
#include "stts/types.hpp"

namespace stts {

template <typename Scalar>
struct SufficientStats {
  Vector<Index> pulls;
  Vector<Scalar> reward_sums;
  Scalar noise_var = Scalar(1);

  SufficientStats() = default;
  SufficientStats(Index num_arms, Scalar noise_variance)
      : pulls(Vector<Index>::Zero(num_arms)),
        reward_sums(Vector<Scalar>::Zero(num_arms)),
        noise_var(noise_variance) {}

  Index total_pulls() const { return pulls.sum(); }
  Scalar empirical_mean(Index arm) const {
    return pulls(arm) > 0 ? reward_sums(arm) / Scalar(pulls(arm)) : Scalar(0);
  }
};

// Exact posterior over a J-vector of mean rewards when the prior is a
// finite mixture of independent Gaussians and rewards are Gaussian with
// known variance.
//
// Component k has weight w_k and, for each arm i, a Gaussian belief
// N(means(k, i), variances(k, i)). Observing a reward on arm i touches only
// column i, so an update costs O(K). Weights live in log space.
//
// The mixture built by build_mixture_prior has K = J components where
// component j means "arm j is optimal"; a plain Gaussian prior is K = 1.
template <typename Scalar>
class MixturePosterior {
 public:
  using Vec = Vector<Scalar>;
  using Mat = Matrix<Scalar>;

  static constexpr Scalar kWeightFloor = Scalar(1e-300);

  MixturePosterior() = default;

  MixturePosterior(const Vec& weights, Mat means, Mat variances,
                   Scalar noise_var)
      : means_(std::move(means)),
        variances_(std::move(variances)),
        stats_(means_.cols(), noise_var) {
    require(weights.size() == means_.rows(),
            "MixturePosterior: one weight per component required");
    require(means_.rows() >= 1 && means_.cols() >= 1,
            "MixturePosterior: empty mixture");
    require(variances_.rows() == means_.rows() &&
                variances_.cols() == means_.cols(),
            "MixturePosterior: means/variances shape mismatch");
    // Zero variance is allowed and means a known value.
    require((variances_.array() >= Scalar(0)).all(),
            "MixturePosterior: variances must be nonnegative");
    require(noise_var > Scalar(0), "MixturePosterior: noise_var must be > 0");
    require((weights.array() >= Scalar(0)).all(),
            "MixturePosterior: negative weight");
    const Scalar total = weights.sum();
    require(total > Scalar(0), "MixturePosterior: weights sum to zero");
    log_weights_.resize(weights.size());
    for (Index k = 0; k < weights.size(); ++k) {
      log_weights_(k) = std::log(std::max(weights(k) / total, kWeightFloor));
    }
    normalize();
  }

  // Single Gaussian N(mean, diag(variance)).
  static MixturePosterior gaussian(const Vec& mean, const Vec& variance,
                                   Scalar noise_var) {
    return MixturePosterior(Vec::Ones(1), mean.transpose(),
                            variance.transpose(), noise_var);
  }

  Index num_arms() const { return means_.cols(); }
  Index num_components() const { return means_.rows(); }

  const Vec& log_weights() const { return log_weights_; }
  const Vec& weights() const { return weights_; }
  const Mat& means() const { return means_; }
  const Mat& variances() const { return variances_; }
  const SufficientStats<Scalar>& stats() const { return stats_; }
  Scalar noise_var() const { return stats_.noise_var; }

  // Conjugate update with one reward on `arm`.
  void update(Index arm, Scalar reward) {
    require_arm(arm, num_arms(), "MixturePosterior::update");
    require(std::isfinite(static_cast<double>(reward)),
            "MixturePosterior::update: non-finite reward");
    const Scalar noise = stats_.noise_var;
    const Scalar half_log_2pi =
        Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
    for (Index k = 0; k < num_components(); ++k) {
      const Scalar m = means_(k, arm);
      const Scalar v = variances_(k, arm);
      const Scalar pred_var = v + noise;
      const Scalar resid = reward - m;
      log_weights_(k) += -half_log_2pi - Scalar(0.5) * std::log(pred_var) -
                         Scalar(0.5) * resid * resid / pred_var;
      if (v > Scalar(0)) {
        const Scalar precision = Scalar(1) / v + Scalar(1) / noise;
        variances_(k, arm) = Scalar(1) / precision;
        means_(k, arm) = (m / v + reward / noise) / precision;
      }
    }
    stats_.pulls(arm) += 1;
    stats_.reward_sums(arm) += reward;
    normalize();
  }

  // One joint draw of the mean-reward vector.
  Vec sample(RngStream& rng) const {
    const Index k = sample_component(rng);
    Vec draw(num_arms());
    for (Index i = 0; i < num_arms(); ++i) {
      draw(i) = means_(k, i) +
                std::sqrt(variances_(k, i)) * static_cast<Scalar>(rng.normal());
    }
    return draw;
  }

  // argmax of one posterior draw, without materializing it.
  Index sample_argmax(RngStream& rng) const {
    const Index k = sample_component(rng);
    Index best = 0;
    Scalar best_value = -std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < num_arms(); ++i) {
      const Scalar value =
          means_(k, i) +
          std::sqrt(variances_(k, i)) * static_cast<Scalar>(rng.normal());
      if (value > best_value) {
        best_value = value;
        best = i;
      }
    }
    return best;
  }

  // Marginal mean and variance of one arm (law of total variance).
  std::pair<Scalar, Scalar> moments(Index arm) const {
    require_arm(arm, num_arms(), "MixturePosterior::moments");
    const Scalar mean = weights_.dot(means_.col(arm));
    const Scalar second =
        weights_.dot((variances_.col(arm).array() +
                      means_.col(arm).array().square())
                         .matrix());
    const Scalar min_var = variances_.col(arm).minCoeff();
    return {mean, std::max(second - mean * mean, min_var)};
  }

  // Marginal means and variances of all arms.
  void all_moments(Vec& mean, Vec& variance) const {
    mean.noalias() = means_.transpose() * weights_;
    variance.noalias() =
        (variances_.array() + means_.array().square()).matrix().transpose() *
        weights_;
    variance.array() -= mean.array().square();
    for (Index i = 0; i < num_arms(); ++i) {
      variance(i) = std::max(variance(i), variances_.col(i).minCoeff());
    }
  }

  Vec posterior_means() const { return means_.transpose() * weights_; }

  // P(A* = j | history). Only meaningful for the J-component mixture.
  Vec prob_optimal() const {
    require(num_components() == num_arms(),
            "prob_optimal: requires one component per arm");
    return weights_;
  }

  // Density of the per-arm marginal at x.
  Scalar marginal_density(Index arm, Scalar x) const {
    Scalar density = 0;
    for (Index k = 0; k < num_components(); ++k) {
      const Scalar v = variances_(k, arm);
      const Scalar d = x - means_(k, arm);
      density += weights_(k) * std::exp(-Scalar(0.5) * d * d / v) /
                 std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar> * v);
    }
    return density;
  }

 private:
  Index sample_component(RngStream& rng) const {
    if (num_components() == 1) return 0;
    Scalar u = static_cast<Scalar>(rng.uniform());
    for (Index k = 0; k < num_components() - 1; ++k) {
      u -= weights_(k);
      if (u < Scalar(0)) return k;
    }
    return num_components() - 1;
  }

  void normalize() {
    const Scalar floor = std::log(kWeightFloor);
    for (int pass = 0; pass < 2; ++pass) {
      const Scalar top = log_weights_.maxCoeff();
      const Scalar lse =
          top + std::log((log_weights_.array() - top).exp().sum());
      log_weights_.array() -= lse;
      if (pass == 0) {
        if ((log_weights_.array() >= floor).all()) break;
        log_weights_ = log_weights_.cwiseMax(floor);
      }
    }
    weights_ = log_weights_.array().exp().matrix();
  }

  Vec log_weights_;
  Vec weights_;
  Mat means_;
  Mat variances_;
  SufficientStats<Scalar> stats_;
};

// Value-returning update.
template <typename Scalar>
MixturePosterior<Scalar> updated(MixturePosterior<Scalar> post, Index arm,
                                 Scalar reward) {
  post.update(arm, reward);
  return post;
}

using MixturePosteriord = MixturePosterior<double>;

}  // namespace stts
