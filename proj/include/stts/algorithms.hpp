#pragma once

#include <cmath>
#include <vector>

#include "stts/posterior.hpp"
#include "stts/priors.hpp"
#include "stts/rng.hpp"
#include "stts/types.hpp"

namespace stts {

struct TopTwoConfig {
  double beta = 0.5;
  int max_resample = 100;

  void validate() const {
    require(beta > 0.0 && beta <= 1.0, "TopTwoConfig: beta must lie in (0, 1]");
    require(max_resample >= 1, "TopTwoConfig: max_resample must be >= 1");
  }
};

// Top-two Thompson sampling. The leader is the argmax of one posterior draw;
// with probability 1 - beta the pull goes to the argmax of the first
// re-draw that differs from the leader. If max_resample re-draws all agree
// with the leader, the leader is pulled.
//
// The coin is flipped before re-drawing; this has the same law as flipping
// after and skips the re-draws when the leader is pulled anyway.
template <typename Scalar>
Index top_two_select(const MixturePosterior<Scalar>& post,
                     const TopTwoConfig& cfg, RngStream& rng) {
  const Index leader = post.sample_argmax(rng);
  if (cfg.beta >= 1.0 || rng.bernoulli(cfg.beta)) return leader;
  for (int attempt = 0; attempt < cfg.max_resample; ++attempt) {
    const Index challenger = post.sample_argmax(rng);
    if (challenger != leader) return challenger;
  }
  return leader;
}

// Prior used when the language model is ignored: uniform mixture weights.
template <typename Scalar = double>
MixturePosterior<Scalar> vtts_prior(Index J, const MixturePriorParams& params,
                                    Scalar noise_var = 1) {
  require(J >= 1, "vtts_prior: J must be positive");
  return build_mixture_prior(Vector<Scalar>::Constant(J, Scalar(1) / Scalar(J)),
                             params, noise_var);
}

inline Index random_select(Index J, RngStream& rng) {
  require(J >= 1, "random_select: J must be positive");
  return static_cast<Index>(rng.uniform_index(J));
}

// Confidence radius used by batch racing, before the shrink factor.
//   kLil:      sqrt(16 noise_var ln(log2(2N) / w) / N), w = sqrt(delta_task / (6 J))
//   kAnytime:  sqrt(2 noise_var ln(4 J t^2 / delta_task) / N), t completed batches
enum class BRRadius { kLil, kAnytime };

struct BRState {
  std::vector<Index> surviving;
  VectorXd sums;
  Vector<Index> pulls;
  double noise_var = 1.0;
  double delta_task = 0.005;
  double shrink = 0.25;
  BRRadius radius_kind = BRRadius::kLil;
  Index num_arms = 0;
  Index round = 0;

  BRState() = default;
  BRState(Index J, double noise_variance, double delta, double shrink_factor = 0.25,
          BRRadius kind = BRRadius::kLil);

  double mean(Index arm) const;
  double radius(Index arm) const;
  bool done() const { return surviving.size() == 1; }
  // Empirical best among the survivors (lowest index on ties).
  Index leader() const;
  void observe(Index arm, double reward);
};

struct BRRound {
  std::vector<Index> arms;
  std::vector<Index> surviving;
};

// Applies elimination using the statistics gathered so far (if any batch
// has completed), then returns the arms to pull in the next batch. When a
// single arm survives, `arms` holds just that arm and the caller stops.
BRRound br_round(BRState& state);

// Beta-Bernoulli Thompson sampling on binarized scores.
struct BBTSState {
  VectorXd alpha;
  VectorXd beta_counts;
  double threshold = 0.0;
  double p_max = 0.999995;

  BBTSState() = default;
  BBTSState(Index J, double score_threshold, double stop_probability);
  Index num_arms() const { return alpha.size(); }
  // Arm with the largest posterior mean success rate.
  Index best() const;
};

Index bbts_step(const BBTSState& state, RngStream& rng);
// Success iff reward > threshold (a score exactly at the threshold fails).
void bbts_update(BBTSState& state, Index arm, double reward);

}  // namespace stts
