#include "stts/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stts {

BRState::BRState(Index J, double noise_variance, double delta,
                 double shrink_factor, BRRadius kind)
    : surviving(J),
      sums(VectorXd::Zero(J)),
      pulls(Vector<Index>::Zero(J)),
      noise_var(noise_variance),
      delta_task(delta),
      shrink(shrink_factor),
      radius_kind(kind),
      num_arms(J) {
  require(J >= 1, "BRState: J must be positive");
  require(noise_variance > 0.0, "BRState: noise_var must be positive");
  require(delta > 0.0 && delta < 1.0, "BRState: delta must lie in (0,1)");
  require(shrink_factor > 0.0 && shrink_factor <= 1.0,
          "BRState: shrink must lie in (0,1]");
  std::iota(surviving.begin(), surviving.end(), Index{0});
}

double BRState::mean(Index arm) const {
  return pulls(arm) > 0 ? sums(arm) / double(pulls(arm)) : 0.0;
}

double BRState::radius(Index arm) const {
  if (pulls(arm) == 0 || round == 0) return std::numeric_limits<double>::infinity();
  const double n = double(pulls(arm));
  if (radius_kind == BRRadius::kLil) {
    const double w = std::sqrt(delta_task / (6.0 * double(num_arms)));
    return shrink * std::sqrt(16.0 * noise_var * std::log(std::log2(2.0 * n) / w) / n);
  }
  const double t = double(round);
  const double log_term = std::log(4.0 * double(num_arms) * t * t / delta_task);
  return shrink * std::sqrt(2.0 * noise_var * log_term / n);
}

Index BRState::leader() const {
  Index best = surviving.front();
  for (Index a : surviving) {
    if (mean(a) > mean(best)) best = a;
  }
  return best;
}

void BRState::observe(Index arm, double reward) {
  require_arm(arm, num_arms, "BRState::observe");
  sums(arm) += reward;
  pulls(arm) += 1;
}

BRRound br_round(BRState& state) {
  require(!state.surviving.empty(), "br_round: surviving set is empty");
  // A batch is complete when every survivor has been pulled round+1 times.
  const bool batch_done =
      std::all_of(state.surviving.begin(), state.surviving.end(),
                  [&](Index a) { return state.pulls(a) >= state.round + 1; });
  if (batch_done) {
    state.round += 1;
    double best_lower = -std::numeric_limits<double>::infinity();
    for (Index a : state.surviving) {
      best_lower = std::max(best_lower, state.mean(a) - state.radius(a));
    }
    const Index keep = state.leader();
    std::vector<Index> next;
    for (Index a : state.surviving) {
      if (a == keep || state.mean(a) + state.radius(a) >= best_lower) next.push_back(a);
    }
    state.surviving = std::move(next);
  }
  BRRound out;
  out.surviving = state.surviving;
  out.arms = state.done() ? std::vector<Index>{state.surviving.front()}
                          : state.surviving;
  return out;
}

BBTSState::BBTSState(Index J, double score_threshold, double stop_probability)
    : alpha(VectorXd::Ones(J)),
      beta_counts(VectorXd::Ones(J)),
      threshold(score_threshold),
      p_max(stop_probability) {
  require(J >= 1, "BBTSState: J must be positive");
  require(stop_probability > 0.0 && stop_probability < 1.0,
          "BBTSState: p_max must lie in (0,1)");
}

Index BBTSState::best() const {
  const VectorXd mean = alpha.array() / (alpha.array() + beta_counts.array());
  return argmax(mean);
}

Index bbts_step(const BBTSState& state, RngStream& rng) {
  Index best = 0;
  double best_value = -1.0;
  for (Index i = 0; i < state.num_arms(); ++i) {
    const double draw = rng.beta(state.alpha(i), state.beta_counts(i));
    if (draw > best_value) {
      best_value = draw;
      best = i;
    }
  }
  return best;
}

void bbts_update(BBTSState& state, Index arm, double reward) {
  require_arm(arm, state.num_arms(), "bbts_update");
  if (reward > state.threshold) {
    state.alpha(arm) += 1.0;
  } else {
    state.beta_counts(arm) += 1.0;
  }
}

}  // namespace stts
