#include "stts/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "stts/stats.hpp"

namespace stts {

bool bbts_stop(const BBTSState& state, RngStream& rng, int num_draws) {
  const Index best = state.best();
  const Index J = state.num_arms();
  const auto allowed =
      static_cast<long>(std::floor((1.0 - state.p_max) * double(num_draws)));
  long failures = 0;
  for (int d = 0; d < num_draws; ++d) {
    const double top = rng.beta(state.alpha(best), state.beta_counts(best));
    for (Index i = 0; i < J; ++i) {
      if (i == best) continue;
      if (rng.beta(state.alpha(i), state.beta_counts(i)) >= top) {
        ++failures;
        break;
      }
    }
    if (failures > allowed) return false;
  }
  return true;
}

namespace {

// 8-point Gauss-Legendre on [-1, 1].
constexpr double kNodes[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                              -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                              0.7966664774136267,  0.9602898564975363};
constexpr double kWeights[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                0.2223810344533745, 0.1012285362903763};

template <typename F>
double integrate(F&& f, double lo, double hi, int pieces) {
  const double h = (hi - lo) / pieces;
  double total = 0.0;
  for (int k = 0; k < pieces; ++k) {
    const double mid = lo + (k + 0.5) * h;
    for (int i = 0; i < 8; ++i) total += kWeights[i] * f(mid + 0.5 * h * kNodes[i]);
  }
  return 0.5 * h * total;
}

}  // namespace

double bbts_failure_prob(const BBTSState& state) {
  const Index best = state.best();
  // Arms with equal counts share a CDF, so group them.
  std::map<std::pair<double, double>, int> groups;
  for (Index i = 0; i < state.num_arms(); ++i) {
    if (i != best) ++groups[{state.alpha(i), state.beta_counts(i)}];
  }
  if (groups.empty()) return 0.0;
  const double a = state.alpha(best), b = state.beta_counts(best);
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  auto density = [&](double x) {
    return std::exp(log_norm + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x));
  };
  // (1 - prod_j F_j(x)) times the best arm's density. The upper tails are
  // evaluated directly so that values near zero keep their precision.
  auto integrand = [&](double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    double log_all_below = 0.0;
    for (const auto& [ab, count] : groups) {
      const double upper = regularized_incomplete_beta(ab.second, ab.first, 1.0 - x);
      if (upper >= 1.0) return density(x);
      log_all_below += count * std::log1p(-upper);
    }
    return -std::expm1(log_all_below) * density(x);
  };
  // Break points around the best arm's bulk, where the density is peaked.
  const double m = a / (a + b);
  const double sd = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)));
  std::vector<double> cuts{0.0};
  for (double k : {-8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0}) {
    const double c = m + k * sd;
    if (c > cuts.back() && c < 1.0) cuts.push_back(c);
  }
  cuts.push_back(1.0);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += integrate(integrand, cuts[i], cuts[i + 1], 16);
  }
  return std::clamp(total, 0.0, 1.0);
}

bool bbts_stop_exact(const BBTSState& state) {
  return 1.0 - bbts_failure_prob(state) >= state.p_max;
}

VectorXd bbts_target_posterior(const BBTSState& state, double hit_rate,
                               double false_alarm_rate) {
  require(hit_rate > 0.0 && hit_rate < 1.0 && false_alarm_rate > 0.0 &&
              false_alarm_rate < 1.0,
          "bbts_target_posterior: rates must lie in (0,1)");
  const double ls = std::log(hit_rate / false_alarm_rate);
  const double lf = std::log((1.0 - hit_rate) / (1.0 - false_alarm_rate));
  const VectorXd loglik = ls * (state.alpha.array() - 1.0) + lf * (state.beta_counts.array() - 1.0);
  VectorXd w = (loglik.array() - loglik.maxCoeff()).exp();
  return w / w.sum();
}

}  // namespace stts
