#include <cmath>
#include <vector>

#include "doctest.h"

#include "stts/posterior.hpp"
#include "stts/priors.hpp"
#include "stts/rng.hpp"

using namespace stts;

namespace {

double normal_pdf(double x, double m, double v) {
  return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2.0 * M_PI * v);
}

// Brute-force Bayes on a grid: the joint prior is a mixture over which arm
// is optimal, so the posterior marginal of arm `a` is obtained by summing,
// over components, the prior weight times the evidence of every arm under
// that component (each a 1-D grid integral) times the grid posterior of
// arm `a`. Nothing here uses conjugate formulas.
struct Observation {
  Index arm;
  double reward;
};

std::vector<double> grid_marginal(const VectorXd& weights, const MixturePriorParams& params,
                                  double noise_var, const std::vector<Observation>& obs,
                                  Index arm, const std::vector<double>& grid, double h) {
  const Index J = weights.size();
  const double s2 = params.sigma0 * params.sigma0;
  std::vector<double> out(grid.size(), 0.0);
  std::vector<double> comp_mass(J, 0.0);
  std::vector<std::vector<double>> comp_density(J, std::vector<double>(grid.size()));
  for (Index k = 0; k < J; ++k) {
    double evidence = weights(k);
    for (Index i = 0; i < J; ++i) {
      const double m = params.mu + (i == k ? params.gap : 0.0);
      double z = 0.0;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        double like = normal_pdf(grid[g], m, s2);
        for (const auto& o : obs) {
          if (o.arm == i) like *= normal_pdf(o.reward, grid[g], noise_var);
        }
        if (i == arm) comp_density[k][g] = like;
        z += like * h;
      }
      evidence *= z;
      if (i == arm) {
        for (auto& d : comp_density[k]) d /= z;
      }
    }
    comp_mass[k] = evidence;
  }
  double total = 0.0;
  for (double m : comp_mass) total += m;
  for (Index k = 0; k < J; ++k) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      out[g] += comp_mass[k] / total * comp_density[k][g];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("conjugate single component") {
  MixturePriorParams params;
  params.mu = 0.0;
  params.gap = 2.0;
  params.sigma0 = std::sqrt(0.2);
  // point mass on a component in which arm 1 is not boosted: arm 1 ~ N(0, 0.2)
  VectorXd w = VectorXd::Zero(2);
  w(0) = 1.0;
  MixturePosteriord post = build_mixture_prior(w, params, 1.0);
  post.update(1, 2.0);
  const auto [m, v] = post.moments(1);
  CHECK(m == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(v == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("a high reward raises its component's weight") {
  MixturePriorParams params;
  MixturePosteriord post = build_mixture_prior(VectorXd::Constant(2, 0.5), params, 1.0);
  const double before = post.weights()(0);
  post.update(0, 6.0);
  CHECK(post.weights()(0) > before);
}

TEST_CASE("grid oracle agrees with the mixture posterior") {
  RngStream rng(21);
  const std::vector<double> grid = [] {
    std::vector<double> g;
    for (double x = -8.0; x <= 10.0; x += 0.002) g.push_back(x);
    return g;
  }();
  const double h = 0.002;
  for (int instance = 0; instance < 4; ++instance) {
    MixturePriorParams params;
    params.mu = rng.normal(0.0, 0.5);
    params.gap = 0.5 + 2.0 * rng.uniform();
    params.sigma0 = 0.4 + rng.uniform();
    VectorXd w(3);
    for (Index i = 0; i < 3; ++i) w(i) = 0.2 + rng.uniform();
    w /= w.sum();
    const double noise_var = 0.5 + rng.uniform();
    MixturePosteriord post = build_mixture_prior(w, params, noise_var);
    std::vector<Observation> obs;
    const Index n = 1 + instance % 5;
    for (Index t = 0; t < n; ++t) {
      const Index arm = rng.uniform_index(3);
      const double r = rng.normal(params.mu + (arm == 0 ? params.gap : 0.0), 1.0);
      obs.push_back({arm, r});
      post.update(arm, r);
    }
    for (Index arm = 0; arm < 3; ++arm) {
      const auto oracle = grid_marginal(w, params, noise_var, obs, arm, grid, h);
      double tv = 0.0;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        tv += std::abs(oracle[g] - post.marginal_density(arm, grid[g])) * h;
      }
      CHECK(0.5 * tv < 1e-3);
    }
  }
}

TEST_CASE("sampling matches moments") {
  MixturePriorParams params;
  params.gap = 1.5;
  params.sigma0 = 0.7;
  VectorXd w(3);
  w << 0.2, 0.5, 0.3;
  MixturePosteriord post = build_mixture_prior(w, params, 1.0);
  post.update(1, 0.4);
  post.update(2, 1.7);
  RngStream rng(5);
  const int n = 200000;
  VectorXd sum = VectorXd::Zero(3), sumsq = VectorXd::Zero(3);
  for (int d = 0; d < n; ++d) {
    const VectorXd x = post.sample(rng);
    sum += x;
    sumsq += x.cwiseProduct(x);
  }
  for (Index i = 0; i < 3; ++i) {
    const auto [m, v] = post.moments(i);
    const double mean = sum(i) / n;
    const double var = sumsq(i) / n - mean * mean;
    CHECK(std::abs(mean - m) < 4.0 * std::sqrt(v / n));
    // variance of the sample variance is at most a few v^2 / n here
    CHECK(std::abs(var - v) < 6.0 * v * std::sqrt(3.0 / n));
  }
}

TEST_CASE("degenerate sample and determinism") {
  MatrixXd means(1, 3);
  means << 0.0, 2.0, 0.0;
  MixturePosteriord post(VectorXd::Ones(1), means, MatrixXd::Zero(1, 3), 1.0);
  RngStream rng(1);
  for (int d = 0; d < 10; ++d) CHECK(post.sample(rng) == Eigen::Vector3d(0.0, 2.0, 0.0));

  MixturePriorParams params;
  const MixturePosteriord prior = build_mixture_prior(VectorXd::Constant(4, 0.25), params);
  RngStream a(9, {1, 2, Purpose::kPolicy}), b(9, {1, 2, Purpose::kPolicy});
  CHECK(prior.sample(a) == prior.sample(b));
}

TEST_CASE("uniform prior gives a uniform argmax") {
  MixturePriorParams params;
  const MixturePosteriord prior = build_mixture_prior(VectorXd::Constant(10, 0.1), params);
  RngStream rng(77);
  const int n = 100000;
  std::vector<int> counts(10, 0);
  for (int d = 0; d < n; ++d) ++counts[prior.sample_argmax(rng)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 0.1 * n) * (c - 0.1 * n) / (0.1 * n);
  // 99.9% quantile of chi-square with 9 degrees of freedom
  CHECK(chi2 < 27.877);
}

TEST_CASE("moments of simple mixtures") {
  MatrixXd means(2, 1);
  means << 0.0, 2.0;
  MixturePosteriord two(Eigen::Vector2d(0.5, 0.5), means, MatrixXd::Zero(2, 1), 1.0);
  CHECK(two.moments(0).first == doctest::Approx(1.0));
  CHECK(two.moments(0).second == doctest::Approx(1.0));

  const MixturePosteriord single = MixturePosteriord::gaussian(
      Eigen::Vector2d(0.3, -1.0), Eigen::Vector2d(2.0, 0.5), 1.0);
  CHECK(single.moments(1).first == -1.0);
  CHECK(single.moments(1).second == 0.5);
}

TEST_CASE("prob_optimal") {
  MixturePriorParams params;
  params.gap = 2.0;
  params.sigma0 = std::sqrt(0.2);
  const VectorXd w = markov_next_dist(0, MarkovPrior(0.3, 5));
  MixturePosteriord post = build_mixture_prior(w, params);
  CHECK(post.prob_optimal().isApprox(w, 1e-12));

  RngStream rng(4);
  for (int t = 0; t < 200; ++t) {
    const Index arm = t % 5;
    post.update(arm, rng.normal(arm == 3 ? 2.0 : 0.0, 1.0));
  }
  CHECK(post.prob_optimal()(3) >= 0.99);

  MixturePosteriord sym = build_mixture_prior(VectorXd::Constant(2, 0.5), params);
  for (double r : {0.3, -1.2, 2.2}) {
    sym.update(0, r);
    sym.update(1, r);
  }
  CHECK(std::abs(sym.prob_optimal()(0) - 0.5) < 1e-9);
}

TEST_CASE("update order does not matter and weights stay normalized") {
  MixturePriorParams params;
  RngStream rng(8);
  std::vector<std::pair<Index, double>> obs;
  for (int t = 0; t < 40; ++t) obs.emplace_back(rng.uniform_index(4), rng.normal(0.5, 1.0));
  MixturePosteriord a = build_mixture_prior(VectorXd::Constant(4, 0.25), params);
  MixturePosteriord b = a;
  for (const auto& [arm, r] : obs) {
    a.update(arm, r);
    const Eigen::ArrayXd lw = a.log_weights().array();
    CHECK(std::abs(std::log(lw.exp().sum())) < 1e-9);
  }
  for (auto it = obs.rbegin(); it != obs.rend(); ++it) b.update(it->first, it->second);
  CHECK((a.log_weights() - b.log_weights()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((a.means() - b.means()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((a.variances() - b.variances()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("a zero-weight component keeps a finite log weight") {
  MixturePriorParams params;
  VectorXd w = VectorXd::Zero(3);
  w(0) = 1.0;
  MixturePosteriord post = build_mixture_prior(w, params);
  const double start = post.log_weights()(2);
  CHECK(std::isfinite(start));
  // The evidence between components is bounded (each arm's mean is learned
  // either way), so the floored weight moves up but cannot take over.
  for (int t = 0; t < 400; ++t) {
    post.update(2, 2.0);
    post.update(0, 0.0);
  }
  CHECK(post.log_weights()(2) > start + 15.0);
}

TEST_CASE("update rejects bad input") {
  MixturePriorParams params;
  MixturePosteriord post = build_mixture_prior(VectorXd::Constant(3, 1.0 / 3), params);
  CHECK_THROWS_AS(post.update(3, 0.0), InvalidArgument);
  CHECK_THROWS_AS(post.update(0, std::nan("")), InvalidArgument);
}

TEST_CASE("single precision posterior") {
  MixturePriorParams params;
  MixturePosterior<float> post =
      build_mixture_prior(Eigen::VectorXf::Constant(3, 1.0f / 3), params, 1.0f);
  post.update(1, 2.5f);
  MixturePosteriord ref = build_mixture_prior(VectorXd::Constant(3, 1.0 / 3), params, 1.0);
  ref.update(1, 2.5);
  CHECK(post.weights().cast<double>().isApprox(ref.weights(), 1e-5));
}
