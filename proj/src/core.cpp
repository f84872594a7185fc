#include "stts/core.hpp"

#include <cmath>
#include <limits>

namespace stts {

Environment::Environment(VectorXd theta, double noise_sd)
    : theta_(std::move(theta)), noise_sd_(noise_sd) {
  require(theta_.size() >= 2, "Environment: need at least two arms");
  require(noise_sd_ > 0.0, "Environment: noise_sd must be positive");
  require(theta_.allFinite(), "Environment: theta must be finite");
  optimal_arm_ = argmax(theta_);
  for (Index i = 0; i < theta_.size(); ++i) {
    require(i == optimal_arm_ || theta_(i) < theta_(optimal_arm_),
            "Environment: optimal arm is not unique");
  }
}

double Environment::gap() const {
  double second = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < num_arms(); ++i) {
    if (i != optimal_arm_) second = std::max(second, theta_(i));
  }
  return theta_(optimal_arm_) - second;
}

double pull(const VectorXd& theta, double noise_sd, Index arm, RngStream& rng) {
  require_arm(arm, theta.size(), "pull");
  return theta(arm) + noise_sd * rng.normal();
}

double pull(const Environment& env, Index arm, RngStream& rng) {
  return pull(env.theta(), env.noise_sd(), arm, rng);
}

VectorXd MarkovProvider::initial() const {
  return VectorXd::Constant(prior_.num_arms, 1.0 / double(prior_.num_arms));
}

VectorXd MarkovProvider::next(Index prev) const {
  return markov_next_dist(prev, prior_);
}

WordTableProvider::WordTableProvider(std::shared_ptr<const WordModelTable> table)
    : table_(std::move(table)) {
  require(table_ != nullptr, "WordTableProvider: null table");
}

Index sample_categorical(const VectorXd& dist, RngStream& rng) {
  double u = rng.uniform() * dist.sum();
  Index last_positive = -1;
  for (Index i = 0; i < dist.size(); ++i) {
    if (dist(i) <= 0.0) continue;
    last_positive = i;
    u -= dist(i);
    if (u < 0.0) return i;
  }
  require(last_positive >= 0, "sample_categorical: empty support");
  return last_positive;
}

namespace {

void check_distribution(const VectorXd& dist, Index J, const char* what) {
  require(dist.size() == J, std::string(what) + ": wrong length");
  require((dist.array() >= 0.0).all(), std::string(what) + ": negative mass");
  require(std::abs(dist.sum() - 1.0) <= 1e-9,
          std::string(what) + ": distribution does not sum to 1");
}

}  // namespace

TaskSequence sample_task_sequence(const PriorProvider& provider, Index M,
                                  const MixturePriorParams& params,
                                  RngStream& rng, double noise_sd) {
  require(M >= 1, "sample_task_sequence: M must be at least 1");
  params.validate();
  const Index J = provider.num_arms();
  TaskSequence seq;
  seq.tasks.reserve(M);
  seq.optimal_arms.reserve(M);
  Index prev = -1;
  for (Index m = 0; m < M; ++m) {
    const VectorXd dist = m == 0 ? provider.initial() : provider.next(prev);
    check_distribution(dist, J, "sample_task_sequence");
    const Index arm = sample_categorical(dist, rng);
    VectorXd theta = conditional_mean(arm, J, params);
    if (params.perturb) {
      VectorXd draw(J);
      do {
        for (Index i = 0; i < J; ++i) draw(i) = theta(i) + params.sigma0 * rng.normal();
      } while (argmax(draw) != arm);
      theta = draw;
    }
    seq.tasks.emplace_back(std::move(theta), noise_sd);
    seq.optimal_arms.push_back(arm);
    prev = arm;
  }
  return seq;
}

TaskSequence sample_gaussian_u_sequence(const GaussianUPrior& prior, Index M,
                                        RngStream& rng, double noise_sd) {
  require(M >= 1, "sample_gaussian_u_sequence: M must be at least 1");
  const Index J = prior.num_arms();
  TaskSequence seq;
  Index prev = -1;
  for (Index m = 0; m < M; ++m) {
    VectorXd mean;
    if (m == 0) {
      mean = VectorXd::Zero(J);
      mean(rng.uniform_index(J)) = prior.mu0;
    } else {
      mean = gaussian_prior_from_u(prev, prior).first;
    }
    VectorXd theta(J);
    for (Index i = 0; i < J; ++i) theta(i) = mean(i) + prior.sigma0 * rng.normal();
    seq.tasks.emplace_back(std::move(theta), noise_sd);
    prev = seq.tasks.back().optimal_arm();
    seq.optimal_arms.push_back(prev);
  }
  return seq;
}

}  // namespace stts
