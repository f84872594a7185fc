#pragma once

#include <memory>
#include <vector>

#include "stts/priors.hpp"
#include "stts/rng.hpp"
#include "stts/types.hpp"
#include "stts/word_table.hpp"

namespace stts {

// A Gaussian bandit with a unique best arm.
class Environment {
 public:
  Environment(VectorXd theta, double noise_sd = 1.0);

  const VectorXd& theta() const { return theta_; }
  double noise_sd() const { return noise_sd_; }
  Index optimal_arm() const { return optimal_arm_; }
  Index num_arms() const { return theta_.size(); }
  double gap() const;

 private:
  VectorXd theta_;
  double noise_sd_;
  Index optimal_arm_;
};

// theta[arm] + noise_sd * z. noise_sd = 0 is permitted here for
// deterministic checks even though Environment itself rejects it.
double pull(const VectorXd& theta, double noise_sd, Index arm, RngStream& rng);
double pull(const Environment& env, Index arm, RngStream& rng);

// Source of the optimal-arm law: a distribution for the first task and a
// conditional row given the previous optimal arm.
class PriorProvider {
 public:
  virtual ~PriorProvider() = default;
  virtual Index num_arms() const = 0;
  virtual VectorXd initial() const = 0;
  virtual VectorXd next(Index prev) const = 0;
};

// First task uniform, then markov_next_dist.
class MarkovProvider final : public PriorProvider {
 public:
  explicit MarkovProvider(MarkovPrior prior) : prior_(prior) {}
  Index num_arms() const override { return prior_.num_arms; }
  VectorXd initial() const override;
  VectorXd next(Index prev) const override;
  const MarkovPrior& prior() const { return prior_; }

 private:
  MarkovPrior prior_;
};

class WordTableProvider final : public PriorProvider {
 public:
  explicit WordTableProvider(std::shared_ptr<const WordModelTable> table);
  Index num_arms() const override { return table_->size(); }
  VectorXd initial() const override { return table_->initial(); }
  VectorXd next(Index prev) const override { return table_->row(prev); }
  const WordModelTable& table() const { return *table_; }

 private:
  std::shared_ptr<const WordModelTable> table_;
};

struct TaskSequence {
  std::vector<Environment> tasks;
  std::vector<Index> optimal_arms;

  Index size() const { return static_cast<Index>(tasks.size()); }
};

// Draws one index from a probability vector (inverse CDF).
Index sample_categorical(const VectorXd& dist, RngStream& rng);

// Optimal arms follow the provider's chain; theta_m is the conditional
// mean (mu, ..., mu + gap, ..., mu), plus N(0, sigma0^2) per arm when
// params.perturb is set (re-drawn until the intended arm is the strict
// maximum).
TaskSequence sample_task_sequence(const PriorProvider& provider, Index M,
                                  const MixturePriorParams& params,
                                  RngStream& rng, double noise_sd = 1.0);

// theta_1 ~ N(mu0 e_j, sigma0^2 I) with j uniform; theta_m ~
// N(mu0 U[a*_{m-1}], sigma0^2 I). The optimal arm is the realized argmax.
TaskSequence sample_gaussian_u_sequence(const GaussianUPrior& prior, Index M,
                                        RngStream& rng, double noise_sd = 1.0);

}  // namespace stts
