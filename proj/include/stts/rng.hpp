#pragma once

#include <cstdint>
#include <random>

namespace stts {

// What a stream is used for. Each purpose gets its own stream so that, for
// example, changing the arm-selection rule never perturbs the sampled truth.
enum class Purpose : std::uint64_t {
  kTruth = 1,
  kPolicy = 2,
  kReward = 3,
  kCalibration = 4,
  kStopping = 5,
  kMisc = 6,
};

struct StreamId {
  std::uint64_t replication = 0;
  std::uint64_t task = 0;
  Purpose purpose = Purpose::kMisc;
};

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic random stream keyed by (seed, replication, task, purpose).
// Identical keys give identical draw sequences regardless of the order in
// which streams are created.
class RngStream {
 public:
  using Engine = std::mt19937_64;

  explicit RngStream(std::uint64_t seed, StreamId id = {});

  std::uint64_t seed() const { return seed_; }
  const StreamId& id() const { return id_; }

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n).
  std::int64_t uniform_index(std::int64_t n);
  double gamma(double shape);
  double beta(double a, double b);

  Engine& engine() { return engine_; }

  // A child stream derived from this one's key; used when one logical
  // consumer needs several independent sub-streams.
  RngStream fork(std::uint64_t salt) const;

 private:
  std::uint64_t seed_;
  StreamId id_;
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace stts
