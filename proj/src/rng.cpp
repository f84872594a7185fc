#include "stts/rng.hpp"

#include <stdexcept>

namespace stts {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t stream_key(std::uint64_t seed, const StreamId& id) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ id.replication);
  h = splitmix64(h ^ (id.task * 0x632BE59BD9B4E019ULL));
  h = splitmix64(h ^ static_cast<std::uint64_t>(id.purpose));
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, StreamId id)
    : seed_(seed), id_(id) {
  const std::uint64_t key = stream_key(seed, id);
  std::seed_seq seq{static_cast<std::uint32_t>(key),
                    static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(splitmix64(key)),
                    static_cast<std::uint32_t>(splitmix64(key) >> 32)};
  engine_.seed(seq);
}

std::int64_t RngStream::uniform_index(std::int64_t n) {
  if (n <= 0) throw std::invalid_argument("uniform_index: n must be positive");
  std::uniform_int_distribution<std::int64_t> dist(0, n - 1);
  return dist(engine_);
}

double RngStream::gamma(double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

double RngStream::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

RngStream RngStream::fork(std::uint64_t salt) const {
  StreamId child = id_;
  child.replication = splitmix64(id_.replication ^ splitmix64(salt));
  return RngStream(splitmix64(seed_ + salt), child);
}

}  // namespace stts
