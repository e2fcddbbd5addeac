#pragma once

#include <cstdint>
#include <random>

namespace lrsens {

/// Identifies one independent random stream inside a run.
/// `domain` separates unrelated ensembles (LR pass, CFD pass for parameter k,
/// ...), `replica` is the sample index and `channel` a sub-stream (e.g. a
/// reaction channel for the coupled SSA).
struct StreamId {
  std::uint64_t domain = 0;
  std::uint64_t replica = 0;
  std::uint64_t channel = 0;

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

/// Deterministic random stream keyed by (seed, stream id). Two streams built
/// from the same key produce bit-identical sequences.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamId id);

  std::uint64_t seed() const { return seed_; }
  const StreamId& id() const { return id_; }

  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  /// Exponential with unit rate.
  double exponential() { return exponential_(engine_); }
  double normal() { return normal_(engine_); }

 private:
  std::uint64_t seed_;
  StreamId id_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::exponential_distribution<double> exponential_{1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lrsens
