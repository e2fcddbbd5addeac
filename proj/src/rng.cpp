#include "lrsens/rng.hpp"

#include <array>

namespace lrsens {

namespace {

// Mixes the key words so that neighbouring ids do not share seed_seq input
// patterns.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, const StreamId& id) {
  const std::array<std::uint64_t, 4> key = {
      splitmix64(seed), splitmix64(id.domain ^ 0x5851f42d4c957f2dULL),
      splitmix64(id.replica ^ 0x14057b7ef767814fULL),
      splitmix64(id.channel ^ 0x2545f4914f6cdd1dULL)};
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < key.size(); ++i) {
    words[2 * i] = static_cast<std::uint32_t>(key[i]);
    words[2 * i + 1] = static_cast<std::uint32_t>(key[i] >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, StreamId id)
    : seed_(seed), id_(id), engine_(make_engine(seed, id)) {}

}  // namespace lrsens
