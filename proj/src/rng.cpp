#include "tgrf/rng.hpp"

#include <array>

namespace tgrf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t replicate,
                      std::uint64_t stream) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ replicate);
  h = splitmix64(h ^ (stream * 0xd1b54a32d192ed03ULL));
  return h;
}

Engine make_engine(std::uint64_t seed, std::uint64_t replicate, Stream stream) {
  const std::uint64_t key =
      mix_key(seed, replicate, static_cast<std::uint64_t>(stream));
  // Feed a few derived words through seed_seq to fill the full engine state.
  std::array<std::uint32_t, 4> words{};
  std::uint64_t k = key;
  for (auto& w : words) {
    k = splitmix64(k);
    w = static_cast<std::uint32_t>(k >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

}  // namespace tgrf
