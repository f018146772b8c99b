#ifndef TGRF_RNG_HPP
#define TGRF_RNG_HPP

#include <cstdint>
#include <random>

namespace tgrf {

using Engine = std::mt19937_64;

/// Independent streams within one replicate.
enum class Stream : std::uint64_t {
  Locations = 1,
  Field = 2,
  Multistart = 3,
  Bootstrap = 4,
  Auxiliary = 5,
};

/// Engine keyed by (experiment seed, replicate index, stream). Keys are mixed
/// with SplitMix64 finalizers, so neighbouring replicates or streams do not
/// share seed material.
Engine make_engine(std::uint64_t seed, std::uint64_t replicate, Stream stream);

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t replicate,
                      std::uint64_t stream);

}  // namespace tgrf

#endif  // TGRF_RNG_HPP
