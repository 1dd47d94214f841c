#pragma once

// Keyed random streams. Every stochastic draw in a run is taken from a stream
// identified by (seed, purpose, a, b), so the sample sequence does not depend
// on how work is split across threads.

#include <cstdint>
#include <random>
#include <string_view>

namespace drats {

using Engine = std::mt19937_64;

enum class Purpose : std::uint64_t {
  Init = 1,
  TaskDraw = 2,
  Episode = 3,
  Bootstrap = 4,
  Gradient = 5,
  Convergence = 6,
  Test = 7,
};

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

inline constexpr std::uint64_t stream_key(std::uint64_t seed, Purpose purpose, std::uint64_t a = 0,
                                          std::uint64_t b = 0) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  h = detail::splitmix64(h ^ a);
  h = detail::splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
  return h;
}

inline Engine make_stream(std::uint64_t seed, Purpose purpose, std::uint64_t a = 0, std::uint64_t b = 0) {
  return Engine(stream_key(seed, purpose, a, b));
}

// Uniform double in [0, 1) from 53 random bits; identical on every platform.
inline double uniform01(Engine& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace drats
