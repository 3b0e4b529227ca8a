#pragma once

#include <cstdint>
#include <random>

namespace perplab {

/// Independent random streams consumed by one simulated path.
///
/// The volatility streams never share state with the price Brownian driver
/// or the jump marks, so stochastic volatility is independent of both.
enum class Stream : std::uint64_t {
  brownian = 1,
  jumps = 2,
  volatility = 3,
  inner_volatility = 4,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Engine for stream `stream` of path `path` under the top-level `seed`.
/// The result depends only on (seed, path, stream, substream), so paths can
/// be generated in any order or in parallel.
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t path, Stream stream,
                            std::uint64_t substream = 0);

}  // namespace perplab
