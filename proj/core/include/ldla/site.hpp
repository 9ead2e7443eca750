#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace ldla {

/// Lattice coordinate on Z. Steps are bounded by 2^96 in magnitude, so sums
/// of a few million of them stay far inside the 128-bit range.
using Site = __int128;

inline constexpr int kMaxStepBits = 96;

constexpr Site site_abs(Site x) noexcept { return x < 0 ? -x : x; }

inline double to_double(Site x) noexcept { return static_cast<double>(x); }

std::string to_string(Site x);

/// Parses an optionally signed decimal integer. Throws std::invalid_argument.
Site parse_site(std::string_view text);

struct SiteHash {
  std::size_t operator()(Site x) const noexcept {
    auto u = static_cast<unsigned __int128>(x);
    std::uint64_t lo = static_cast<std::uint64_t>(u);
    std::uint64_t hi = static_cast<std::uint64_t>(u >> 64);
    std::uint64_t h = lo * 0x9E3779B97F4A7C15ULL ^ (hi + 0xC2B2AE3D27D4EB4FULL);
    h ^= h >> 31;
    h *= 0xBF58476D1CE4E5B9ULL;
    h ^= h >> 29;
    return static_cast<std::size_t>(h);
  }
};

}  // namespace ldla
