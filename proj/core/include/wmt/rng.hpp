#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace wmt {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits. Unlike
/// std::uniform_real_distribution the result is identical across standard
/// library implementations.
double uniform_unit(Rng& rng);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a base seed and a tuple of
/// coordinates (epoch, sample index, ...).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords) noexcept;

/// Normal deviate via Box-Muller on uniform_unit.
double standard_normal(Rng& rng);

}  // namespace wmt
