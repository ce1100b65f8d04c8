#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace macek {

// Probability serialization used by snapshots: shortest decimal that parses
// back to the identical double, padded to at least six fractional digits.
std::string format_probability(double p);
double parse_probability(const std::string& text);

// Unbiased bounded draw. std::uniform_int_distribution is implementation
// defined; this keeps corpora and schedules byte-identical across toolchains.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

// Uniform real in [0, 1) with 53 bits, same portability rationale.
double uniform_real(std::mt19937_64& rng);

}  // namespace macek
