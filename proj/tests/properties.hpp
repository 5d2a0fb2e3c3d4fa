#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "generators.hpp"

namespace mpst::testing {

struct Sample {
    Generated gen;
    /// Reachable process states, breadth-first, up to a bound.
    std::vector<Process> states;
};

inline constexpr std::size_t kMaxStatesPerSample = 500;
inline constexpr double kMaxSizeRatio = 3.0;

/// Draws `n` projectable types with their canonical implementations and explores them.
std::vector<Sample> draw_samples(std::uint64_t seed, std::size_t n, const GenOptions& opts = {});

/// Totality, SubjectReduction, Progress, Linearity, ErrorFreedom, Determinism, SizeRatio.
const std::vector<std::string>& property_names();

/// Failure descriptions of one property on one sample; empty when it holds.
std::vector<std::string> check_property(const std::string& name, const Sample& s);

std::string describe(const Sample& s);

} // namespace mpst::testing
