#include <gtest/gtest.h>

#include <set>

#include "mpst/typecheck.hpp"
#include "properties.hpp"
#include "support.hpp"

using namespace mpst;
using namespace mpst::testing;

namespace {

constexpr std::size_t kSystems = 200;

const std::vector<Sample>& samples() {
    static const std::vector<Sample> all = draw_samples(20261016, kSystems);
    return all;
}

} // namespace

TEST(Property, GeneratorIsWithinBounds) {
    std::set<std::uint32_t> role_counts;
    std::size_t par = 0;
    for (const auto& s : samples()) {
        EXPECT_LE(s.gen.roles, 4u);
        EXPECT_GE(s.gen.roles, 2u);
        role_counts.insert(s.gen.roles);
        if (s.gen.type.is<GPar>()) ++par;
        EXPECT_TRUE(well_typed(s.gen.impl, {{s.gen.type, "s"}}).verdict) << describe(s);
    }
    EXPECT_EQ(samples().size(), kSystems);
    EXPECT_GE(role_counts.size(), 3u);
    EXPECT_GT(par, 0u);
}

TEST(Property, GeneratorIsReproducible) {
    auto a = draw_samples(7, 5);
    auto b = draw_samples(7, 5);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].gen.type, b[i].gen.type);
}

class Invariant : public ::testing::TestWithParam<std::string> {};

TEST_P(Invariant, HoldsOnEverySample) {
    for (const auto& s : samples()) {
        auto failures = check_property(GetParam(), s);
        EXPECT_TRUE(failures.empty()) << describe(s) << "\n" << failures.front();
    }
}

INSTANTIATE_TEST_SUITE_P(Property, Invariant, ::testing::ValuesIn(property_names()),
                         [](const auto& info) { return info.param; });
