#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "ericson/error.hpp"
#include "ericson/rng.hpp"

using namespace ericson;

TEST_CASE("philox block matches Random123 known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    CHECK(CounterRng::block(A4{0, 0, 0, 0}, A2{0, 0}) ==
          A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(CounterRng::block(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                            A2{0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(CounterRng::block(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                            A2{0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("equal plans reproduce the same stream") {
    CounterRng a({42, 7}, Stream::hamiltonian);
    CounterRng b({42, 7}, Stream::hamiltonian);
    for (int i = 0; i < 1000; ++i) REQUIRE(a() == b());
}

TEST_CASE("streams, seeds and realizations are distinct") {
    std::set<std::uint64_t> firsts;
    for (std::uint64_t seed : {1u, 2u})
        for (std::uint64_t r : {0u, 1u})
            for (Stream s : {Stream::hamiltonian, Stream::coupling, Stream::graph}) {
                CounterRng g({seed, r}, s);
                firsts.insert(g());
            }
    CHECK(firsts.size() == 12);
}

TEST_CASE("uniform draws lie in [0, 1) with the right moments") {
    CounterRng g({3, 0}, Stream::noise);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = g.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sq += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sq / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("normal draws have zero mean and unit variance") {
    CounterRng g({4, 0}, Stream::noise);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = g.normal();
        sum += x;
        sq += x * x;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("below is unbiased over a small range") {
    CounterRng g({5, 0}, Stream::noise);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto k = g.below(7);
        REQUIRE(k < 7);
        ++counts[k];
    }
    for (int c : counts) CHECK(std::abs(c - n / 7) < 400);
}
