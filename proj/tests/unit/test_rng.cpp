#include <doctest.h>

#include <cmath>
#include <set>

#include "manifold_gauge/rng.hpp"

using namespace mgauge;

TEST_CASE("mixing function matches the published SplitMix64 sequence") {
    // SplitMix64 seeded with 0 emits mix(k * W) for k = 1, 2, ...
    CHECK(CounterRng::mix(1 * CounterRng::kWeyl) == 0xE220A8397B1DCDAFull);
    CHECK(CounterRng::mix(2 * CounterRng::kWeyl) == 0x6E789E6AA1B965F4ull);
    CHECK(CounterRng::mix(3 * CounterRng::kWeyl) == 0x06C45D188009454Full);
}

TEST_CASE("draws are pure functions of (seed, stream, counter)") {
    const CounterRng a(42, stream_id(1, 5));
    const CounterRng b(42, stream_id(1, 5));
    const CounterRng c(43, stream_id(1, 5));
    const CounterRng d(42, stream_id(2, 5));
    for (std::uint64_t k = 0; k < 100; ++k) {
        CHECK(a.bits(k) == b.bits(k));
        CHECK(a.normal(k) == b.normal(k));
    }
    int same_seed = 0, same_stream = 0;
    for (std::uint64_t k = 0; k < 100; ++k) {
        same_seed += a.bits(k) == c.bits(k);
        same_stream += a.bits(k) == d.bits(k);
    }
    CHECK(same_seed == 0);
    CHECK(same_stream == 0);
}

TEST_CASE("uniform and normal moments") {
    const CounterRng rng(7, 0);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int k = 0; k < n; ++k) {
        const double u = rng.uniform(static_cast<std::uint64_t>(k));
        CHECK_FALSE((u < 0.0 || u >= 1.0));
        su += u;
        const double z = rng.normal(static_cast<std::uint64_t>(k));
        sn += z;
        sn2 += z * z;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("stream ids separate tags and indices") {
    std::set<std::uint64_t> ids;
    for (std::uint64_t tag = 1; tag <= 4; ++tag) {
        for (std::uint64_t i = 0; i < 1000; ++i) ids.insert(stream_id(tag, i));
    }
    CHECK(ids.size() == 4000);
}
