#include <cmath>
#include <cstdint>
#include <set>

#include "doctest.h"
#include "rwrp/rng.hpp"

using namespace rwrp;

TEST_CASE("slot access is stateless and replays the stream") {
    RngStream a(42, 7), b(42, 7);
    for (uint64_t i = 0; i < 100; ++i) CHECK(a.next_u64() == b.at(i));
    CHECK(b.at(5) == b.at(5));
    CHECK(a.counter == 100);
}

TEST_CASE("different seeds, streams and slots decorrelate") {
    RngStream s(42, 7);
    CHECK(s.at(0) != s.at(1));
    CHECK(RngStream(42, 7).at(0) != RngStream(42, 8).at(0));
    CHECK(RngStream(42, 7).at(0) != RngStream(43, 7).at(0));
    RngStream c1 = s.derive(1), c2 = s.derive(2);
    CHECK(c1.at(0) != c2.at(0));
    CHECK(c1.counter == 0);
    std::set<uint64_t> seen;
    for (uint64_t i = 0; i < 64; ++i) {
        seen.insert(c1.at(i));
        seen.insert(c2.at(i));
    }
    CHECK(seen.size() == 128);  // no collisions across the two children
}

TEST_CASE("uniform doubles stay strictly inside (0,1)") {
    RngStream s(3, 1);
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double u = s.next_double();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(std::fabs(sum / n - 0.5) < 0.01);
}

TEST_CASE("exponential draws have mean one") {
    RngStream s(4, 9);
    double sum = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        double e = s.next_exponential();
        CHECK(e >= 0.0);
        sum += e;
    }
    CHECK(std::fabs(sum / n - 1.0) < 0.03);
}

TEST_CASE("index draws follow the cumulative weights") {
    RngStream s(5, 11);
    const double cum[3] = {0.2, 0.5, 1.0};
    int cnt[3] = {0, 0, 0};
    const int n = 30000;
    for (int i = 0; i < n; ++i) ++cnt[s.next_index(cum, 3, 1.0)];
    CHECK(std::fabs(cnt[0] / double(n) - 0.2) < 0.015);
    CHECK(std::fabs(cnt[1] / double(n) - 0.3) < 0.015);
    CHECK(std::fabs(cnt[2] / double(n) - 0.5) < 0.015);
}

TEST_CASE("mix64 is a deterministic scramble") {
    CHECK(mix64(123) == mix64(123));
    CHECK(mix64(1) != 1);
    CHECK(mix64(1) != mix64(2));
    // avalanche spot check: flipping one input bit flips many output bits
    int flips = __builtin_popcountll(mix64(0x1234) ^ mix64(0x1235));
    CHECK(flips > 12);
    CHECK(flips < 52);
}
