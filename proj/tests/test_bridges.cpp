#include <vector>

#include "doctest.h"
#include "rwrp/bridges.hpp"

using namespace rwrp;

namespace {
const std::vector<int> word5{0, 1, 2, 1, 2, 3};   // + + - + +
const std::vector<int> stairs{0, 1, 2, 3};        // + + +
const std::vector<int> comb{0, 1, 2, 3, 2, 3};    // + + + - +
}  // namespace

TEST_CASE("bridge recognition and span") {
    CHECK(is_bridge(word5));
    CHECK(bridge_span(word5) == 3);
    CHECK(is_bridge(stairs));
    CHECK(bridge_span(stairs) == 3);
    CHECK(is_bridge(std::vector<int>{0}));  // empty path: span-0 bridge
    CHECK(bridge_span(std::vector<int>{0}) == 0);
    CHECK(!is_bridge(std::vector<int>{0, 1, 0, 1}));  // touches the floor
    CHECK(bridge_span(std::vector<int>{0, 1, 0, 1}) == -1);
    CHECK(!is_bridge(std::vector<int>{0, -1, 0, 1}));
}

TEST_CASE("covered levels mark descents below the running max") {
    CHECK(covered_levels(word5) == 0x1ull);   // the 2 -> 1 dip covers level 1
    CHECK(covered_levels(stairs) == 0x0ull);
    CHECK(covered_levels(comb) == 0x2ull);    // the 3 -> 2 dip covers level 2
    // deeper dip covers a range
    CHECK(covered_levels(std::vector<int>{0, 1, 2, 3, 2, 1, 2, 3, 4}) == 0x3ull);
}

TEST_CASE("backtrack decomposition of the descent") {
    auto bts = backtracks(word5);
    REQUIRE(bts.size() == 1);
    CHECK(bts[0].m == 2);
    CHECK(bts[0].n == 3);
    CHECK(bts[0].span == 1);
    CHECK(bts[0].covered == 0x1ull);
    CHECK(backtracks(stairs).empty());
    auto deep = backtracks(std::vector<int>{0, 1, 2, 3, 2, 1, 2, 3, 4});
    REQUIRE(deep.size() == 1);
    CHECK(deep[0].span == 2);
    CHECK(deep[0].covered == 0x3ull);
}

TEST_CASE("breaking points of single paths and tuples") {
    CHECK(breaking_points({word5}) == std::vector<int>{2, 3});
    CHECK(breaking_points({stairs}) == std::vector<int>{1, 2, 3});
    CHECK(breaking_points({comb}) == std::vector<int>{1, 3});
    // a level is breaking for the tuple only if no component covers it
    CHECK(breaking_points({word5, stairs}) == std::vector<int>{2, 3});
    CHECK(breaking_points({word5, comb}) == std::vector<int>{3});
}

TEST_CASE("irreducibility of paths and pairs") {
    CHECK(is_irreducible({std::vector<int>{0, 1}}));
    CHECK(!is_irreducible({word5}));
    CHECK(!is_irreducible({stairs}));
    // jointly covering pair: word5 covers level 1, comb covers level 2
    CHECK(is_irreducible({word5, comb}));
    CHECK(!is_irreducible({word5, stairs}));
}

TEST_CASE("decomposition splits at every breaking point") {
    auto pieces = irreducible_decomposition({word5});
    REQUIRE(pieces.size() == 2);
    CHECK(pieces[0].span == 2);
    CHECK(pieces[1].span == 1);
    REQUIRE(pieces[0].t_end.size() == 1);
    CHECK(pieces[0].t_begin[0] == 0);
    CHECK(pieces[0].t_end[0] == 4);  // last visit to the split level
    CHECK(pieces[1].t_begin[0] == 4);
    CHECK(pieces[1].t_end[0] == 5);

    auto one = irreducible_decomposition({word5, comb});
    REQUIRE(one.size() == 1);
    CHECK(one[0].span == 3);

    auto three = irreducible_decomposition({stairs});
    REQUIRE(three.size() == 3);
    for (const auto& p : three) CHECK(p.span == 1);
}
