#include "doctest.h"

#include <cmath>
#include <numeric>

#include "mixloss/rng.hpp"

using mixloss::RandomSource;

TEST_CASE("equal seeds produce equal streams") {
    RandomSource a(1234567), b(1234567);
    for (int i = 0; i < 1000000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    RandomSource a(1), b(2);
    int same = 0;
    for (int i = 0; i < 1000; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    CHECK(same == 0);
}

TEST_CASE("uniform01 stays in [0,1) and covers the range") {
    RandomSource r(42);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal draws have unit variance") {
    RandomSource r(7);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(sq / n - mean * mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("below is unbiased over small ranges") {
    RandomSource r(99);
    int counts[5] = {0, 0, 0, 0, 0};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[r.below(5)];
    for (int c : counts) CHECK(std::abs(c - n / 5) < 1000);
}

TEST_CASE("split streams are independent of each other") {
    RandomSource root(5);
    RandomSource s0 = root.split(0), s1 = root.split(1);
    RandomSource s0_again = root.split(0);
    REQUIRE(s0.next_u64() == s0_again.next_u64());
    CHECK(s0.next_u64() != s1.next_u64());
}

TEST_CASE("shuffle is a permutation and seed-stable") {
    std::vector<int> v(100), w(100);
    std::iota(v.begin(), v.end(), 0);
    std::iota(w.begin(), w.end(), 0);
    RandomSource a(11), b(11);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 100; ++i) REQUIRE(sorted[static_cast<std::size_t>(i)] == i);
}
