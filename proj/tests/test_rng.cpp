#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mtdnn/rng.hpp"

using mtdnn::Rng;
using mtdnn::RngStream;

TEST(rng, same_seed_same_sequence) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(rng, different_seeds_diverge) {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
    EXPECT_LT(same, 2);
}

TEST(rng, split_streams_are_independent_and_stable) {
    Rng root(7);
    Rng d1 = root.split(RngStream::dropout);
    Rng d2 = root.split(RngStream::dropout);
    EXPECT_EQ(d1.next_u64(), d2.next_u64());  // same purpose => same stream
    Rng s = root.split(RngStream::shuffle);
    Rng d3 = root.split(RngStream::dropout);
    EXPECT_NE(s.next_u64(), d3.next_u64());  // distinct purposes differ
    // splitting does not advance the parent
    Rng fresh(7);
    (void)fresh.split(RngStream::init);
    Rng again(7);
    EXPECT_EQ(fresh.next_u64(), again.next_u64());
}

TEST(rng, uniform_in_unit_interval) {
    Rng r(3);
    double mn = 1.0, mx = 0.0, sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        mn = std::min(mn, u);
        mx = std::max(mx, u);
        sum += u;
    }
    EXPECT_LT(mn, 0.01);
    EXPECT_GT(mx, 0.99);
    EXPECT_NEAR(sum / n, 0.5, 0.01);
}

TEST(rng, below_covers_range) {
    Rng r(9);
    std::vector<int> hits(10, 0);
    for (int i = 0; i < 10000; ++i) ++hits[r.below(10)];
    for (int h : hits) EXPECT_GT(h, 700);
}

TEST(rng, normal_moments) {
    Rng r(11);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        sum += x;
        sq += x * x;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.02);
    Rng r2(11);
    double s2 = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = r2.normal(0.02);
        s2 += x * x;
    }
    EXPECT_NEAR(std::sqrt(s2 / 1000), 0.02, 0.005);
}

TEST(rng, shuffle_is_permutation_and_deterministic) {
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    std::vector<int> w = v;
    Rng a(5), b(5);
    a.shuffle(v);
    b.shuffle(w);
    EXPECT_EQ(v, w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
    // a different seed gives a different order
    std::vector<int> u(50);
    for (int i = 0; i < 50; ++i) u[i] = i;
    Rng c(6);
    c.shuffle(u);
    EXPECT_NE(u, v);
}

TEST(rng, mix_depends_on_both_arguments) {
    EXPECT_NE(Rng::mix(1, 2), Rng::mix(2, 1));
    EXPECT_NE(Rng::mix(1, 2), Rng::mix(1, 3));
}
