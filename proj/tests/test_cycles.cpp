#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "skfluct/cycles.hpp"

using namespace skfluct;

namespace {

GoeMatrix example3() {
    GoeMatrix J(3);
    J.at(0, 1) = 1.0;
    J.at(0, 2) = 2.0;
    J.at(1, 2) = 3.0;
    return J;
}

struct OnesMat {
    long long operator()(int, int) const { return 1; }
};

}  // namespace

TEST_CASE("hand examples at N = 3") {
    const GoeMatrix J = example3();
    for (const auto& counts : {cycle_counts_naive(J, 4), cycle_counts_mobius(J, 4)}) {
        INFO(counts.algorithm);
        CHECK(counts.value(1) == Catch::Approx(0.0).margin(1e-14));  // zero diagonal
        CHECK(counts.value(2) == Catch::Approx(22.0 / 3.0).margin(1e-12));
        CHECK(counts.value(3) == Catch::Approx(36.0 / std::pow(3.0, 1.5)).margin(1e-12));
        CHECK(counts.value(4) == 0.0);  // k > N
    }
}

TEST_CASE("k = 1 equals scaled trace") {
    const GoeMatrix J = sample_goe(9, 41);
    double tr = 0.0;
    for (int i = 0; i < 9; ++i) tr += J(i, i);
    CHECK(cycle_counts_naive(J, 1).value(1) == Catch::Approx(tr / 3.0).margin(1e-12));
    CHECK(cycle_counts_mobius(J, 1).value(1) == Catch::Approx(tr / 3.0).margin(1e-12));
}

TEST_CASE("k = 2 equals two-term inversion") {
    const GoeMatrix J = sample_goe(7, 42);
    double tr2 = 0.0, diag2 = 0.0;
    for (int i = 0; i < 7; ++i) {
        diag2 += J(i, i) * J(i, i);
        for (int j = 0; j < 7; ++j) tr2 += J(i, j) * J(j, i);
    }
    const double expected = (tr2 - diag2) / 7.0 - 6.0;
    CHECK(cycle_counts_mobius(J, 2).value(2) == Catch::Approx(expected).margin(1e-10));
    CHECK(cycle_counts_naive(J, 2).value(2) == Catch::Approx(expected).margin(1e-10));
}

TEST_CASE("cross-algorithm agreement on random GOE") {
    for (int s = 0; s < 20; ++s) {
        const GoeMatrix J = sample_goe(10, child_seed(9000, s));
        const CycleCountVector a = cycle_counts_naive(J, 5);
        const CycleCountVector b = cycle_counts_mobius(J, 5);
        for (int k = 1; k <= 5; ++k) {
            const double scale = std::max({1.0, std::abs(a.value(k)), std::abs(b.value(k))});
            CHECK(std::abs(a.value(k) - b.value(k)) <= 1e-10 * scale);
        }
    }
    // a small mixed-size sweep including k > n
    for (int n : {3, 5, 8}) {
        const GoeMatrix J = sample_goe(n, child_seed(9100, n));
        const CycleCountVector a = cycle_counts_naive(J, 6);
        const CycleCountVector b = cycle_counts_mobius(J, 6);
        for (int k = 1; k <= 6; ++k) {
            const double scale = std::max({1.0, std::abs(a.value(k)), std::abs(b.value(k))});
            CHECK(std::abs(a.value(k) - b.value(k)) <= 1e-10 * scale);
        }
    }
}

TEST_CASE("all-ones self-test equals the falling factorial") {
    const OnesMat ones;
    for (int n : {2, 5, 10, 20, 30})
        for (int k = 1; k <= 6; ++k) {
            long long expected = 1;
            for (int i = 0; i < k; ++i) expected *= n - i;
            if (k > n) expected = 0;
            if (k > n) continue;  // the distinct sum is zero and skipped upstream
            CHECK(detail::distinct_cycle_sum_mobius<long long>(ones, n, k) == expected);
        }
}

TEST_CASE("fluctuation_sum") {
    FluctParams p;
    p.alpha2 = 0.5;
    p.beta = 0.5;  // mu_1 = 0.5
    CycleCountVector counts{8, 1, {2.0}, "naive"};
    CHECK(fluctuation_sum(counts, p, 1) == Catch::Approx(0.4375).margin(1e-15));

    // beta = 0: all mu vanish
    const FluctParams zero = fluct_params(Mixture::pure2(), 0.0, 3);
    CycleCountVector c3{8, 3, {1.0, -2.0, 0.5}, "mobius"};
    CHECK(fluctuation_sum(c3, zero, 3) == 0.0);

    // zero counts reproduce -s2_truncated / 2
    const FluctParams p4 = fluct_params(Mixture::pure2(), 0.4, 4);
    CycleCountVector zeros{8, 4, {0.0, 0.0, 0.0, 0.0}, "mobius"};
    CHECK(fluctuation_sum(zeros, p4, 4) ==
          Catch::Approx(-0.5 * s2_truncated(p4, 4)).margin(1e-14));

    CHECK_THROWS_AS(fluctuation_sum(counts, p, 2), std::invalid_argument);
}

TEST_CASE("guards") {
    const GoeMatrix J = sample_goe(4, 1);
    CHECK_THROWS_AS(cycle_counts_mobius(J, 9), std::invalid_argument);
    CHECK_THROWS_AS(cycle_counts_mobius(J, 0), std::invalid_argument);
    CHECK_THROWS_AS(cycle_counts_naive(J, 0), std::invalid_argument);
    const GoeMatrix big = sample_goe(120, 2);
    CHECK_THROWS_AS(cycle_counts_naive(big, 6), std::invalid_argument);
}

TEST_CASE("partition classes are consistent") {
    // Moebius weights over all partitions sum block-size signs correctly:
    // applying the inversion to the all-ones matrix at small n equals the
    // falling factorial, which already exercises the table; here check the
    // class count is nonzero and k bounds hold
    for (int k = 1; k <= 8; ++k) CHECK(!detail::partition_classes(k).empty());
    CHECK_THROWS_AS(detail::partition_classes(9), std::invalid_argument);
}
