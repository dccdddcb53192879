#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "skfluct/rng.hpp"
#include "skfluct/stats.hpp"

using namespace skfluct;

TEST_CASE("normal cdf and quantile") {
    CHECK(normal_cdf(0.0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(normal_cdf(1.0) == Catch::Approx(0.8413447460685429).margin(1e-12));
    CHECK(normal_cdf(-1.0) == Catch::Approx(1.0 - normal_cdf(1.0)).margin(1e-15));
    for (double p : {0.01, 0.1, 0.5, 0.9, 0.975})
        CHECK(normal_cdf(normal_quantile(p)) == Catch::Approx(p).margin(1e-10));
    CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(1.0), std::domain_error);
}

TEST_CASE("ks statistic on the two-point sample") {
    CHECK(ks_statistic({-1.0, 1.0}, 0.0, 1.0) == Catch::Approx(0.341345).margin(1e-6));
}

TEST_CASE("ks test under the null") {
    GaussianStream g(20250101);
    std::vector<double> sample(10000);
    for (double& x : sample) x = 3.0 + 2.0 * g.next_gaussian();
    const KsResult ok = ks_test(sample, 3.0, 4.0);
    CHECK(ok.p_value > 1e-3);
    // gross violation: shift by 5 standard deviations
    for (double& x : sample) x += 10.0;
    CHECK(ks_test(sample, 3.0, 4.0).p_value < 1e-6);
}

TEST_CASE("ks test input validation") {
    std::vector<double> small(10, 0.5);
    CHECK_THROWS_AS(ks_test(small, 0.0, 1.0), std::invalid_argument);
    std::vector<double> degenerate(100, 0.5);
    CHECK_THROWS_AS(ks_test(degenerate, 0.0, 1.0), std::invalid_argument);
    std::vector<double> fine(100);
    for (std::size_t i = 0; i < fine.size(); ++i) fine[i] = static_cast<double>(i);
    CHECK_THROWS_AS(ks_test(fine, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("kolmogorov survival function") {
    CHECK(kolmogorov_sf(0.0) == 1.0);
    CHECK(kolmogorov_sf(10.0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(kolmogorov_sf(1.0) > kolmogorov_sf(1.5));
    // known value Q(0.828...) ~ 0.5 region sanity
    CHECK(kolmogorov_sf(0.82757) == Catch::Approx(0.5).margin(1e-3));
}

TEST_CASE("moment_summary") {
    const std::vector<double> pm = {-1.0, 1.0};
    const MomentSummary s = moment_summary(pm);
    CHECK(s.mean == 0.0);
    CHECK(s.variance == 2.0);  // n-1 normalization

    const std::vector<double> constant(10, 4.2);
    CHECK(moment_summary(constant).variance == Catch::Approx(0.0).margin(1e-24));

    GaussianStream g(7);
    std::vector<double> big(100000);
    for (double& x : big) x = 3.0 + 2.0 * g.next_gaussian();
    const MomentSummary b = moment_summary(big);
    CHECK(std::abs(b.mean - 3.0) < 4.0 * 2.0 / std::sqrt(100000.0));
    CHECK(b.variance == Catch::Approx(4.0).epsilon(0.05));
    CHECK(std::abs(b.skewness) < 0.05);
    CHECK(b.variance_se > 0.0);

    CHECK_THROWS_AS(moment_summary({1.0}), std::invalid_argument);
}

TEST_CASE("median and quantile") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.5) == 3.0);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.0) == 1.0);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 1.0) == 5.0);
    CHECK(quantile({1.0, 2.0}, 0.9) == Catch::Approx(1.9).margin(1e-12));
    CHECK_THROWS_AS(median({}), std::invalid_argument);
    CHECK_THROWS_AS(quantile({}, 0.5), std::invalid_argument);
}

TEST_CASE("rng reproducibility and distribution") {
    GaussianStream a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_gaussian() == b.next_gaussian());
    CHECK(child_seed(1, 2) == child_seed(1, 2));
    CHECK(child_seed(1, 2) != child_seed(1, 3));
    CHECK(child_seed(1, 2) != child_seed(2, 2));

    GaussianStream g(55);
    std::vector<double> x(200000);
    for (double& v : x) v = g.next_gaussian();
    const MomentSummary s = moment_summary(x);
    CHECK(std::abs(s.mean) < 4.0 / std::sqrt(200000.0));
    CHECK(s.variance == Catch::Approx(1.0).epsilon(0.02));
    CHECK(ks_test(x, 0.0, 1.0).p_value > 1e-3);

    // uniforms live strictly inside (0,1)
    GaussianStream u(77);
    for (int i = 0; i < 10000; ++i) {
        const double v = u.next_uniform();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}
