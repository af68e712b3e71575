#include <doctest.h>

#include <cmath>
#include <random>

#include "quiks/analytics.hpp"
#include "quiks/errors.hpp"
#include "quiks/oracle.hpp"

using namespace quiks;
using namespace quiks::analytics;

namespace {

AutocovarianceSeries series(std::vector<double> cov) {
    AutocovarianceSeries s;
    s.cov = std::move(cov);
    s.sample_count = 1000;
    return s;
}

}  // namespace

TEST_CASE("autocovariance of a short series") {
    const std::vector<double> x{1, 2, 3, 4};
    const auto c = estimate_autocovariance(x, 2);
    // mean 2.5, deviations -1.5 -0.5 0.5 1.5
    CHECK(c.mean == doctest::Approx(2.5));
    CHECK(c.cov[0] == doctest::Approx(1.25));
    CHECK(c.cov[1] == doctest::Approx(0.3125));
    CHECK(c.at(-1) == c.at(1));
    CHECK_THROWS_AS((void)estimate_autocovariance(x, 3), InsufficientSamples);
}

TEST_CASE("constant series has zero autocovariance") {
    const std::vector<double> x(50, 4.0);
    const auto c = estimate_autocovariance(x, 5);
    for (double v : c.cov) {
        CHECK(v == doctest::Approx(0.0));
    }
}

TEST_CASE("lambda table small values") {
    const auto s = series({2.0, 0.5, 0.25});
    const auto t = lambda_table(s, 3);
    CHECK(t.at(1, 1) == doctest::Approx(2.0));
    CHECK(t.at(1, 2) == doctest::Approx(2.5));
    CHECK(t.at(2, 2) == doctest::Approx(5.0));
    CHECK(t.at(3, 1) == doctest::Approx(2.75));
    CHECK(t.at(2, 3) == t.at(3, 2));
}

TEST_CASE("iid requests give Lambda(j,k) = min(j,k) C(0)") {
    const auto s = series({3.0, 0.0, 0.0, 0.0, 0.0});
    const auto t = lambda_table(s, 5);
    for (int j = 1; j <= 5; ++j) {
        for (int k = 1; k <= 5; ++k) {
            CHECK(t.at(j, k) == doctest::Approx(3.0 * std::min(j, k)));
        }
    }
}

TEST_CASE("lambda recurrence matches the direct double sum") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 1 + trial % 12;
        std::vector<double> cov(static_cast<std::size_t>(k));
        for (auto& v : cov) {
            v = g(rng);
        }
        const auto s = series(cov);
        const auto t = lambda_table(s, k);
        for (int j = 1; j <= k; ++j) {
            for (int q = 1; q <= k; ++q) {
                const double direct = oracle::direct_lambda(cov, j, q);
                REQUIRE(t.at(j, q) == doctest::Approx(direct).epsilon(1e-9).scale(1.0));
            }
        }
    }
}

TEST_CASE("sigma delta for deterministic delay under iid requests") {
    // Δ over a gap with delay 1 is the sum of two independent counts: variance 2 C(0).
    const auto s = series({4.0});
    CHECK(sigma_delta(s, DelayDistribution::deterministic(1)) == doctest::Approx(std::sqrt(8.0)));
    const auto s3 = series({4.0, 0.0, 0.0});
    CHECK(sigma_delta(s3, DelayDistribution::deterministic(3)) ==
          doctest::Approx(std::sqrt(24.0)));
}

TEST_CASE("sigma delta matches the four-fold sum") {
    const std::vector<double> cov{2.0, 1.1, -0.4, 0.3};
    const std::vector<double> w{0.1, 0.4, 0.3, 0.2};
    const auto s = series(cov);
    CHECK(sigma_delta_squared(s, DelayDistribution(w)) ==
          doctest::Approx(oracle::direct_sigma_delta_squared(cov, w)));
}

TEST_CASE("negative variance clamps to zero") {
    const auto s = series({1.0, -3.0});
    const DelayDistribution w({0.0, 1.0});
    CHECK(sigma_delta_squared(s, w) < 0.0);
    CHECK(sigma_delta(s, w) == 0.0);
}

TEST_CASE("normal quantile and cdf") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(normal_cdf(normal_quantile(1e-6)) == doctest::Approx(1e-6).epsilon(1e-6));
    double prev = -1e9;
    for (double p = 1e-9; p < 1.0; p *= 3.0) {
        const double q = normal_quantile(p);
        CHECK(q > prev);
        prev = q;
    }
}

TEST_CASE("required buffer") {
    CHECK(required_buffer(1.0, 1e-6) == doctest::Approx(4.753424).epsilon(1e-6));
    CHECK(required_buffer(2.0, 1e-6) == doctest::Approx(2 * 4.753424).epsilon(1e-6));
    CHECK(required_buffer(1.0, 1e-3) < required_buffer(1.0, 1e-6));
    CHECK_THROWS_AS((void)required_buffer(1.0, 0.0), InvalidEpsilon);
    CHECK_THROWS_AS((void)required_buffer(1.0, 0.5), InvalidEpsilon);
    CHECK_THROWS_AS((void)required_buffer(1.0, -0.1), InvalidEpsilon);
}

TEST_CASE("fit_normal recovers a normal sample") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(50.0, 7.0);
    std::vector<double> x(20000);
    for (auto& v : x) {
        v = g(rng);
    }
    const auto f = fit_normal(x, 40);
    CHECK(f.mu == doctest::Approx(50.0).epsilon(0.01));
    CHECK(f.sigma == doctest::Approx(7.0).epsilon(0.03));
    CHECK(f.sample_sigma == doctest::Approx(7.0).epsilon(0.03));
    CHECK(f.r_squared > 0.98);
}

TEST_CASE("fit_normal scores a uniform sample poorly") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(20000);
    for (auto& v : x) {
        v = u(rng);
    }
    CHECK(fit_normal(x, 30).r_squared < 0.9);
}

TEST_CASE("fit_normal errors") {
    std::vector<double> few(50, 1.0);
    CHECK_THROWS_AS((void)fit_normal(few, 10), InsufficientSamples);
    std::vector<double> flat(500, 3.0);
    CHECK_THROWS_AS((void)fit_normal(flat, 10), DegenerateDistribution);
}

TEST_CASE("op counts scale quadratically in K") {
    for (int k : {4, 16, 40}) {
        std::vector<double> cov(static_cast<std::size_t>(k), 0.1);
        cov[0] = 1.0;
        OpCounter ops;
        (void)sigma_delta(series(cov), DelayDistribution(std::vector<double>(k, 1.0 / k)), &ops);
        CHECK(ops.ops <= static_cast<std::uint64_t>(4 * k * k));
    }
}
