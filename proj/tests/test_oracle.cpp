#include <doctest.h>

#include <cmath>

#include "quiks/analytics.hpp"
#include "quiks/oracle.hpp"

using namespace quiks;

TEST_CASE("true autocovariance of the reference processes") {
    const auto p = oracle::true_autocovariance(oracle::ProcessSpec::iid_poisson(3.0), 3);
    CHECK(p == std::vector<double>{3.0, 0.0, 0.0});
    const auto a = oracle::true_autocovariance(oracle::ProcessSpec::ar1(5.0, 0.5, 1.0), 3);
    CHECK(a[0] == doctest::Approx(4.0 / 3.0));
    CHECK(a[1] == doctest::Approx(2.0 / 3.0));
    CHECK(a[2] == doctest::Approx(1.0 / 3.0));
    const auto m = oracle::true_autocovariance(oracle::ProcessSpec::ma2(5.0, 0.6, 0.3, 1.0), 4);
    CHECK(m[0] == doctest::Approx(1.45));
    CHECK(m[1] == doctest::Approx(0.78));
    CHECK(m[2] == doctest::Approx(0.3));
    CHECK(m[3] == doctest::Approx(0.0));
}

TEST_CASE("direct sums on small inputs") {
    const std::vector<double> cov{2.0, 0.5};
    CHECK(oracle::direct_lambda(cov, 2, 2) == doctest::Approx(5.0));
    CHECK(oracle::direct_lambda(cov, 1, 2) == doctest::Approx(2.5));
    const std::vector<double> w{1.0};
    CHECK(oracle::direct_sigma_delta_squared(cov, w) == doctest::Approx(4.0));
}

TEST_CASE("item-level buffer") {
    const std::vector<std::int64_t> n{3, 0, 2};
    const std::vector<std::int64_t> c{1, 4, 0};
    const auto r = oracle::item_buffer_run(n, c, 1);
    CHECK(r[0].key_blocks == 0);
    CHECK(r[0].backlog == 1);
    CHECK(r[1].key_blocks == 3);
    CHECK(r[2].key_blocks == 1);
}

TEST_CASE("Monte Carlo agrees with the closed form on a small matrix") {
    const std::vector<std::vector<double>> delays{{1.0}, {0.2, 0.5, 0.3}, {0.0, 0.5, 0.0, 0.5}};
    const std::vector<oracle::ProcessSpec> specs{oracle::ProcessSpec::iid_poisson(4.0),
                                                 oracle::ProcessSpec::ar1(5.0, 0.6, 1.0),
                                                 oracle::ProcessSpec::ma2(5.0, 0.6, 0.3, 1.0)};
    oracle::McOptions opt;
    opt.trials = 20000;
    opt.chunk_trials = 5000;
    for (const auto& spec : specs) {
        for (const auto& w : delays) {
            const DelayDistribution omega(w);
            analytics::AutocovarianceSeries s;
            s.cov = oracle::true_autocovariance(spec, static_cast<std::size_t>(omega.max_delay()));
            s.mean = spec.mean;
            s.sample_count = 1;
            const double expect = analytics::sigma_delta(s, omega);
            const auto mc = oracle::mc_sigma_delta(spec, omega.weights(), opt);
            CHECK(mc.sd == doctest::Approx(expect).epsilon(0.03));
            CHECK(std::abs(mc.mean) < 4.0 * mc.sd / std::sqrt(static_cast<double>(mc.trials)));
        }
    }
}

TEST_CASE("Monte Carlo is reproducible regardless of thread count") {
    const auto spec = oracle::ProcessSpec::iid_poisson(3.0);
    const std::vector<double> w{0.5, 0.5};
    oracle::McOptions a;
    a.trials = 4000;
    a.chunk_trials = 1000;
    a.threads = 1;
    auto b = a;
    b.threads = 4;
    const auto ra = oracle::mc_sigma_delta(spec, w, a);
    const auto rb = oracle::mc_sigma_delta(spec, w, b);
    CHECK(ra.sd == rb.sd);
    CHECK(ra.mean == rb.mean);
}
