#include <doctest.h>

#include <random>

#include "quiks/errors.hpp"
#include "quiks/model.hpp"
#include "quiks/oracle.hpp"

using namespace quiks;

TEST_CASE("keys arriving in a slot serve that slot's requests") {
    BufferState s;
    s.key_blocks = 3;
    s = apply_slot(s, {.n = 5, .c = 1});
    CHECK(s.key_blocks == 0);
    CHECK(s.backlog == 1);
    s = apply_slot(s, {.n = 0, .c = 4});
    CHECK(s.key_blocks == 3);
    CHECK(s.backlog == 0);
}

TEST_CASE("signed level follows m = m - n + c and never holds both keys and backlog") {
    std::mt19937_64 rng(7);
    std::poisson_distribution<std::int64_t> pn(3.0);
    BufferState s;
    std::int64_t level = 0;
    for (int i = 0; i < 5000; ++i) {
        const SlotEvents e{.n = pn(rng), .c = pn(rng)};
        s = apply_slot(s, e);
        level += e.c - e.n;
        REQUIRE(s.signed_level() == level);
        REQUIRE((s.key_blocks == 0 || s.backlog == 0));
        REQUIRE(s.key_blocks >= 0);
        REQUIRE(s.backlog >= 0);
    }
}

TEST_CASE("aggregate buffer matches the item-level buffer") {
    std::mt19937_64 rng(11);
    std::poisson_distribution<std::int64_t> pn(4.0);
    std::vector<std::int64_t> n(3000);
    std::vector<std::int64_t> c(3000);
    for (std::size_t i = 0; i < n.size(); ++i) {
        n[i] = pn(rng);
        c[i] = pn(rng);
    }
    const auto items = oracle::item_buffer_run(n, c, 6);
    BufferState s;
    s.key_blocks = 6;
    for (std::size_t i = 0; i < n.size(); ++i) {
        s = apply_slot(s, {.n = n[i], .c = c[i]});
        REQUIRE(s.key_blocks == items[i].key_blocks);
        REQUIRE(s.backlog == items[i].backlog);
    }
}

TEST_CASE("deliveries_for_slot removes exactly the matured requests") {
    std::vector<InFlightBatch> f{{SlotIndex{0}, {1, 2, 2, 3}}, {SlotIndex{1}, {1, 1}}};
    auto r = deliveries_for_slot(f, SlotIndex{2});
    CHECK(r.delivered == 4);
    std::int64_t left = 0;
    for (const auto& b : r.remaining) {
        left += static_cast<std::int64_t>(b.delays.size());
    }
    CHECK(left == 2);
    r = deliveries_for_slot(r.remaining, SlotIndex{3});
    CHECK(r.delivered == 1);
    r = deliveries_for_slot(r.remaining, SlotIndex{2});
    CHECK(r.delivered == 0);
}

TEST_CASE("reactive relaying conserves requests and keys") {
    std::mt19937_64 rng(3);
    std::poisson_distribution<std::int64_t> pn(5.0);
    std::uniform_int_distribution<std::int64_t> delay(1, 4);
    std::vector<InFlightBatch> flight;
    BufferState s;
    std::int64_t sent = 0;
    std::int64_t got = 0;
    for (std::int64_t i = 0; i < 2000; ++i) {
        auto d = deliveries_for_slot(std::move(flight), SlotIndex{i});
        flight = std::move(d.remaining);
        got += d.delivered;
        const auto n = i < 1990 ? pn(rng) : 0;
        s = apply_slot(s, {.n = n, .c = d.delivered});
        InFlightBatch b{SlotIndex{i}, {}};
        for (std::int64_t k = 0; k < n; ++k) {
            b.delays.push_back(delay(rng));
        }
        sent += n;
        flight.push_back(std::move(b));
    }
    CHECK(got == sent);
    CHECK(s.signed_level() == 0);
}

TEST_CASE("delay distribution validation") {
    CHECK_THROWS_AS(DelayDistribution({}), InvalidDelayDistribution);
    CHECK_THROWS_AS(DelayDistribution({0.5, -0.1, 0.6}), InvalidDelayDistribution);
    CHECK_THROWS_AS(DelayDistribution({0.5, 0.2}), InvalidDelayDistribution);
    const DelayDistribution d({0.25, 0.75, 0.0, 0.0});
    CHECK(d.max_delay() == 2);
    CHECK(d.mean() == doctest::Approx(1.75));
    const std::vector<double> counts{2.0, 0.0, 6.0};
    const auto f = DelayDistribution::from_counts(counts);
    CHECK(f.at(1) == doctest::Approx(0.25));
    CHECK(f.at(3) == doctest::Approx(0.75));
    CHECK(DelayDistribution::deterministic(4).max_delay() == 4);
}
