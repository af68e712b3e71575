#include <doctest.h>

#include <sstream>

#include "quiks/errors.hpp"
#include "quiks/netsim.hpp"

using namespace quiks;
using namespace quiks::netsim;

namespace {

Topology line3(double delay = 0.1) {
    return Topology({Link{0, 1, 1, delay, 0.0}, Link{1, 2, 1, delay, 0.0}});
}

RelayJob job(const Topology& t, const Path& p, std::int64_t blocks, std::int64_t send,
             std::vector<double> delays) {
    RelayJob j;
    j.links = t.path_links(p);
    j.blocks = blocks;
    j.send_slot = SlotIndex{send};
    j.hop_delays_s = std::move(delays);
    return j;
}

}  // namespace

TEST_CASE("nsfnet shape and shortest paths") {
    const auto t = Topology::nsfnet();
    CHECK(t.nodes().size() == 14);
    CHECK(t.links().size() == 21);
    CHECK(route(t, 3, 7) == Path{3, 4, 6, 7});
    CHECK(route(t, 0, 1) == Path{0, 1});
    CHECK(route(t, 7, 3) == Path{7, 6, 4, 3});
}

TEST_CASE("route errors") {
    const auto t = Topology::nsfnet();
    CHECK_THROWS_AS((void)route(t, 2, 2), std::invalid_argument);
    CHECK_THROWS_AS((void)route(t, 0, 99), Unreachable);
}

TEST_CASE("equal-cost paths break ties lexicographically") {
    // square 0-1-3 and 0-2-3, both cost 2
    const Topology t({Link{0, 2, 1, 0.1, 0}, Link{2, 3, 1, 0.1, 0}, Link{0, 1, 1, 0.1, 0},
                      Link{1, 3, 1, 0.1, 0}});
    CHECK(route(t, 0, 3) == Path{0, 1, 3});
    CHECK(route(t, 3, 0) == Path{3, 1, 0});
}

TEST_CASE("topology validation") {
    CHECK_THROWS_AS(Topology({Link{0, 0, 1, 0.1, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(Topology({Link{0, 1, 1, 0.1, 0}, Link{1, 0, 1, 0.1, 0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(Topology({Link{0, 1, 0, 0.1, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(Topology({Link{0, 1, 1, 0.0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(Topology({Link{0, 1, 1, 0.1, 0}, Link{2, 3, 1, 0.1, 0}}),
                    std::invalid_argument);
}

TEST_CASE("edge-list parsing") {
    std::istringstream in("# a line graph\n0 1 5 200 1000\n\n1 2 5 300 1000  # tail\n");
    const auto t = Topology::parse(in);
    REQUIRE(t.links().size() == 2);
    CHECK(t.links()[1].mean_delay_s == doctest::Approx(0.3));
    std::istringstream bad("0 1 5\n");
    CHECK_THROWS_AS((void)Topology::parse(bad), std::invalid_argument);
    std::istringstream extra("0 1 5 200 1000 7\n");
    CHECK_THROWS_AS((void)Topology::parse(extra), std::invalid_argument);
}

TEST_CASE("hop delays are normal with a floor") {
    auto rng = traffic::make_rng(1, 1);
    double s = 0.0;
    double ss = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double d = sample_hop_delay(0.4, rng);
        REQUIRE(d >= 0.004);
        s += d;
        ss += d * d;
    }
    const double m = s / n;
    CHECK(m == doctest::Approx(0.4).epsilon(0.002));
    CHECK(std::sqrt(ss / n - m * m) == doctest::Approx(0.04).epsilon(0.02));
}

TEST_CASE("a 0.6 s relay sent in slot 0 arrives in slot 12") {
    const Topology t({Link{0, 1, 1, 0.6, 0}});
    Network net(t, {LinkKeyPool::with_initial(kAbundantPool, 0)}, 0.05, traffic::make_rng(1, 1));
    (void)net.submit_job(job(t, {0, 1}, 4, 0, {0.6}));
    for (std::int64_t i = 1; i < 12; ++i) {
        CHECK(net.advance_relays(SlotIndex{i}).empty());
    }
    const auto d = net.advance_relays(SlotIndex{12});
    REQUIRE(d.size() == 1);
    CHECK(d[0].realized_delay() == 12);
    CHECK(d[0].blocks == 4);
    CHECK(net.jobs_in_network() == 0);
}

TEST_CASE("a starved hop holds the job until keys accrue") {
    const auto t = line3();
    // second link gains 0.5 blocks per slot
    Network net(t, {LinkKeyPool::with_initial(100, 0), LinkKeyPool::with_initial(0, 10.0)}, 0.05,
                traffic::make_rng(1, 1));
    (void)net.submit_job(job(t, {0, 1, 2}, 5, 0, {0.1, 0.1}));
    std::vector<RelayJob> got;
    for (std::int64_t i = 1; i <= 20 && got.empty(); ++i) {
        got = net.advance_relays(SlotIndex{i});
        net.accrue_slot();
    }
    REQUIRE(got.size() == 1);
    // five blocks exist after ten slots; the last hop leaves at 0.5 s
    CHECK(got[0].delivered_slot == SlotIndex{12});
    CHECK(got[0].waited_s == doctest::Approx(0.4));
}

TEST_CASE("waiting jobs are served in FIFO order per link") {
    const auto t = line3();
    Network net(t, {LinkKeyPool::with_initial(100, 0), LinkKeyPool::with_initial(0, 20.0)}, 0.05,
                traffic::make_rng(1, 1));
    (void)net.submit_job(job(t, {0, 1, 2}, 6, 0, {0.1, 0.1}));
    (void)net.submit_job(job(t, {0, 1, 2}, 1, 1, {0.1, 0.1}));
    std::vector<RelayJob> order;
    for (std::int64_t i = 1; i <= 40; ++i) {
        for (auto& j : net.advance_relays(SlotIndex{i})) {
            order.push_back(std::move(j));
        }
        net.accrue_slot();
    }
    REQUIRE(order.size() == 2);
    CHECK(order[0].blocks == 6);
    CHECK(order[1].blocks == 1);
    CHECK(order[0].delivered_slot <= order[1].delivered_slot);
}

TEST_CASE("key pools conserve blocks") {
    const auto t = Topology::nsfnet(0.2);
    std::vector<LinkKeyPool> pools(t.links().size(), LinkKeyPool::with_initial(50, 7.3));
    Network net(t, pools, 0.05, traffic::make_rng(4, 1));
    const auto path = route(t, 0, 13);
    for (std::int64_t i = 0; i < 400; ++i) {
        (void)net.advance_relays(SlotIndex{i});
        if (i % 3 == 0) {
            (void)net.submit(0, path, 3, SlotIndex{i});
        }
        net.accrue_slot();
    }
    for (const auto& p : net.pools()) {
        CHECK(p.available + p.consumed == p.initial + p.accrued);
        CHECK(p.available >= 0);
    }
}

TEST_CASE("fractional accrual carries over") {
    auto p = LinkKeyPool::with_initial(0, 3.0);
    for (int i = 0; i < 20; ++i) {
        p.accrue(0.05);
    }
    CHECK(p.available == 3);
    CHECK_FALSE(p.try_consume(4));
    CHECK(p.try_consume(3));
    CHECK(p.consumed == 3);
}

TEST_CASE("minimum key requirement sums demand over shortest paths") {
    const auto t = Topology::nsfnet();
    traffic::AppSpec a;
    a.source = 3;
    a.destination = 7;
    a.demand = 100;
    traffic::AppSpec b;
    b.source = 0;
    b.destination = 1;
    b.demand = 50;
    const auto need = min_key_requirement(t, {a, b, a});
    CHECK(need[*t.link_index(3, 4)] == 200);
    CHECK(need[*t.link_index(4, 6)] == 200);
    CHECK(need[*t.link_index(6, 7)] == 200);
    CHECK(need[*t.link_index(0, 1)] == 50);
    std::int64_t total = 0;
    for (auto v : need) {
        total += v;
    }
    CHECK(total == 650);
}
