#include <doctest.h>

#include <cmath>

#include "quiks/controllers.hpp"
#include "quiks/errors.hpp"

using namespace quiks;

namespace {

Observation obs(std::int64_t slot, std::int64_t n, std::int64_t level,
                std::span<const Delivery> d = {}) {
    return {SlotIndex{slot}, n, d, level};
}

}  // namespace

TEST_CASE("stable phase relays reactively while the buffer holds") {
    QuiksState s;
    s.phase = QuiksPhase::Stable;
    s.sigma_hat = 6.0;
    s.last_level = 40;
    CHECK(quiks_step(s, obs(100, 7, 33)).relay_requests == 7);
    CHECK(s.phase == QuiksPhase::Stable);
    CHECK(s.step_ops.ops <= 1);
}

TEST_CASE("stable phase re-probes when the opening level drops below sigma") {
    QuiksState s;
    s.phase = QuiksPhase::Stable;
    s.sigma_hat = 6.0;
    s.last_level = 5;
    const auto d = quiks_step(s, obs(100, 4, 1));
    CHECK(s.phase == QuiksPhase::ProbingParameters);
    CHECK(s.reprobes == 1);
    CHECK(s.probe_start == SlotIndex{100});
    // K is unknown, so the probe over-sends (1 + beta) N.
    CHECK(d.relay_requests == 12);
    CHECK(s.n_record.size() == 1);
}

TEST_CASE("stable phase ignores a dip inside the current slot") {
    QuiksState s;
    s.phase = QuiksPhase::Stable;
    s.sigma_hat = 6.0;
    s.last_level = 20;
    CHECK(quiks_step(s, obs(1, 30, -10)).relay_requests == 30);
    CHECK(s.phase == QuiksPhase::Stable);
    // ...but the next slot opens below sigma.
    (void)quiks_step(s, obs(2, 3, -7));
    CHECK(s.phase == QuiksPhase::ProbingParameters);
}

TEST_CASE("adjusting phase adds a positive deficit in one slot") {
    QuiksState s;
    s.phase = QuiksPhase::AdjustingBuffer;
    s.pending_adjust = 9;
    CHECK(quiks_step(s, obs(10, 4, 0)).relay_requests == 13);
    CHECK(s.pending_adjust == 0);
    CHECK(s.phase == QuiksPhase::Stable);
}

TEST_CASE("adjusting phase works off a surplus across slots") {
    QuiksState s;
    s.phase = QuiksPhase::AdjustingBuffer;
    s.pending_adjust = -3;
    CHECK(quiks_step(s, obs(10, 2, 0)).relay_requests == 0);
    CHECK(s.pending_adjust == -1);
    CHECK(s.phase == QuiksPhase::AdjustingBuffer);
    CHECK(quiks_step(s, obs(11, 2, 0)).relay_requests == 1);
    CHECK(s.phase == QuiksPhase::Stable);
}

TEST_CASE("a probe with deterministic delay sizes and settles") {
    QuiksController q;
    const std::int64_t delay = 3;
    std::vector<std::int64_t> sent;
    std::int64_t level = 0;
    const std::int64_t pattern[] = {5, 2, 7, 4, 6, 3};
    for (std::int64_t i = 0; i < 40 && q.state().phase == QuiksPhase::ProbingParameters; ++i) {
        std::vector<Delivery> d;
        if (i >= delay) {
            d.push_back({SlotIndex{i - delay}, sent[static_cast<std::size_t>(i - delay)]});
            level += sent[static_cast<std::size_t>(i - delay)];
        }
        const auto n = pattern[i % 6];
        level -= n;
        sent.push_back(q.step(obs(i, n, level, d)).relay_requests);
    }
    REQUIRE(q.state().phase != QuiksPhase::ProbingParameters);
    REQUIRE(q.sizings().size() == 1);
    CHECK(q.state().k_est == 3);
    CHECK(q.state().sigma_hat > 0.0);
    CHECK(q.state().target_level ==
          std::max<std::int64_t>(1, std::llround(5.0 * q.state().sigma_hat)));
    CHECK(q.state().n_record.empty());
    CHECK(q.state().w_record.empty());
    CHECK(q.state().finalize_ops.ops <= static_cast<std::uint64_t>(8 * 3 * 3));
}

TEST_CASE("probe over-sends until alpha K slots have passed") {
    QuiksState s;
    s.k_est = 4;
    s.probe_start = SlotIndex{0};
    s.n_record.assign(7, 1.0);
    s.outstanding.assign(7, 0);
    s.w_record.assign(4, 1.0);
    CHECK(quiks_step(s, obs(7, 3, 0)).relay_requests == 9);
    CHECK(quiks_step(s, obs(8, 3, 0)).relay_requests == 3);
}

TEST_CASE("probe restarts after k_cap slots with no satisfied send slot") {
    QuiksParams p;
    p.k_cap = 20;
    QuiksController q(p);
    for (std::int64_t i = 0; i < 20; ++i) {
        (void)q.step(obs(i, 2, -2 * (i + 1)));
    }
    CHECK(q.state().probes_aborted == 1);
    CHECK(q.state().probe_start == SlotIndex{20});
    CHECK(q.state().n_record.empty());
}

TEST_CASE("finalizing an empty probe throws") {
    QuiksState s;
    s.k_est = 2;
    s.n_record.assign(10, 1.0);
    CHECK_THROWS_AS((void)quiks_finalize_probe(s), EmptyProbe);
}

TEST_CASE("baselines") {
    SUBCASE("no buffer relays exactly N") {
        NoBufferController c;
        CHECK(c.step(obs(0, 9, 0)).relay_requests == 9);
        CHECK(c.step(obs(1, 0, 0)).relay_requests == 0);
    }
    SUBCASE("KaaS relays a fixed rate") {
        KaasController c(120.0, 0.05);
        std::int64_t total = 0;
        for (int i = 0; i < 100; ++i) {
            const auto r = c.step(obs(i, 0, 1000)).relay_requests;
            CHECK(r == 6);
            total += r;
        }
        CHECK(total == 600);
        KaasController slow(30.0, 0.05);
        std::int64_t sum = 0;
        for (int i = 0; i < 10; ++i) {
            sum += slow.step(obs(i, 0, 0)).relay_requests;
        }
        CHECK(sum == 15);
    }
    SUBCASE("ST-VQKP doubles the request count") {
        StVqkpController c;
        CHECK(c.step(obs(0, 7, 0)).relay_requests == 14);
        CHECK(c.step(obs(1, 0, 0)).relay_requests == 0);
    }
    SUBCASE("DT-VQKP refills in a burst then waits") {
        DtVqkpController c(DtVqkpParams{}, 0.05);
        const auto first = c.step(obs(0, 5, -5)).relay_requests;
        CHECK(first > 0);
        CHECK(c.measured_rate_rps() == doctest::Approx(100.0));
        CHECK(c.step(obs(1, 5, -10)).relay_requests == 0);
    }
}

TEST_CASE("phase names") {
    CHECK(to_string(QuiksPhase::ProbingParameters) == "probing");
    CHECK(to_string(QuiksPhase::AdjustingBuffer) == "adjusting");
    CHECK(to_string(QuiksPhase::Stable) == "stable");
}
