#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "quiks/model.hpp"

namespace quiks::traffic {

using Rng = std::mt19937_64;

/// Independent generator stream for (`seed`, `stream`, `tag`).
[[nodiscard]] Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag = 0);

struct PoissonProcess {
    bool operator==(const PoissonProcess&) const = default;
};

/// Poisson-timed events, each carrying a Pareto-distributed batch of requests.
struct PpbpProcess {
    double event_rate = 1.0;  // events per second
    double shape = 2.0;
    double scale = 25.0;      // Pareto minimum, requests

    bool operator==(const PpbpProcess&) const = default;
};

using RequestProcess = std::variant<PoissonProcess, PpbpProcess>;

struct AppSpec {
    int source = 0;
    int destination = 1;
    double start_time = 0.0;   // seconds
    double rate = 50.0;        // requests per second
    RequestProcess process = PoissonProcess{};
    std::int64_t demand = 1;   // total key blocks

    bool operator==(const AppSpec&) const = default;
};

/// Throws std::invalid_argument when an AppSpec invariant does not hold.
void validate(const AppSpec& app);

/// Pareto scale that makes a PPBP's long-run rate equal `rate`.
[[nodiscard]] double ppbp_scale_for_rate(double rate, double event_rate, double shape);

[[nodiscard]] std::int64_t gen_poisson(double rate, double slot_seconds, Rng& rng);

/// Throws InvalidShape unless shape > 1 and scale > 0.
[[nodiscard]] std::int64_t gen_ppbp(double event_rate, double shape, double scale,
                                    double slot_seconds, Rng& rng);

/// Per-slot request counts for one application, stopping exactly at its demand.
class RequestSource {
public:
    RequestSource(AppSpec spec, double slot_seconds, Rng rng);

    /// Requests this application issues in `slot`; zero before its start and after exhaustion.
    std::int64_t next(SlotIndex slot);

    [[nodiscard]] const AppSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] SlotIndex start_slot() const noexcept { return start_slot_; }
    [[nodiscard]] std::int64_t generated() const noexcept { return generated_; }
    [[nodiscard]] bool exhausted() const noexcept { return generated_ >= spec_.demand; }

private:
    AppSpec spec_;
    double slot_seconds_;
    Rng rng_;
    SlotIndex start_slot_;
    std::int64_t generated_ = 0;
};

struct RequestTrace {
    std::vector<std::int64_t> counts;   // per slot since the application's start slot
    std::optional<SlotIndex> completion_slot;
};

/// Runs a RequestSource until its demand is met or `max_slots` have elapsed.
[[nodiscard]] RequestTrace make_trace(const AppSpec& spec, double slot_seconds, Rng rng,
                                      std::int64_t max_slots);

}  // namespace quiks::traffic
