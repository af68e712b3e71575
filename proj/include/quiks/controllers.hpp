#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quiks/analytics.hpp"
#include "quiks/model.hpp"

namespace quiks {

/// Relayed keys that reached the buffer this slot, grouped by the slot their requests left.
struct Delivery {
    SlotIndex send_slot;
    std::int64_t count = 0;
};

/// What a controller sees at the end of one slot, after the buffer served this slot's requests.
struct Observation {
    SlotIndex slot;
    std::int64_t arrivals = 0;               // N
    std::span<const Delivery> deliveries;    // keys that arrived this slot
    std::int64_t buffer_level = 0;           // signed level, keys minus backlog
};

struct ControllerDecision {
    std::int64_t relay_requests = 0;
};

/// A per-buffer relaying policy. One instance drives exactly one buffering unit.
class Controller {
public:
    virtual ~Controller() = default;

    virtual ControllerDecision step(const Observation& observed) = 0;
    [[nodiscard]] virtual std::string_view name() const = 0;
    /// True while the controller is still establishing its buffer (QuIKS probe/adjust).
    [[nodiscard]] virtual bool in_transient() const { return false; }
};

// ---------------------------------------------------------------------------------------------
// QuIKS
// ---------------------------------------------------------------------------------------------

enum class QuiksPhase { ProbingParameters, AdjustingBuffer, Stable };

[[nodiscard]] std::string_view to_string(QuiksPhase phase) noexcept;

struct QuiksParams {
    int alpha = 2;
    int beta = 2;
    /// Probing gives up and restarts if no send slot has been fully satisfied after this many slots.
    int k_cap = 200;
    double target_sigmas = 5.0;

    bool operator==(const QuiksParams&) const = default;
};

struct QuiksState {
    QuiksParams params;
    QuiksPhase phase = QuiksPhase::ProbingParameters;

    std::vector<double> n_record;            // requests per probe slot
    std::vector<double> w_record;            // keys received per delay, index d-1
    std::vector<std::int64_t> outstanding;   // unsatisfied requests per probe send slot
    std::optional<int> k_est;

    double sigma_hat = 0.0;
    std::int64_t target_level = 0;
    std::int64_t pending_adjust = 0;         // d
    SlotIndex probe_start;
    std::int64_t last_level = 0;             // buffer level at the end of the previous slot

    // diagnostics
    std::int64_t probes_started = 1;
    std::int64_t probes_aborted = 0;
    std::int64_t reprobes = 0;
    std::int64_t probes_finalized = 0;
    analytics::SizingResult last_sizing;
    analytics::OpCounter finalize_ops;       // work of the most recent probe finalisation
    analytics::OpCounter step_ops;           // work of the most recent step
};

/// Runs one slot of the two-phase controller and returns the relay requests to send.
ControllerDecision quiks_step(QuiksState& state, const Observation& observed);

/// Turns the probe records into a buffer target. Throws EmptyProbe when nothing was delivered.
[[nodiscard]] analytics::SizingResult quiks_finalize_probe(const QuiksState& state,
                                                           analytics::OpCounter* counter = nullptr);

class QuiksController final : public Controller {
public:
    explicit QuiksController(QuiksParams params = {}, SlotIndex start = {});

    ControllerDecision step(const Observation& observed) override;
    [[nodiscard]] std::string_view name() const override { return "quiks"; }
    [[nodiscard]] bool in_transient() const override {
        return state_.phase != QuiksPhase::Stable;
    }

    [[nodiscard]] const QuiksState& state() const noexcept { return state_; }
    /// Every sizing computed so far, in order.
    [[nodiscard]] const std::vector<analytics::SizingResult>& sizings() const noexcept {
        return sizings_;
    }

private:
    QuiksState state_;
    std::vector<analytics::SizingResult> sizings_;
};

// ---------------------------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------------------------

/// Relays exactly what the application asks for; requests wait out the full relay delay.
class NoBufferController final : public Controller {
public:
    ControllerDecision step(const Observation& observed) override;
    [[nodiscard]] std::string_view name() const override { return "no_buffer"; }
};

/// Fixed relaying rate that never stops.
class KaasController final : public Controller {
public:
    KaasController(double rate_rps, double slot_seconds);

    ControllerDecision step(const Observation& observed) override;
    [[nodiscard]] std::string_view name() const override { return "kaas"; }

private:
    double per_slot_;
    double carry_ = 0.0;
};

/// Relays a fixed multiple of the application request count, stopping when requests stop.
class StVqkpController final : public Controller {
public:
    explicit StVqkpController(double multiplier = 2.0);

    ControllerDecision step(const Observation& observed) override;
    [[nodiscard]] std::string_view name() const override { return "st_vqkp"; }

private:
    double multiplier_;
    double carry_ = 0.0;
};

struct DtVqkpParams {
    double factor = 200.0;
    int rate_window_slots = 20;
    double low_watermark_slots = 1.0;
    double delay_smoothing = 0.125;

    bool operator==(const DtVqkpParams&) const = default;
};

/// Threshold/refill heuristic: when buffered plus outstanding keys fall below the low
/// watermark, request rate × relay delay × factor blocks in one burst.
class DtVqkpController final : public Controller {
public:
    DtVqkpController(DtVqkpParams params, double slot_seconds);

    ControllerDecision step(const Observation& observed) override;
    [[nodiscard]] std::string_view name() const override { return "dt_vqkp"; }

    [[nodiscard]] double measured_rate_rps() const;
    [[nodiscard]] double measured_delay_s() const noexcept { return delay_s_; }

private:
    DtVqkpParams params_;
    double slot_seconds_;
    std::vector<std::int64_t> window_;
    std::size_t window_pos_ = 0;
    std::int64_t window_sum_ = 0;
    std::int64_t slots_seen_ = 0;
    std::int64_t outstanding_ = 0;
    double delay_s_;
    bool delay_observed_ = false;
};

}  // namespace quiks
