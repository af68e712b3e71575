#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace quiks {

/// Slot count since scenario start. One slot lasts `T` seconds of simulated time.
struct SlotIndex {
    std::int64_t value = 0;

    constexpr auto operator<=>(const SlotIndex&) const = default;
    constexpr SlotIndex next() const noexcept { return SlotIndex{value + 1}; }
};

/// Relay requests emitted in one slot together with the delay (in slots) each one will see.
struct InFlightBatch {
    SlotIndex send_slot;
    std::vector<std::int64_t> delays;  // one entry per request, each >= 1

    bool operator==(const InFlightBatch&) const = default;
};

/// Per-slot state of one end-to-end buffering unit.
///
/// At the end of every slot at most one of `key_blocks` and `backlog` is non-zero, so the
/// signed level `key_blocks - backlog` carries the whole queue state.
struct BufferState {
    std::int64_t key_blocks = 0;
    std::int64_t backlog = 0;
    std::vector<InFlightBatch> in_flight;

    [[nodiscard]] std::int64_t signed_level() const noexcept { return key_blocks - backlog; }
    bool operator==(const BufferState&) const = default;
};

struct SlotEvents {
    std::int64_t n = 0;  // application requests arriving
    std::int64_t c = 0;  // relayed key blocks arriving
    std::int64_t r = 0;  // relay requests emitted
};

/// Probability mass over relay delays of 1..K slots.
class DelayDistribution {
public:
    /// `omega[j-1]` is the probability of a delay of exactly j slots. Trailing zeros are
    /// trimmed so that K is tight. Throws InvalidDelayDistribution on bad input.
    explicit DelayDistribution(std::vector<double> omega);

    /// Normalises raw counts (index j-1 holds the count observed at delay j).
    static DelayDistribution from_counts(std::span<const double> counts);

    /// Unit mass at `delay` slots.
    static DelayDistribution deterministic(int delay);

    [[nodiscard]] int max_delay() const noexcept { return static_cast<int>(omega_.size()); }
    /// 1-based access, as in omega_j.
    [[nodiscard]] double at(int j) const { return omega_.at(static_cast<std::size_t>(j - 1)); }
    [[nodiscard]] std::span<const double> weights() const noexcept { return omega_; }
    [[nodiscard]] double mean() const noexcept;

    bool operator==(const DelayDistribution&) const = default;

private:
    std::vector<double> omega_;
};

/// Adds this slot's relayed keys, then serves the backlog and the new arrivals FIFO.
/// `in_flight` is left untouched.
[[nodiscard]] BufferState apply_slot(BufferState state, const SlotEvents& events);

struct DeliveryResult {
    std::int64_t delivered = 0;
    std::vector<InFlightBatch> remaining;
};

/// Removes every request whose send slot plus realized delay equals `current` and counts them.
[[nodiscard]] DeliveryResult deliveries_for_slot(std::vector<InFlightBatch> in_flight,
                                                 SlotIndex current);

}  // namespace quiks
