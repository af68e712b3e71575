#include "quiks/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "quiks/errors.hpp"

namespace quiks {

namespace {
constexpr double kMassTolerance = 1e-9;
}

DelayDistribution::DelayDistribution(std::vector<double> omega) : omega_(std::move(omega)) {
    while (!omega_.empty() && omega_.back() == 0.0) {
        omega_.pop_back();
    }
    if (omega_.empty()) {
        throw InvalidDelayDistribution("delay distribution has no mass");
    }
    for (std::size_t j = 0; j < omega_.size(); ++j) {
        const double w = omega_[j];
        if (!(w >= 0.0 && w <= 1.0)) {
            throw InvalidDelayDistribution("omega[" + std::to_string(j + 1) +
                                           "] outside [0,1]: " + std::to_string(w));
        }
    }
    const double total = std::accumulate(omega_.begin(), omega_.end(), 0.0);
    if (std::abs(total - 1.0) > kMassTolerance) {
        throw InvalidDelayDistribution("delay distribution sums to " + std::to_string(total));
    }
}

DelayDistribution DelayDistribution::from_counts(std::span<const double> counts) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (!(total > 0.0)) {
        throw InvalidDelayDistribution("no delay observations to normalise");
    }
    std::vector<double> omega(counts.begin(), counts.end());
    for (double& w : omega) {
        w /= total;
    }
    return DelayDistribution(std::move(omega));
}

DelayDistribution DelayDistribution::deterministic(int delay) {
    if (delay < 1) {
        throw InvalidDelayDistribution("deterministic delay must be >= 1 slot");
    }
    std::vector<double> omega(static_cast<std::size_t>(delay), 0.0);
    omega.back() = 1.0;
    return DelayDistribution(std::move(omega));
}

double DelayDistribution::mean() const noexcept {
    double m = 0.0;
    for (std::size_t j = 0; j < omega_.size(); ++j) {
        m += static_cast<double>(j + 1) * omega_[j];
    }
    return m;
}

BufferState apply_slot(BufferState state, const SlotEvents& events) {
    // Signed level m = keys - backlog evolves as m' = m - n + c.
    const std::int64_t level = state.signed_level() - events.n + events.c;
    state.key_blocks = std::max<std::int64_t>(level, 0);
    state.backlog = std::max<std::int64_t>(-level, 0);
    return state;
}

DeliveryResult deliveries_for_slot(std::vector<InFlightBatch> in_flight, SlotIndex current) {
    DeliveryResult result;
    result.remaining.reserve(in_flight.size());
    for (auto& batch : in_flight) {
        const std::int64_t due = current.value - batch.send_slot.value;
        const auto before = batch.delays.size();
        std::erase(batch.delays, due);
        result.delivered += static_cast<std::int64_t>(before - batch.delays.size());
        if (!batch.delays.empty()) {
            result.remaining.push_back(std::move(batch));
        }
    }
    return result;
}

}  // namespace quiks
