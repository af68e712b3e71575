#include "quiks/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "quiks/errors.hpp"

namespace quiks {

std::string_view to_string(QuiksPhase phase) noexcept {
    switch (phase) {
        case QuiksPhase::ProbingParameters:
            return "probing";
        case QuiksPhase::AdjustingBuffer:
            return "adjusting";
        case QuiksPhase::Stable:
            return "stable";
    }
    return "unknown";
}

namespace {

std::int64_t round_half_up(double x) { return static_cast<std::int64_t>(std::floor(x + 0.5)); }

void release(auto& v) {
    v.clear();
    v.shrink_to_fit();
}

void start_probe(QuiksState& state, SlotIndex at) {
    state.phase = QuiksPhase::ProbingParameters;
    release(state.n_record);
    release(state.w_record);
    release(state.outstanding);
    state.k_est.reset();
    state.probe_start = at;
    state.pending_adjust = 0;
}

int largest_observed_delay(const std::vector<double>& w) {
    for (auto j = w.size(); j > 0; --j) {
        if (w[j - 1] > 0.0) {
            return static_cast<int>(j);
        }
    }
    return 0;
}

ControllerDecision probe_slot(QuiksState& state, const Observation& obs) {
    const auto& p = state.params;
    const std::int64_t n = obs.arrivals;
    const std::int64_t elapsed = obs.slot.value - state.probe_start.value;
    state.n_record.push_back(static_cast<double>(n));

    bool satisfied = false;
    for (const auto& d : obs.deliveries) {
        const std::int64_t delay = obs.slot.value - d.send_slot.value;
        if (delay < 1 || d.count <= 0) {
            continue;
        }
        if (state.w_record.size() < static_cast<std::size_t>(delay)) {
            state.w_record.resize(static_cast<std::size_t>(delay), 0.0);
        }
        state.w_record[static_cast<std::size_t>(delay - 1)] += static_cast<double>(d.count);
        const std::int64_t offset = d.send_slot.value - state.probe_start.value;
        if (offset >= 0 && offset < static_cast<std::int64_t>(state.outstanding.size())) {
            auto& left = state.outstanding[static_cast<std::size_t>(offset)];
            if (left > 0) {
                left = std::max<std::int64_t>(0, left - d.count);
                satisfied = satisfied || left == 0;
            }
        }
        ++state.step_ops.ops;
    }
    if (satisfied) {
        // K only ever grows within one probe.
        const int k = largest_observed_delay(state.w_record);
        state.k_est = std::max(state.k_est.value_or(0), k);
    }

    std::int64_t r = n;
    if (!state.k_est || elapsed < static_cast<std::int64_t>(p.alpha) * *state.k_est) {
        r += static_cast<std::int64_t>(p.beta) * n;
    }
    state.outstanding.push_back(r);

    const std::int64_t done = elapsed + 1;
    if (state.k_est && done >= static_cast<std::int64_t>(p.alpha + 1) * *state.k_est) {
        state.finalize_ops = {};
        const auto sizing = quiks_finalize_probe(state, &state.finalize_ops);
        state.last_sizing = sizing;
        ++state.probes_finalized;
        state.sigma_hat = sizing.sigma_delta;
        state.target_level = sizing.target_level;
        state.pending_adjust = sizing.target_level - obs.buffer_level;
        release(state.n_record);
        release(state.w_record);
        release(state.outstanding);
        state.phase = state.pending_adjust == 0 ? QuiksPhase::Stable : QuiksPhase::AdjustingBuffer;
    } else if (!state.k_est && done >= p.k_cap) {
        ++state.probes_aborted;
        ++state.probes_started;
        start_probe(state, obs.slot.next());
    }
    return {r};
}

}  // namespace

analytics::SizingResult quiks_finalize_probe(const QuiksState& state,
                                             analytics::OpCounter* counter) {
    const double total = std::accumulate(state.w_record.begin(), state.w_record.end(), 0.0);
    if (!(total > 0.0) || !state.k_est) {
        throw EmptyProbe("probe finished without any delivered relay request");
    }
    int k = std::max(*state.k_est, largest_observed_delay(state.w_record));
    k = std::min<int>(k, static_cast<int>(state.n_record.size() / 2));
    k = std::max(k, 1);

    std::vector<double> counts(state.w_record.begin(),
                               state.w_record.begin() +
                                   std::min<std::ptrdiff_t>(k, std::ssize(state.w_record)));
    if (counter != nullptr) {
        counter->ops += counts.size();
    }
    if (std::accumulate(counts.begin(), counts.end(), 0.0) <= 0.0) {
        throw EmptyProbe("no deliveries within the estimated delay range");
    }
    const auto omega = DelayDistribution::from_counts(counts);
    const auto cov = analytics::estimate_autocovariance(
        state.n_record, static_cast<std::size_t>(omega.max_delay()), counter);

    analytics::SizingResult out;
    out.sigma_delta = analytics::sigma_delta(cov, omega, counter);
    out.target_level =
        std::max<std::int64_t>(1, round_half_up(state.params.target_sigmas * out.sigma_delta));
    out.reprobe_threshold = out.sigma_delta;
    out.epsilon = analytics::normal_cdf(-state.params.target_sigmas);
    return out;
}

ControllerDecision quiks_step(QuiksState& state, const Observation& observed) {
    state.step_ops = {};
    ++state.step_ops.ops;
    const std::int64_t n = observed.arrivals;
    // The stable check looks at the buffer as the slot opens, before this slot's requests.
    const std::int64_t opening_level = state.last_level;
    state.last_level = observed.buffer_level;
    switch (state.phase) {
        case QuiksPhase::Stable:
            if (static_cast<double>(opening_level) < state.sigma_hat) {
                ++state.reprobes;
                ++state.probes_started;
                start_probe(state, observed.slot);
                return probe_slot(state, observed);
            }
            return {n};
        case QuiksPhase::AdjustingBuffer: {
            const std::int64_t r = std::max<std::int64_t>(0, n + state.pending_adjust);
            state.pending_adjust += n - r;
            if (state.pending_adjust == 0) {
                state.phase = QuiksPhase::Stable;
            }
            return {r};
        }
        case QuiksPhase::ProbingParameters:
            return probe_slot(state, observed);
    }
    return {n};
}

QuiksController::QuiksController(QuiksParams params, SlotIndex start) {
    state_.params = params;
    state_.probe_start = start;
}

ControllerDecision QuiksController::step(const Observation& observed) {
    const auto finalized = state_.probes_finalized;
    const auto decision = quiks_step(state_, observed);
    if (state_.probes_finalized != finalized) {
        sizings_.push_back(state_.last_sizing);
    }
    return decision;
}

// ---------------------------------------------------------------------------------------------

ControllerDecision NoBufferController::step(const Observation& observed) {
    return {observed.arrivals};
}

KaasController::KaasController(double rate_rps, double slot_seconds)
    : per_slot_(rate_rps * slot_seconds) {}

ControllerDecision KaasController::step(const Observation&) {
    carry_ += per_slot_;
    const auto r = static_cast<std::int64_t>(std::floor(carry_ + 1e-9));
    carry_ -= static_cast<double>(r);
    return {r};
}

StVqkpController::StVqkpController(double multiplier) : multiplier_(multiplier) {}

ControllerDecision StVqkpController::step(const Observation& observed) {
    carry_ += multiplier_ * static_cast<double>(observed.arrivals);
    const auto r = static_cast<std::int64_t>(std::floor(carry_ + 1e-9));
    carry_ -= static_cast<double>(r);
    return {r};
}

DtVqkpController::DtVqkpController(DtVqkpParams params, double slot_seconds)
    : params_(params),
      slot_seconds_(slot_seconds),
      window_(static_cast<std::size_t>(std::max(1, params.rate_window_slots)), 0),
      delay_s_(slot_seconds) {}

double DtVqkpController::measured_rate_rps() const {
    const auto span = std::min<std::int64_t>(slots_seen_, std::ssize(window_));
    if (span == 0) {
        return 0.0;
    }
    return static_cast<double>(window_sum_) / (static_cast<double>(span) * slot_seconds_);
}

ControllerDecision DtVqkpController::step(const Observation& observed) {
    window_sum_ += observed.arrivals - window_[window_pos_];
    window_[window_pos_] = observed.arrivals;
    window_pos_ = (window_pos_ + 1) % window_.size();
    ++slots_seen_;

    for (const auto& d : observed.deliveries) {
        outstanding_ -= d.count;
        const double delay =
            static_cast<double>(observed.slot.value - d.send_slot.value) * slot_seconds_;
        if (!delay_observed_) {
            delay_s_ = delay;
            delay_observed_ = true;
        } else {
            delay_s_ += params_.delay_smoothing * (delay - delay_s_);
        }
    }
    outstanding_ = std::max<std::int64_t>(outstanding_, 0);

    const double rate = measured_rate_rps();
    const double watermark = rate * slot_seconds_ * params_.low_watermark_slots;
    const auto pipeline = static_cast<double>(observed.buffer_level + outstanding_);
    if (rate <= 0.0 || pipeline >= watermark) {
        return {0};
    }
    auto burst = static_cast<std::int64_t>(std::ceil(rate * delay_s_ * params_.factor));
    burst += std::max<std::int64_t>(0, -observed.buffer_level - outstanding_);
    outstanding_ += burst;
    return {burst};
}

}  // namespace quiks
