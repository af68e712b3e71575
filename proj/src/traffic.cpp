#include "quiks/traffic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "quiks/errors.hpp"

namespace quiks::traffic {

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(tag)};
    return Rng(seq);
}

void validate(const AppSpec& app) {
    if (app.demand <= 0) {
        throw std::invalid_argument("demand must be positive");
    }
    if (!(app.rate > 0.0)) {
        throw std::invalid_argument("rate must be positive");
    }
    if (app.source == app.destination) {
        throw std::invalid_argument("source and destination must differ");
    }
    if (app.start_time < 0.0) {
        throw std::invalid_argument("start_time must be non-negative");
    }
    if (const auto* p = std::get_if<PpbpProcess>(&app.process)) {
        if (!(p->shape > 1.0)) {
            throw InvalidShape("PPBP shape must exceed 1");
        }
        if (!(p->scale > 0.0) || !(p->event_rate >= 0.0)) {
            throw std::invalid_argument("PPBP scale must be positive and event rate non-negative");
        }
    }
}

double ppbp_scale_for_rate(double rate, double event_rate, double shape) {
    if (!(shape > 1.0)) {
        throw InvalidShape("PPBP shape must exceed 1");
    }
    // mean batch = shape * scale / (shape - 1)
    return rate * (shape - 1.0) / (shape * event_rate);
}

std::int64_t gen_poisson(double rate, double slot_seconds, Rng& rng) {
    const double mean = rate * slot_seconds;
    if (!(mean > 0.0)) {
        return 0;
    }
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(rng);
}

std::int64_t gen_ppbp(double event_rate, double shape, double scale, double slot_seconds,
                      Rng& rng) {
    if (!(shape > 1.0)) {
        throw InvalidShape("PPBP shape must exceed 1, got " + std::to_string(shape));
    }
    if (!(scale > 0.0)) {
        throw InvalidShape("PPBP scale must be positive");
    }
    const std::int64_t events = gen_poisson(event_rate, slot_seconds, rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::int64_t total = 0;
    for (std::int64_t e = 0; e < events; ++e) {
        const double u = 1.0 - unit(rng);  // (0, 1]
        const double batch = scale / std::pow(u, 1.0 / shape);
        total += std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(batch + 0.5)));
    }
    return total;
}

RequestSource::RequestSource(AppSpec spec, double slot_seconds, Rng rng)
    : spec_(std::move(spec)),
      slot_seconds_(slot_seconds),
      rng_(std::move(rng)),
      start_slot_{static_cast<std::int64_t>(std::llround(spec_.start_time / slot_seconds))} {}

std::int64_t RequestSource::next(SlotIndex slot) {
    if (slot < start_slot_ || exhausted()) {
        return 0;
    }
    std::int64_t n = 0;
    if (const auto* p = std::get_if<PpbpProcess>(&spec_.process)) {
        n = gen_ppbp(p->event_rate, p->shape, p->scale, slot_seconds_, rng_);
    } else {
        n = gen_poisson(spec_.rate, slot_seconds_, rng_);
    }
    n = std::min(n, spec_.demand - generated_);
    generated_ += n;
    return n;
}

RequestTrace make_trace(const AppSpec& spec, double slot_seconds, Rng rng,
                        std::int64_t max_slots) {
    RequestSource source(spec, slot_seconds, std::move(rng));
    RequestTrace trace;
    for (SlotIndex s = source.start_slot(); s.value < source.start_slot().value + max_slots;
         s = s.next()) {
        trace.counts.push_back(source.next(s));
        if (source.exhausted()) {
            trace.completion_slot = s;
            break;
        }
    }
    return trace;
}

}  // namespace quiks::traffic
