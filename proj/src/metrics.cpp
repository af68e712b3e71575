#include "quiks/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace quiks::metrics {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) {
        return 0.0;
    }
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    return sorted[std::min(sorted.size() - 1, idx == 0 ? 0 : idx - 1)];
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

RequestRecord record_request(SlotIndex arrival, SlotIndex served, double slot_seconds) {
    RequestRecord r;
    r.arrival = arrival;
    r.served = served;
    r.latency_s = static_cast<double>(served.value - arrival.value) * slot_seconds;
    r.instant = served == arrival;
    return r;
}

void Aggregate::merge(const Aggregate& other) {
    requests += other.requests;
    instant += other.instant;
    apps += other.apps;
    apps_completed += other.apps_completed;
    buffer_samples += other.buffer_samples;
    buffer_sum_blocks += other.buffer_sum_blocks;
    buffer_max_blocks = std::max(buffer_max_blocks, other.buffer_max_blocks);
}

Collector::Collector(double slot_seconds, int block_bytes, bool include_warmup)
    : slot_seconds_(slot_seconds), block_bytes_(block_bytes), include_warmup_(include_warmup) {}

void Collector::on_generated(std::int64_t count) { generated_ += count; }

void Collector::on_served(std::size_t app, std::size_t pair, SlotIndex arrival, SlotIndex served,
                          bool warmup) {
    auto r = record_request(arrival, served, slot_seconds_);
    r.app = app;
    r.pair = pair;
    r.warmup = warmup;
    if (r.instant) {
        ++instant_;
    }
    if (!warmup) {
        ++post_warmup_;
        post_warmup_instant_ += r.instant ? 1 : 0;
    }
    requests_.push_back(r);
}

void Collector::on_unserved(std::size_t app, std::size_t pair, SlotIndex arrival,
                            std::int64_t count, bool warmup) {
    RequestRecord r;
    r.app = app;
    r.pair = pair;
    r.arrival = arrival;
    r.served = SlotIndex{-1};
    r.unserved = true;
    r.warmup = warmup;
    for (std::int64_t i = 0; i < count; ++i) {
        requests_.push_back(r);
        if (!warmup) {
            ++post_warmup_;
        }
    }
}

void Collector::on_buffer(const BufferSample& sample) { buffer_.push_back(sample); }

RunMetrics Collector::finalize(std::int64_t apps_total, std::int64_t apps_completed,
                               std::vector<std::int64_t> link_consumption) && {
    RunMetrics m;
    m.totals.requests = generated_;
    m.totals.instant = instant_;
    m.totals.apps = apps_total;
    m.totals.apps_completed = apps_completed;

    m.instant_ratio = generated_ > 0 ? static_cast<double>(instant_) / static_cast<double>(generated_)
                                     : 1.0;
    m.instant_ratio_post_warmup =
        post_warmup_ > 0
            ? static_cast<double>(post_warmup_instant_) / static_cast<double>(post_warmup_)
            : m.instant_ratio;
    m.completion_ratio =
        apps_total > 0 ? static_cast<double>(apps_completed) / static_cast<double>(apps_total)
                       : 1.0;

    const bool any_settled = std::any_of(buffer_.begin(), buffer_.end(),
                                         [](const BufferSample& b) { return !b.transient; });
    for (const auto& b : buffer_) {
        if (!include_warmup_ && any_settled && b.transient) {
            continue;
        }
        ++m.totals.buffer_samples;
        m.totals.buffer_sum_blocks += b.key_blocks;
        m.totals.buffer_max_blocks = std::max(m.totals.buffer_max_blocks, b.key_blocks);
    }
    if (m.totals.buffer_samples > 0) {
        m.mean_buffer_blocks = static_cast<double>(m.totals.buffer_sum_blocks) /
                               static_cast<double>(m.totals.buffer_samples);
    }
    m.max_buffer_blocks = m.totals.buffer_max_blocks;
    m.mean_buffer_bytes = m.mean_buffer_blocks * block_bytes_;
    m.max_buffer_bytes = static_cast<double>(m.max_buffer_blocks * block_bytes_);

    m.latency_samples.reserve(requests_.size());
    for (const auto& r : requests_) {
        if (!r.unserved) {
            m.latency_samples.push_back(r.latency_s);
        }
    }
    auto sorted = m.latency_samples;
    std::sort(sorted.begin(), sorted.end());
    m.latency_median_s = quantile_sorted(sorted, 0.5);
    m.latency_p95_s = quantile_sorted(sorted, 0.95);
    m.latency_max_s = sorted.empty() ? 0.0 : sorted.back();

    m.total_key_consumption = std::move(link_consumption);
    m.requests = std::move(requests_);
    m.buffer_trace = std::move(buffer_);
    return m;
}

double instant_ratio_from_records(const std::vector<RequestRecord>& requests) {
    if (requests.empty()) {
        return 1.0;
    }
    const auto instant = std::count_if(requests.begin(), requests.end(),
                                       [](const RequestRecord& r) { return r.instant; });
    return static_cast<double>(instant) / static_cast<double>(requests.size());
}

void write_requests_csv(std::ostream& out, const std::vector<RequestRecord>& requests) {
    out << "app,pair,arrival_slot,served_slot,latency_s,instant,warmup\n";
    for (const auto& r : requests) {
        out << r.app << ',' << r.pair << ',' << r.arrival.value << ',';
        if (r.unserved) {
            out << ",,";
        } else {
            out << r.served.value << ',' << fixed(r.latency_s, 4);
            out << ',';
        }
        out << (r.instant ? 1 : 0) << ',' << (r.warmup ? 1 : 0) << '\n';
    }
}

void write_buffer_csv(std::ostream& out, const std::vector<BufferSample>& trace) {
    out << "slot,pair,key_blocks,backlog,transient\n";
    for (const auto& b : trace) {
        out << b.slot.value << ',' << b.pair << ',' << b.key_blocks << ',' << b.backlog << ','
            << (b.transient ? 1 : 0) << '\n';
    }
}

}  // namespace quiks::metrics
