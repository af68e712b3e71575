#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "quiks/model.hpp"

namespace quiks::metrics {

struct RequestRecord {
    std::size_t app = 0;
    std::size_t pair = 0;
    SlotIndex arrival;
    SlotIndex served;
    double latency_s = 0.0;
    bool instant = false;
    bool warmup = false;   // arrived before its pair's controller first settled
    bool unserved = false;
};

/// Latency of one request; instant iff it was served in the slot it arrived.
[[nodiscard]] RequestRecord record_request(SlotIndex arrival, SlotIndex served,
                                           double slot_seconds);

struct BufferSample {
    SlotIndex slot;
    std::size_t pair = 0;
    std::int64_t key_blocks = 0;
    std::int64_t backlog = 0;
    bool transient = false;
};

/// Additive run totals. `merge` is associative and commutative, so batches can be combined
/// in any order.
struct Aggregate {
    std::int64_t requests = 0;
    std::int64_t instant = 0;
    std::int64_t apps = 0;
    std::int64_t apps_completed = 0;
    std::int64_t buffer_samples = 0;
    std::int64_t buffer_sum_blocks = 0;
    std::int64_t buffer_max_blocks = 0;

    void merge(const Aggregate& other);
    bool operator==(const Aggregate&) const = default;
};

struct RunMetrics {
    std::vector<double> latency_samples;     // seconds, one per served request
    std::vector<BufferSample> buffer_trace;
    std::vector<RequestRecord> requests;
    double instant_ratio = 0.0;
    double instant_ratio_post_warmup = 0.0;
    double completion_ratio = 0.0;
    double mean_buffer_blocks = 0.0;
    std::int64_t max_buffer_blocks = 0;
    double mean_buffer_bytes = 0.0;
    double max_buffer_bytes = 0.0;
    double latency_median_s = 0.0;
    double latency_p95_s = 0.0;
    double latency_max_s = 0.0;
    std::vector<std::int64_t> total_key_consumption;  // per link, blocks
    Aggregate totals;
};

/// Streaming collector for one run.
class Collector {
public:
    Collector(double slot_seconds, int block_bytes, bool include_warmup = false);

    void on_generated(std::int64_t count);
    void on_served(std::size_t app, std::size_t pair, SlotIndex arrival, SlotIndex served,
                   bool warmup);
    void on_unserved(std::size_t app, std::size_t pair, SlotIndex arrival, std::int64_t count,
                     bool warmup);
    void on_buffer(const BufferSample& sample);

    [[nodiscard]] std::int64_t instant_count() const noexcept { return instant_; }
    [[nodiscard]] std::int64_t generated() const noexcept { return generated_; }

    /// Computes ratios and buffer statistics. Buffer statistics skip transient samples unless
    /// the collector was built with `include_warmup`; with no settled samples at all they fall
    /// back to the whole trace.
    [[nodiscard]] RunMetrics finalize(std::int64_t apps_total, std::int64_t apps_completed,
                                      std::vector<std::int64_t> link_consumption) &&;

private:
    double slot_seconds_;
    int block_bytes_;
    bool include_warmup_;
    std::int64_t generated_ = 0;
    std::int64_t instant_ = 0;
    std::int64_t post_warmup_ = 0;
    std::int64_t post_warmup_instant_ = 0;
    std::vector<RequestRecord> requests_;
    std::vector<BufferSample> buffer_;
};

/// Fraction of requests with zero latency, recomputed from the per-request records.
[[nodiscard]] double instant_ratio_from_records(const std::vector<RequestRecord>& requests);

/// `app,pair,arrival_slot,served_slot,latency_s,instant,warmup`
void write_requests_csv(std::ostream& out, const std::vector<RequestRecord>& requests);
/// `slot,pair,key_blocks,backlog,transient`
void write_buffer_csv(std::ostream& out, const std::vector<BufferSample>& trace);

}  // namespace quiks::metrics
