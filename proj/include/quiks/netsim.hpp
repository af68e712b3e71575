#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "quiks/model.hpp"
#include "quiks/traffic.hpp"

namespace quiks::netsim {

/// Standard deviation of a hop delay as a fraction of its mean.
inline constexpr double kHopDelaySdFraction = 0.1;
/// Hop delays are truncated below at this fraction of the mean.
inline constexpr double kHopDelayFloorFraction = 0.01;

struct Link {
    int a = 0;
    int b = 0;
    int metric = 1;
    double mean_delay_s = 0.2;
    double key_rate_bps = 79300.0;

    bool operator==(const Link&) const = default;
};

using Path = std::vector<int>;

/// Undirected, connected QKD network.
class Topology {
public:
    /// Throws std::invalid_argument on self-loops, duplicate links, non-positive metrics or
    /// delays, or a disconnected graph.
    explicit Topology(std::vector<Link> links);

    /// The 14-node, 21-link NSFnet.
    static Topology nsfnet(double mean_delay_s = 0.2, double key_rate_bps = 79300.0);

    /// Edge list, one link per line: `node_a node_b metric mean_delay_ms key_rate_bps`.
    /// Blank lines and text after `#` are ignored.
    static Topology parse(std::istream& in);
    static Topology load(const std::filesystem::path& file);

    [[nodiscard]] const std::vector<Link>& links() const noexcept { return links_; }
    [[nodiscard]] const std::vector<int>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] bool has_node(int node) const;
    [[nodiscard]] std::optional<std::size_t> link_index(int a, int b) const;
    /// Link indices traversed by `path`, in order.
    [[nodiscard]] std::vector<std::size_t> path_links(const Path& path) const;

    /// Same graph with every link's mean delay replaced.
    [[nodiscard]] Topology with_uniform_delay(double mean_delay_s) const;

    bool operator==(const Topology& other) const { return links_ == other.links_; }

private:
    std::vector<Link> links_;
    std::vector<int> nodes_;
};

/// Minimum-metric path; ties go to the lexicographically smallest node sequence.
/// Throws Unreachable when an endpoint is unknown or no path exists, std::invalid_argument when
/// source equals destination.
[[nodiscard]] Path route(const Topology& topology, int source, int destination);

/// Normal(mean, (mean/10)^2) truncated below at mean/100.
[[nodiscard]] double sample_hop_delay(double mean_s, traffic::Rng& rng);

/// Quantum key pool of one link. Whole blocks accrue at slot boundaries; the fractional
/// part carries over so non-integer rates are exact over time.
struct LinkKeyPool {
    std::int64_t available = 0;
    double replenish_rate = 0.0;  // blocks per second
    double accrual_remainder = 0.0;

    std::int64_t initial = 0;
    std::int64_t consumed = 0;
    std::int64_t accrued = 0;

    static LinkKeyPool with_initial(std::int64_t blocks, double replenish_rate);

    bool try_consume(std::int64_t blocks);
    void accrue(double seconds);
};

/// Pool size that behaves as unlimited for any realistic horizon.
inline constexpr std::int64_t kAbundantPool = std::int64_t{1} << 50;

enum class JobState { WaitingForKeys, InTransit, Delivered };

struct RelayJob {
    std::size_t owner = 0;                // buffering-unit index, opaque to the network
    std::vector<std::size_t> links;       // link indices along the path
    std::int64_t blocks = 0;
    SlotIndex send_slot;
    std::vector<double> hop_delays_s;
    std::size_t hop = 0;                  // next hop to enter, or links.size() when arrived
    double clock_s = 0.0;
    JobState state = JobState::WaitingForKeys;
    SlotIndex delivered_slot;
    double waited_s = 0.0;

    [[nodiscard]] double transit_s() const;
    [[nodiscard]] std::int64_t realized_delay() const noexcept {
        return delivered_slot.value - send_slot.value;
    }
};

/// Hop-by-hop relay pipeline over a topology. Entering a hop debits `blocks` keys from that
/// link's pool; when the pool is short the job waits at the hop, FIFO per link.
class Network {
public:
    Network(Topology topology, std::vector<LinkKeyPool> pools, double slot_seconds,
            traffic::Rng rng);

    /// Queues a job whose per-hop delays are sampled now. Returns its id.
    std::size_t submit(std::size_t owner, const Path& path, std::int64_t blocks, SlotIndex send);
    /// Queues a job with caller-provided hop delays (used by tests).
    std::size_t submit_job(RelayJob job);

    /// Moves every job through the events that fall in `slot`; returns the jobs that reached
    /// their destination, in delivery order.
    std::vector<RelayJob> advance_relays(SlotIndex slot);

    /// Key generation over one slot.
    void accrue_slot();

    [[nodiscard]] const Topology& topology() const noexcept { return topology_; }
    [[nodiscard]] const std::vector<LinkKeyPool>& pools() const noexcept { return pools_; }
    [[nodiscard]] std::vector<LinkKeyPool>& pools() noexcept { return pools_; }
    [[nodiscard]] std::size_t jobs_in_network() const noexcept { return live_; }
    [[nodiscard]] double slot_seconds() const noexcept { return slot_seconds_; }

private:
    struct Event {
        double clock_s;
        std::size_t seq;
        std::size_t job;
        bool operator>(const Event& o) const {
            return clock_s != o.clock_s ? clock_s > o.clock_s : seq > o.seq;
        }
    };

    void arrive(std::size_t id, std::vector<RelayJob>& delivered, SlotIndex slot);
    void serve_link(std::size_t link, double earliest_s);
    void schedule(std::size_t id);

    Topology topology_;
    std::vector<LinkKeyPool> pools_;
    double slot_seconds_;
    traffic::Rng rng_;
    std::vector<RelayJob> jobs_;
    std::vector<std::size_t> free_;
    std::vector<std::deque<std::size_t>> waiting_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::size_t seq_ = 0;
    std::size_t live_ = 0;
};

/// Per-link total demand (blocks) of the applications whose shortest path crosses the link.
[[nodiscard]] std::vector<std::int64_t> min_key_requirement(
    const Topology& topology, const std::vector<traffic::AppSpec>& apps);

}  // namespace quiks::netsim
