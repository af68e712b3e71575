#include "quiks/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "quiks/errors.hpp"

namespace quiks::netsim {

namespace {

constexpr double kClockEps = 1e-9;

std::pair<int, int> ordered(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace

Topology::Topology(std::vector<Link> links) : links_(std::move(links)) {
    if (links_.empty()) {
        throw std::invalid_argument("topology has no links");
    }
    std::set<std::pair<int, int>> seen;
    std::set<int> nodes;
    for (const auto& l : links_) {
        if (l.a == l.b) {
            throw std::invalid_argument("self-loop on node " + std::to_string(l.a));
        }
        if (l.a < 0 || l.b < 0) {
            throw std::invalid_argument("node ids must be non-negative");
        }
        if (l.metric <= 0) {
            throw std::invalid_argument("link " + std::to_string(l.a) + "-" + std::to_string(l.b) +
                                        " has non-positive metric");
        }
        if (!(l.mean_delay_s > 0.0)) {
            throw std::invalid_argument("link " + std::to_string(l.a) + "-" + std::to_string(l.b) +
                                        " has non-positive delay");
        }
        if (!(l.key_rate_bps >= 0.0)) {
            throw std::invalid_argument("negative key rate");
        }
        if (!seen.insert(ordered(l.a, l.b)).second) {
            throw std::invalid_argument("duplicate link " + std::to_string(l.a) + "-" +
                                        std::to_string(l.b));
        }
        nodes.insert(l.a);
        nodes.insert(l.b);
    }
    nodes_.assign(nodes.begin(), nodes.end());

    // connectivity by flood fill
    std::map<int, std::vector<int>> adj;
    for (const auto& l : links_) {
        adj[l.a].push_back(l.b);
        adj[l.b].push_back(l.a);
    }
    std::set<int> reached{nodes_.front()};
    std::vector<int> stack{nodes_.front()};
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : adj[u]) {
            if (reached.insert(v).second) {
                stack.push_back(v);
            }
        }
    }
    if (reached.size() != nodes_.size()) {
        throw std::invalid_argument("topology is not connected");
    }
}

Topology Topology::nsfnet(double mean_delay_s, double key_rate_bps) {
    // Metrics are the classic NSFnet link lengths in units of 100 km.
    static constexpr int kEdges[][3] = {
        {0, 1, 21},  {0, 2, 30},  {0, 7, 48},  {1, 2, 12},  {1, 3, 15},  {2, 5, 36},
        {3, 4, 12},  {3, 10, 39}, {4, 5, 24},  {4, 6, 12},  {5, 9, 21},  {5, 13, 36},
        {6, 7, 15},  {7, 8, 15},  {8, 9, 15},  {8, 11, 6},  {8, 12, 6},  {10, 11, 12},
        {10, 12, 15}, {11, 13, 6}, {12, 13, 3},
    };
    std::vector<Link> links;
    for (const auto& e : kEdges) {
        links.push_back(Link{e[0], e[1], e[2], mean_delay_s, key_rate_bps});
    }
    return Topology(std::move(links));
}

Topology Topology::parse(std::istream& in) {
    std::vector<Link> links;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream fields(line);
        Link l;
        double delay_ms = 0.0;
        if (!(fields >> l.a)) {
            continue;  // blank
        }
        if (!(fields >> l.b >> l.metric >> delay_ms >> l.key_rate_bps)) {
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": expected `node_a node_b metric mean_delay_ms "
                                        "key_rate_bps`");
        }
        std::string extra;
        if (fields >> extra) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": trailing field '" +
                                        extra + "'");
        }
        l.mean_delay_s = delay_ms / 1000.0;
        links.push_back(l);
    }
    return Topology(std::move(links));
}

Topology Topology::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw std::invalid_argument("cannot open topology file " + file.string());
    }
    return parse(in);
}

bool Topology::has_node(int node) const {
    return std::binary_search(nodes_.begin(), nodes_.end(), node);
}

std::optional<std::size_t> Topology::link_index(int a, int b) const {
    const auto key = ordered(a, b);
    for (std::size_t i = 0; i < links_.size(); ++i) {
        if (ordered(links_[i].a, links_[i].b) == key) {
            return i;
        }
    }
    return std::nullopt;
}

std::vector<std::size_t> Topology::path_links(const Path& path) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i < path.size(); ++i) {
        const auto idx = link_index(path[i - 1], path[i]);
        if (!idx) {
            throw std::invalid_argument("path uses missing link " + std::to_string(path[i - 1]) +
                                        "-" + std::to_string(path[i]));
        }
        out.push_back(*idx);
    }
    return out;
}

Topology Topology::with_uniform_delay(double mean_delay_s) const {
    auto links = links_;
    for (auto& l : links) {
        l.mean_delay_s = mean_delay_s;
    }
    return Topology(std::move(links));
}

Path route(const Topology& topology, int source, int destination) {
    if (!topology.has_node(source) || !topology.has_node(destination)) {
        throw Unreachable("route endpoint " +
                          std::to_string(topology.has_node(source) ? destination : source) +
                          " is not in the topology");
    }
    if (source == destination) {
        throw std::invalid_argument("route source equals destination");
    }
    std::map<int, std::vector<std::pair<int, int>>> adj;
    for (const auto& l : topology.links()) {
        adj[l.a].emplace_back(l.b, l.metric);
        adj[l.b].emplace_back(l.a, l.metric);
    }
    // Label-setting search over (distance, path) pairs; both orderings are consistent with
    // extension by one hop, so the first settled label per node is the answer.
    constexpr auto kInf = std::numeric_limits<std::int64_t>::max();
    std::map<int, std::pair<std::int64_t, Path>> best;
    for (int n : topology.nodes()) {
        best[n] = {kInf, {}};
    }
    best[source] = {0, {source}};
    std::set<int> settled;
    while (true) {
        int u = -1;
        for (const auto& [node, label] : best) {
            if (settled.count(node) != 0 || label.first == kInf) {
                continue;
            }
            if (u < 0 || label < best[u]) {
                u = node;
            }
        }
        if (u < 0) {
            break;
        }
        settled.insert(u);
        if (u == destination) {
            return best[u].second;
        }
        for (const auto& [v, metric] : adj[u]) {
            if (settled.count(v) != 0) {
                continue;
            }
            std::pair<std::int64_t, Path> cand{best[u].first + metric, best[u].second};
            cand.second.push_back(v);
            if (cand < best[v]) {
                best[v] = std::move(cand);
            }
        }
    }
    throw Unreachable("no path from " + std::to_string(source) + " to " +
                      std::to_string(destination));
}

double sample_hop_delay(double mean_s, traffic::Rng& rng) {
    std::normal_distribution<double> dist(mean_s, mean_s * kHopDelaySdFraction);
    return std::max(dist(rng), mean_s * kHopDelayFloorFraction);
}

LinkKeyPool LinkKeyPool::with_initial(std::int64_t blocks, double replenish_rate) {
    LinkKeyPool p;
    p.available = blocks;
    p.initial = blocks;
    p.replenish_rate = replenish_rate;
    return p;
}

bool LinkKeyPool::try_consume(std::int64_t blocks) {
    if (blocks > available) {
        return false;
    }
    available -= blocks;
    consumed += blocks;
    return true;
}

void LinkKeyPool::accrue(double seconds) {
    accrual_remainder += replenish_rate * seconds;
    const auto whole = static_cast<std::int64_t>(std::floor(accrual_remainder + 1e-9));
    if (whole > 0) {
        available += whole;
        accrued += whole;
        accrual_remainder -= static_cast<double>(whole);
    }
}

double RelayJob::transit_s() const {
    double t = 0.0;
    for (double d : hop_delays_s) {
        t += d;
    }
    return t;
}

Network::Network(Topology topology, std::vector<LinkKeyPool> pools, double slot_seconds,
                 traffic::Rng rng)
    : topology_(std::move(topology)),
      pools_(std::move(pools)),
      slot_seconds_(slot_seconds),
      rng_(std::move(rng)),
      waiting_(topology_.links().size()) {
    if (pools_.size() != topology_.links().size()) {
        throw std::invalid_argument("one key pool per link required");
    }
}

std::size_t Network::submit(std::size_t owner, const Path& path, std::int64_t blocks,
                            SlotIndex send) {
    RelayJob job;
    job.owner = owner;
    job.links = topology_.path_links(path);
    job.blocks = blocks;
    job.send_slot = send;
    for (auto l : job.links) {
        job.hop_delays_s.push_back(sample_hop_delay(topology_.links()[l].mean_delay_s, rng_));
    }
    return submit_job(std::move(job));
}

std::size_t Network::submit_job(RelayJob job) {
    if (job.hop_delays_s.size() != job.links.size() || job.links.empty()) {
        throw std::invalid_argument("relay job needs one delay per hop");
    }
    job.hop = 0;
    job.clock_s = static_cast<double>(job.send_slot.value) * slot_seconds_;
    job.state = JobState::InTransit;
    std::size_t id = 0;
    if (free_.empty()) {
        jobs_.push_back(std::move(job));
        id = jobs_.size() - 1;
    } else {
        id = free_.back();
        free_.pop_back();
        jobs_[id] = std::move(job);
    }
    ++live_;
    schedule(id);
    return id;
}

void Network::schedule(std::size_t id) { events_.push(Event{jobs_[id].clock_s, seq_++, id}); }

void Network::serve_link(std::size_t link, double earliest_s) {
    auto& queue = waiting_[link];
    while (!queue.empty()) {
        auto& job = jobs_[queue.front()];
        if (!pools_[link].try_consume(job.blocks)) {
            break;
        }
        if (earliest_s > job.clock_s) {
            job.waited_s += earliest_s - job.clock_s;
            job.clock_s = earliest_s;
        }
        job.clock_s += job.hop_delays_s[job.hop];
        ++job.hop;
        job.state = JobState::InTransit;
        schedule(queue.front());
        queue.pop_front();
    }
}

void Network::arrive(std::size_t id, std::vector<RelayJob>& delivered, SlotIndex slot) {
    auto& job = jobs_[id];
    if (job.hop == job.links.size()) {
        job.state = JobState::Delivered;
        job.delivered_slot = slot;
        delivered.push_back(std::move(job));
        job = RelayJob{};
        free_.push_back(id);
        --live_;
        return;
    }
    job.state = JobState::WaitingForKeys;
    const auto link = job.links[job.hop];
    waiting_[link].push_back(id);
    serve_link(link, job.clock_s);
}

std::vector<RelayJob> Network::advance_relays(SlotIndex slot) {
    std::vector<RelayJob> delivered;
    const double slot_start = static_cast<double>(slot.value - 1) * slot_seconds_;
    const double slot_end = static_cast<double>(slot.value) * slot_seconds_;
    // Jobs held up in earlier slots get keys that accrued at the start of this one.
    for (std::size_t l = 0; l < waiting_.size(); ++l) {
        serve_link(l, slot_start);
    }
    while (!events_.empty() && events_.top().clock_s <= slot_end + kClockEps) {
        const auto ev = events_.top();
        events_.pop();
        arrive(ev.job, delivered, slot);
    }
    return delivered;
}

void Network::accrue_slot() {
    for (auto& p : pools_) {
        p.accrue(slot_seconds_);
    }
}

std::vector<std::int64_t> min_key_requirement(const Topology& topology,
                                              const std::vector<traffic::AppSpec>& apps) {
    std::vector<std::int64_t> need(topology.links().size(), 0);
    for (const auto& app : apps) {
        const auto path = route(topology, app.source, app.destination);
        for (auto l : topology.path_links(path)) {
            need[l] += app.demand;
        }
    }
    return need;
}

}  // namespace quiks::netsim
