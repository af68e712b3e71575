#include "quiks/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "quiks/errors.hpp"

namespace quiks {

namespace {

struct Pending {
    std::size_t app;
    SlotIndex arrival;
    std::int64_t count;
    bool warmup;
};

struct Unit {
    int source = 0;
    int destination = 1;
    netsim::Path path;
    std::unique_ptr<Controller> controller;
    std::vector<std::size_t> apps;
    SlotIndex start{0};
    BufferState buffer;
    std::deque<Pending> queue;
    std::int64_t relayed = 0;
    std::int64_t delivered = 0;
    std::int64_t transient_slots = 0;
    std::vector<Delivery> inbox;
    std::int64_t arrivals = 0;
};

const Scheme& scheme_for(const ScenarioConfig& c, int source, int destination) {
    for (const auto& p : c.pair_schemes) {
        if (p.source == source && p.destination == destination) {
            return p.scheme;
        }
    }
    return c.scheme;
}

void add_delivery(std::vector<Delivery>& inbox, SlotIndex send, std::int64_t count) {
    for (auto& d : inbox) {
        if (d.send_slot == send) {
            d.count += count;
            return;
        }
    }
    inbox.push_back(Delivery{send, count});
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::vector<std::string> check_bounds(const AcceptanceBounds& b, const metrics::RunMetrics& m) {
    std::vector<std::string> out;
    if (b.min_instant_ratio && m.instant_ratio < *b.min_instant_ratio) {
        out.push_back("instant_ratio " + fmt(m.instant_ratio) + " < " + fmt(*b.min_instant_ratio));
    }
    if (b.min_instant_ratio_post_warmup &&
        m.instant_ratio_post_warmup < *b.min_instant_ratio_post_warmup) {
        out.push_back("instant_ratio_post_warmup " + fmt(m.instant_ratio_post_warmup) + " < " +
                      fmt(*b.min_instant_ratio_post_warmup));
    }
    if (b.min_completion_ratio && m.completion_ratio < *b.min_completion_ratio) {
        out.push_back("completion_ratio " + fmt(m.completion_ratio) + " < " +
                      fmt(*b.min_completion_ratio));
    }
    if (b.max_mean_buffer_bytes && m.mean_buffer_bytes > *b.max_mean_buffer_bytes) {
        out.push_back("mean_buffer_bytes " + fmt(m.mean_buffer_bytes) + " > " +
                      fmt(*b.max_mean_buffer_bytes));
    }
    return out;
}

}  // namespace

std::vector<netsim::LinkKeyPool> provision_pools(const ScenarioConfig& config,
                                                 const netsim::Topology& topology,
                                                 const std::vector<traffic::AppSpec>& apps) {
    std::vector<netsim::LinkKeyPool> pools;
    const auto n_links = topology.links().size();
    if (config.key_budget.mode == KeyBudgetMode::Abundant) {
        pools.assign(n_links, netsim::LinkKeyPool::with_initial(netsim::kAbundantPool, 0.0));
        return pools;
    }
    const auto need = netsim::min_key_requirement(topology, apps);
    const double accrual_s = config.key_budget.accrual_seconds.value_or(
        static_cast<double>(config.horizon_slots) * config.slot_seconds);
    for (std::size_t l = 0; l < n_links; ++l) {
        const auto budget = static_cast<std::int64_t>(
            std::ceil(config.key_budget.headroom * static_cast<double>(need[l]) - 1e-9));
        const auto initial = static_cast<std::int64_t>(
            std::floor(config.key_budget.initial_fraction * static_cast<double>(budget)));
        pools.push_back(netsim::LinkKeyPool::with_initial(
            initial, static_cast<double>(budget - initial) / accrual_s));
    }
    return pools;
}

ScenarioResult simulate(const ScenarioConfig& config) {
    validate(config);
    const double T = config.slot_seconds;
    auto topology = build_topology(config.topology);
    const auto apps = expand_apps(config, topology);
    auto pools = provision_pools(config, topology, apps);

    std::vector<Unit> units;
    std::map<std::pair<int, int>, std::size_t> unit_of;
    std::vector<traffic::RequestSource> sources;
    std::vector<std::size_t> app_unit;
    for (std::size_t a = 0; a < apps.size(); ++a) {
        const auto key = std::make_pair(apps[a].source, apps[a].destination);
        sources.emplace_back(apps[a], T, traffic::make_rng(config.seed, 2, a));
        auto it = unit_of.find(key);
        if (it == unit_of.end()) {
            Unit u;
            u.source = key.first;
            u.destination = key.second;
            u.path = netsim::route(topology, key.first, key.second);
            u.start = sources.back().start_slot();
            it = unit_of.emplace(key, units.size()).first;
            units.push_back(std::move(u));
        }
        auto& u = units[it->second];
        u.apps.push_back(a);
        u.start = std::min(u.start, sources.back().start_slot());
        app_unit.push_back(it->second);
    }
    for (auto& u : units) {
        u.controller = make_controller(scheme_for(config, u.source, u.destination), T, u.start);
    }

    netsim::Network network(topology, std::move(pools), T, traffic::make_rng(config.seed, 1));
    metrics::Collector collector(T, config.block_bits / 8, config.include_warmup);
    std::vector<std::int64_t> served(apps.size(), 0);
    std::vector<bool> completed(apps.size(), false);
    std::size_t n_completed = 0;

    std::int64_t slot = 0;
    for (; slot < config.horizon_slots; ++slot) {
        const SlotIndex now{slot};
        for (auto& job : network.advance_relays(now)) {
            auto& u = units[job.owner];
            add_delivery(u.inbox, job.send_slot, job.blocks);
        }
        for (std::size_t a = 0; a < apps.size(); ++a) {
            const auto n = sources[a].next(now);
            if (n == 0) {
                continue;
            }
            auto& u = units[app_unit[a]];
            collector.on_generated(n);
            u.queue.push_back(Pending{a, now, n, u.controller->in_transient()});
            u.arrivals += n;
        }
        for (std::size_t k = 0; k < units.size(); ++k) {
            auto& u = units[k];
            if (now < u.start) {
                continue;
            }
            std::int64_t c = 0;
            for (const auto& d : u.inbox) {
                c += d.count;
            }
            u.delivered += c;
            const auto before = u.buffer.backlog + u.arrivals;
            u.buffer = apply_slot(u.buffer, SlotEvents{u.arrivals, c, 0});
            auto to_serve = before - u.buffer.backlog;
            while (to_serve > 0) {
                auto& p = u.queue.front();
                const auto take = std::min(to_serve, p.count);
                for (std::int64_t i = 0; i < take; ++i) {
                    collector.on_served(p.app, k, p.arrival, now, p.warmup);
                }
                served[p.app] += take;
                if (served[p.app] == apps[p.app].demand && !completed[p.app]) {
                    completed[p.app] = true;
                    ++n_completed;
                }
                p.count -= take;
                to_serve -= take;
                if (p.count == 0) {
                    u.queue.pop_front();
                }
            }

            const Observation obs{now, u.arrivals, u.inbox, u.buffer.signed_level()};
            const auto decision = u.controller->step(obs);
            if (decision.relay_requests > 0) {
                network.submit(k, u.path, decision.relay_requests, now);
                u.relayed += decision.relay_requests;
            }
            const bool transient = u.controller->in_transient();
            u.transient_slots += transient ? 1 : 0;
            collector.on_buffer(metrics::BufferSample{now, k, u.buffer.key_blocks,
                                                      u.buffer.backlog, transient});
            u.inbox.clear();
            u.arrivals = 0;
        }
        network.accrue_slot();
        if (config.stop_when_complete && n_completed == apps.size()) {
            ++slot;
            break;
        }
    }

    for (std::size_t k = 0; k < units.size(); ++k) {
        for (const auto& p : units[k].queue) {
            collector.on_unserved(p.app, k, p.arrival, p.count, p.warmup);
        }
    }

    std::vector<std::int64_t> consumption;
    for (const auto& p : network.pools()) {
        consumption.push_back(p.consumed);
    }

    ScenarioResult result;
    result.config = config;
    result.apps = apps;
    result.slots_run = slot;
    result.app_completed = completed;
    result.metrics = std::move(collector).finalize(static_cast<std::int64_t>(apps.size()),
                                                   static_cast<std::int64_t>(n_completed),
                                                   std::move(consumption));
    for (const auto& u : units) {
        PairReport r;
        r.source = u.source;
        r.destination = u.destination;
        r.scheme = scheme_label(scheme_for(config, u.source, u.destination));
        r.path = u.path;
        r.apps = u.apps;
        r.transient_slots = u.transient_slots;
        r.relayed_blocks = u.relayed;
        r.delivered_blocks = u.delivered;
        if (const auto* q = dynamic_cast<const QuiksController*>(u.controller.get())) {
            for (const auto& s : q->sizings()) {
                r.sigma_hat.push_back(s.sigma_delta);
                r.targets.push_back(s.target_level);
            }
            r.reprobes = q->state().reprobes;
            r.probes_aborted = q->state().probes_aborted;
        }
        result.pairs.push_back(std::move(r));
    }
    result.violations = check_bounds(config.acceptance, result.metrics);
    return result;
}

nlohmann::json summary_json(const ScenarioResult& r) {
    using nlohmann::json;
    const auto& m = r.metrics;
    json s;
    s["name"] = r.config.name;
    s["scheme"] = scheme_label(r.config.scheme);
    s["seed"] = r.config.seed;
    s["slots_run"] = r.slots_run;
    s["requests"] = m.totals.requests;
    s["instant_requests"] = m.totals.instant;
    s["instant_ratio"] = m.instant_ratio;
    s["instant_ratio_post_warmup"] = m.instant_ratio_post_warmup;
    s["completion_ratio"] = m.completion_ratio;
    s["apps"] = m.totals.apps;
    s["apps_completed"] = m.totals.apps_completed;
    s["mean_buffer_blocks"] = m.mean_buffer_blocks;
    s["max_buffer_blocks"] = m.max_buffer_blocks;
    s["mean_buffer_bytes"] = m.mean_buffer_bytes;
    s["max_buffer_bytes"] = m.max_buffer_bytes;
    s["latency_median_s"] = m.latency_median_s;
    s["latency_p95_s"] = m.latency_p95_s;
    s["latency_max_s"] = m.latency_max_s;
    s["link_key_consumption"] = m.total_key_consumption;
    s["pairs"] = json::array();
    for (const auto& p : r.pairs) {
        s["pairs"].push_back({{"source", p.source},
                              {"destination", p.destination},
                              {"scheme", p.scheme},
                              {"path", p.path},
                              {"apps", p.apps},
                              {"sigma_hat", p.sigma_hat},
                              {"target_blocks", p.targets},
                              {"reprobes", p.reprobes},
                              {"probes_aborted", p.probes_aborted},
                              {"transient_slots", p.transient_slots},
                              {"relayed_blocks", p.relayed_blocks},
                              {"delivered_blocks", p.delivered_blocks}});
    }
    s["acceptance"] = {{"bounded", !r.config.acceptance.empty()},
                       {"passed", r.accepted()},
                       {"violations", r.violations}};
    return s;
}

ScenarioResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& run_dir) {
    auto result = simulate(config);
    std::filesystem::create_directories(run_dir);
    {
        std::ofstream out(run_dir / "config.json");
        out << to_json(config).dump(2) << '\n';
    }
    {
        std::ofstream out(run_dir / "summary.json");
        out << summary_json(result).dump(2) << '\n';
    }
    {
        std::ofstream out(run_dir / "requests.csv");
        metrics::write_requests_csv(out, result.metrics.requests);
    }
    {
        std::ofstream out(run_dir / "buffer.csv");
        metrics::write_buffer_csv(out, result.metrics.buffer_trace);
    }
    return result;
}

bool SuiteResult::any_violation() const {
    return std::any_of(rows.begin(), rows.end(), [](const SuiteRow& r) {
        return r.has_bounds && (!r.ok || !r.violations.empty());
    });
}

std::size_t SuiteResult::failed() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const SuiteRow& r) { return !r.ok; }));
}

SuiteResult run_suite(const std::filesystem::path& dir, const std::filesystem::path& out_root,
                      unsigned parallelism) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(dir)) {
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            if (e.is_regular_file() && e.path().extension() == ".json") {
                files.push_back(e.path());
            }
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "warning: no scenario files in " << dir.string() << '\n';
    }

    SuiteResult suite;
    suite.rows.resize(files.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto i = next++; i < files.size(); i = next++) {
            auto& row = suite.rows[i];
            row.config_file = files[i].filename().string();
            try {
                const auto config = load_config(files[i]);
                row.name = config.name;
                row.scheme = scheme_label(config.scheme);
                row.has_bounds = !config.acceptance.empty();
                const auto r = run_scenario(config, out_root / files[i].stem());
                const auto& m = r.metrics;
                row.ok = true;
                row.instant_ratio = m.instant_ratio;
                row.instant_ratio_post_warmup = m.instant_ratio_post_warmup;
                row.completion_ratio = m.completion_ratio;
                row.mean_buffer_bytes = m.mean_buffer_bytes;
                row.max_buffer_bytes = m.max_buffer_bytes;
                row.latency_median_s = m.latency_median_s;
                row.latency_p95_s = m.latency_p95_s;
                row.slots = r.slots_run;
                row.violations = r.violations;
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
        }
    };
    const unsigned width = std::max(1u, std::min<unsigned>(parallelism, files.size()));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < width; ++w) {
            pool.emplace_back(worker);
        }
    }
    std::filesystem::create_directories(out_root);
    std::ofstream out(out_root / "suite.csv");
    write_suite_csv(out, suite);
    return suite;
}

void write_suite_csv(std::ostream& out, const SuiteResult& suite) {
    out << "config,name,scheme,status,instant_ratio,instant_ratio_post_warmup,completion_ratio,"
           "mean_buffer_bytes,max_buffer_bytes,latency_median_s,latency_p95_s,slots,"
           "acceptance,error\n";
    for (const auto& r : suite.rows) {
        std::string acceptance = "-";
        if (r.has_bounds) {
            acceptance = r.ok && r.violations.empty() ? "pass" : "fail";
        }
        std::string error = r.error;
        std::replace(error.begin(), error.end(), ',', ';');
        std::replace(error.begin(), error.end(), '\n', ' ');
        out << r.config_file << ',' << r.name << ',' << r.scheme << ','
            << (r.ok ? "ok" : "failed") << ',';
        if (r.ok) {
            out << fmt(r.instant_ratio) << ',' << fmt(r.instant_ratio_post_warmup) << ','
                << fmt(r.completion_ratio) << ',' << fmt(r.mean_buffer_bytes) << ','
                << fmt(r.max_buffer_bytes) << ',' << fmt(r.latency_median_s) << ','
                << fmt(r.latency_p95_s) << ',' << r.slots;
        } else {
            out << ",,,,,,,";
        }
        out << ',' << acceptance << ',' << error << '\n';
    }
}

}  // namespace quiks
