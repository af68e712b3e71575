#include "quiks/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "quiks/errors.hpp"

namespace quiks {

using nlohmann::json;

std::string scheme_label(const Scheme& scheme) {
    struct Visitor {
        std::string operator()(const QuiksScheme&) const { return "quiks"; }
        std::string operator()(const NoBufferScheme&) const { return "no_buffer"; }
        std::string operator()(const KaasScheme& s) const {
            std::ostringstream out;
            out << "kaas-" << s.rate_rps;
            return out.str();
        }
        std::string operator()(const StVqkpScheme&) const { return "st_vqkp"; }
        std::string operator()(const DtVqkpScheme&) const { return "dt_vqkp"; }
    };
    return std::visit(Visitor{}, scheme);
}

std::unique_ptr<Controller> make_controller(const Scheme& scheme, double slot_seconds,
                                            SlotIndex start) {
    struct Visitor {
        double T;
        SlotIndex start;
        std::unique_ptr<Controller> operator()(const QuiksScheme& s) const {
            return std::make_unique<QuiksController>(s.params, start);
        }
        std::unique_ptr<Controller> operator()(const NoBufferScheme&) const {
            return std::make_unique<NoBufferController>();
        }
        std::unique_ptr<Controller> operator()(const KaasScheme& s) const {
            return std::make_unique<KaasController>(s.rate_rps, T);
        }
        std::unique_ptr<Controller> operator()(const StVqkpScheme& s) const {
            return std::make_unique<StVqkpController>(s.multiplier);
        }
        std::unique_ptr<Controller> operator()(const DtVqkpScheme& s) const {
            return std::make_unique<DtVqkpController>(s.params, T);
        }
    };
    return std::visit(Visitor{slot_seconds, start}, scheme);
}

namespace {

// Typed access to one JSON object that reports errors by field path and rejects unknown keys.
class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) {
            throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
        }
    }

    [[nodiscard]] std::string field(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    [[nodiscard]] bool has(std::string_view key) const { return obj_.contains(key); }

    const json& raw(std::string_view key) {
        seen_.insert(std::string(key));
        return obj_.at(key);
    }

    template <typename T>
    T get(std::string_view key, T fallback) {
        if (!has(key)) {
            return fallback;
        }
        return convert<T>(raw(key), field(key));
    }

    template <typename T>
    std::optional<T> optional(std::string_view key) {
        if (!has(key) || obj_.at(key).is_null()) {
            seen_.insert(std::string(key));
            return std::nullopt;
        }
        return convert<T>(raw(key), field(key));
    }

    template <typename T>
    T required(std::string_view key) {
        if (!has(key)) {
            throw ConfigError(field(key), "missing required field");
        }
        return convert<T>(raw(key), field(key));
    }

    void finish() const {
        for (const auto& [key, _] : obj_.items()) {
            if (!seen_.contains(key)) {
                throw ConfigError(field(key), "unknown field");
            }
        }
    }

    template <typename T>
    static T convert(const json& v, const std::string& where) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) {
                throw ConfigError(where, "expected a boolean");
            }
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) {
                throw ConfigError(where, "expected an integer");
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
                    throw ConfigError(where, "expected a non-negative integer");
                }
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) {
                throw ConfigError(where, "expected a number");
            }
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) {
                throw ConfigError(where, "expected a string");
            }
        }
        return v.get<T>();
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

const json& array_at(Reader& r, std::string_view key) {
    const json& v = r.raw(key);
    if (!v.is_array()) {
        throw ConfigError(r.field(key), "expected an array");
    }
    return v;
}

std::string index_path(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

traffic::RequestProcess parse_process(const json& v, const std::string& where, double rate) {
    if (v.is_string()) {
        const auto name = v.get<std::string>();
        if (name == "poisson") {
            return traffic::PoissonProcess{};
        }
        if (name == "ppbp") {
            traffic::PpbpProcess p;
            p.scale = traffic::ppbp_scale_for_rate(rate, p.event_rate, p.shape);
            return p;
        }
        throw ConfigError(where, "unknown process '" + name + "'");
    }
    Reader r(v, where);
    const auto type = r.required<std::string>("type");
    if (type == "poisson") {
        r.finish();
        return traffic::PoissonProcess{};
    }
    if (type != "ppbp") {
        throw ConfigError(r.field("type"), "unknown process '" + type + "'");
    }
    traffic::PpbpProcess p;
    p.event_rate = r.get("event_rate", p.event_rate);
    p.shape = r.get("shape", p.shape);
    if (!(p.shape > 1.0)) {
        throw ConfigError(r.field("shape"), "must exceed 1");
    }
    if (!(p.event_rate > 0.0)) {
        throw ConfigError(r.field("event_rate"), "must be positive");
    }
    const auto scale = r.optional<double>("scale");
    p.scale = scale ? *scale : traffic::ppbp_scale_for_rate(rate, p.event_rate, p.shape);
    r.finish();
    return p;
}

json process_json(const traffic::RequestProcess& process) {
    if (const auto* p = std::get_if<traffic::PpbpProcess>(&process)) {
        return {{"type", "ppbp"}, {"event_rate", p->event_rate}, {"shape", p->shape},
                {"scale", p->scale}};
    }
    return "poisson";
}

Scheme parse_scheme(const json& v, const std::string& where) {
    Reader r(v, where);
    const auto type = r.required<std::string>("type");
    Scheme out;
    if (type == "quiks") {
        QuiksScheme s;
        s.params.alpha = r.get("alpha", s.params.alpha);
        s.params.beta = r.get("beta", s.params.beta);
        s.params.k_cap = r.get("k_cap", s.params.k_cap);
        s.params.target_sigmas = r.get("target_sigmas", s.params.target_sigmas);
        out = s;
    } else if (type == "no_buffer") {
        out = NoBufferScheme{};
    } else if (type == "kaas") {
        KaasScheme s;
        s.rate_rps = r.get("rate_rps", s.rate_rps);
        out = s;
    } else if (type == "st_vqkp") {
        StVqkpScheme s;
        s.multiplier = r.get("multiplier", s.multiplier);
        out = s;
    } else if (type == "dt_vqkp") {
        DtVqkpScheme s;
        s.params.factor = r.get("factor", s.params.factor);
        s.params.rate_window_slots = r.get("rate_window_slots", s.params.rate_window_slots);
        s.params.low_watermark_slots = r.get("low_watermark_slots", s.params.low_watermark_slots);
        s.params.delay_smoothing = r.get("delay_smoothing", s.params.delay_smoothing);
        out = s;
    } else {
        throw ConfigError(r.field("type"), "unknown scheme '" + type + "'");
    }
    r.finish();
    return out;
}

json scheme_json(const Scheme& scheme) {
    struct Visitor {
        json operator()(const QuiksScheme& s) const {
            return {{"type", "quiks"},
                    {"alpha", s.params.alpha},
                    {"beta", s.params.beta},
                    {"k_cap", s.params.k_cap},
                    {"target_sigmas", s.params.target_sigmas}};
        }
        json operator()(const NoBufferScheme&) const { return {{"type", "no_buffer"}}; }
        json operator()(const KaasScheme& s) const {
            return {{"type", "kaas"}, {"rate_rps", s.rate_rps}};
        }
        json operator()(const StVqkpScheme& s) const {
            return {{"type", "st_vqkp"}, {"multiplier", s.multiplier}};
        }
        json operator()(const DtVqkpScheme& s) const {
            return {{"type", "dt_vqkp"},
                    {"factor", s.params.factor},
                    {"rate_window_slots", s.params.rate_window_slots},
                    {"low_watermark_slots", s.params.low_watermark_slots},
                    {"delay_smoothing", s.params.delay_smoothing}};
        }
    };
    return std::visit(Visitor{}, scheme);
}

netsim::Link parse_link(const json& v, const std::string& where) {
    Reader r(v, where);
    netsim::Link l;
    l.a = r.required<int>("a");
    l.b = r.required<int>("b");
    l.metric = r.get("metric", l.metric);
    l.mean_delay_s = r.get("delay_s", l.mean_delay_s);
    l.key_rate_bps = r.get("key_rate_bps", l.key_rate_bps);
    r.finish();
    return l;
}

TopologySpec parse_topology(const json& v, const std::string& where) {
    Reader r(v, where);
    TopologySpec t;
    t.builtin = r.get("builtin", t.builtin);
    t.file = r.get("file", t.file);
    if (r.has("links")) {
        const auto& links = array_at(r, "links");
        for (std::size_t i = 0; i < links.size(); ++i) {
            t.links.push_back(parse_link(links[i], index_path(r.field("links"), i)));
        }
    }
    t.link_delay_s = r.optional<double>("link_delay_s");
    t.key_rate_bps = r.optional<double>("key_rate_bps");
    r.finish();
    return t;
}

traffic::AppSpec parse_app(const json& v, const std::string& where) {
    Reader r(v, where);
    traffic::AppSpec a;
    a.source = r.required<int>("source");
    a.destination = r.required<int>("destination");
    a.start_time = r.get("start_s", a.start_time);
    a.rate = r.get("rate_rps", a.rate);
    a.demand = r.required<std::int64_t>("demand_blocks");
    if (r.has("process")) {
        a.process = parse_process(r.raw("process"), r.field("process"), a.rate);
    }
    r.finish();
    return a;
}

json app_json(const traffic::AppSpec& a) {
    return {{"source", a.source},         {"destination", a.destination},
            {"start_s", a.start_time},    {"rate_rps", a.rate},
            {"demand_blocks", a.demand},  {"process", process_json(a.process)}};
}

RandomApps parse_random_apps(const json& v, const std::string& where) {
    Reader r(v, where);
    RandomApps a;
    a.count = r.get("count", a.count);
    a.start_max_s = r.get("start_max_s", a.start_max_s);
    a.rate_rps = r.get("rate_rps", a.rate_rps);
    a.demand_blocks = r.get("demand_blocks", a.demand_blocks);
    if (r.has("process")) {
        a.process = parse_process(r.raw("process"), r.field("process"), a.rate_rps);
    }
    r.finish();
    return a;
}

KeyBudget parse_key_budget(const json& v, const std::string& where) {
    Reader r(v, where);
    KeyBudget b;
    const auto mode = r.get<std::string>("mode", "abundant");
    if (mode == "abundant") {
        b.mode = KeyBudgetMode::Abundant;
    } else if (mode == "limited") {
        b.mode = KeyBudgetMode::Limited;
    } else {
        throw ConfigError(r.field("mode"), "expected 'abundant' or 'limited'");
    }
    b.headroom = r.get("headroom", b.headroom);
    b.initial_fraction = r.get("initial_fraction", b.initial_fraction);
    b.accrual_seconds = r.optional<double>("accrual_s");
    r.finish();
    return b;
}

AcceptanceBounds parse_acceptance(const json& v, const std::string& where) {
    Reader r(v, where);
    AcceptanceBounds a;
    a.min_instant_ratio = r.optional<double>("min_instant_ratio");
    a.min_instant_ratio_post_warmup = r.optional<double>("min_instant_ratio_post_warmup");
    a.min_completion_ratio = r.optional<double>("min_completion_ratio");
    a.max_mean_buffer_bytes = r.optional<double>("max_mean_buffer_bytes");
    r.finish();
    return a;
}

void put_optional(json& obj, const char* key, const std::optional<double>& v) {
    if (v) {
        obj[key] = *v;
    }
}

void check(bool ok, const std::string& field, const std::string& message) {
    if (!ok) {
        throw ConfigError(field, message);
    }
}

void validate_scheme(const Scheme& scheme, const std::string& where) {
    if (const auto* q = std::get_if<QuiksScheme>(&scheme)) {
        check(q->params.alpha >= 1, where + ".alpha", "must be at least 1");
        check(q->params.beta >= 1, where + ".beta", "must be at least 1");
        check(q->params.k_cap >= 1, where + ".k_cap", "must be at least 1");
        check(q->params.target_sigmas > 0.0, where + ".target_sigmas", "must be positive");
    } else if (const auto* k = std::get_if<KaasScheme>(&scheme)) {
        check(k->rate_rps > 0.0, where + ".rate_rps", "must be positive");
    } else if (const auto* s = std::get_if<StVqkpScheme>(&scheme)) {
        check(s->multiplier > 0.0, where + ".multiplier", "must be positive");
    } else if (const auto* d = std::get_if<DtVqkpScheme>(&scheme)) {
        check(d->params.factor > 0.0, where + ".factor", "must be positive");
        check(d->params.rate_window_slots >= 1, where + ".rate_window_slots",
              "must be at least 1");
        check(d->params.low_watermark_slots >= 0.0, where + ".low_watermark_slots",
              "must be non-negative");
        check(d->params.delay_smoothing > 0.0 && d->params.delay_smoothing <= 1.0,
              where + ".delay_smoothing", "must lie in (0, 1]");
    }
}

void validate_process(const traffic::RequestProcess& process, const std::string& where) {
    if (const auto* p = std::get_if<traffic::PpbpProcess>(&process)) {
        check(p->event_rate > 0.0, where + ".event_rate", "must be positive");
        check(p->shape > 1.0, where + ".shape", "must exceed 1");
        check(p->scale > 0.0, where + ".scale", "must be positive");
    }
}

}  // namespace

void validate(const ScenarioConfig& c) {
    check(c.horizon_slots > 0, "horizon_slots", "must be positive");
    check(c.slot_seconds > 0.0, "slot_seconds", "must be positive");
    check(c.block_bits > 0 && c.block_bits % 8 == 0, "block_bits",
          "must be a positive multiple of 8");
    check(!c.apps.empty() || (c.random_apps && c.random_apps->count > 0), "apps",
          "scenario has no applications");
    for (std::size_t i = 0; i < c.apps.size(); ++i) {
        const auto& a = c.apps[i];
        const auto where = index_path("apps", i);
        check(a.source != a.destination, where + ".destination", "must differ from source");
        check(a.rate > 0.0, where + ".rate_rps", "must be positive");
        check(a.demand > 0, where + ".demand_blocks", "must be positive");
        check(a.start_time >= 0.0, where + ".start_s", "must be non-negative");
        validate_process(a.process, where + ".process");
    }
    if (c.random_apps) {
        const auto& r = *c.random_apps;
        check(r.count >= 0, "random_apps.count", "must be non-negative");
        check(r.start_max_s >= 0.0, "random_apps.start_max_s", "must be non-negative");
        check(r.rate_rps > 0.0, "random_apps.rate_rps", "must be positive");
        check(r.demand_blocks > 0, "random_apps.demand_blocks", "must be positive");
        validate_process(r.process, "random_apps.process");
    }
    validate_scheme(c.scheme, "scheme");
    for (std::size_t i = 0; i < c.pair_schemes.size(); ++i) {
        validate_scheme(c.pair_schemes[i].scheme, index_path("pair_schemes", i) + ".scheme");
    }
    check(c.key_budget.headroom > 0.0, "key_budget.headroom", "must be positive");
    check(c.key_budget.initial_fraction >= 0.0 && c.key_budget.initial_fraction <= 1.0,
          "key_budget.initial_fraction", "must lie in [0, 1]");
    check(!c.key_budget.accrual_seconds || *c.key_budget.accrual_seconds > 0.0,
          "key_budget.accrual_s", "must be positive");
    check(!c.topology.link_delay_s || *c.topology.link_delay_s > 0.0, "topology.link_delay_s",
          "must be positive");
    check(!c.topology.key_rate_bps || *c.topology.key_rate_bps >= 0.0, "topology.key_rate_bps",
          "must be non-negative");
}

ScenarioConfig parse_config(const json& doc) {
    Reader r(doc, "");
    ScenarioConfig c;
    c.name = r.get("name", c.name);
    if (r.has("topology")) {
        c.topology = parse_topology(r.raw("topology"), "topology");
    }
    if (r.has("apps")) {
        const auto& apps = array_at(r, "apps");
        for (std::size_t i = 0; i < apps.size(); ++i) {
            c.apps.push_back(parse_app(apps[i], index_path("apps", i)));
        }
    }
    if (r.has("random_apps") && !doc.at("random_apps").is_null()) {
        c.random_apps = parse_random_apps(r.raw("random_apps"), "random_apps");
    } else if (r.has("random_apps")) {
        r.raw("random_apps");
    }
    if (r.has("scheme")) {
        c.scheme = parse_scheme(r.raw("scheme"), "scheme");
    }
    if (r.has("pair_schemes")) {
        const auto& pairs = array_at(r, "pair_schemes");
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            Reader pr(pairs[i], index_path("pair_schemes", i));
            PairScheme ps;
            ps.source = pr.required<int>("source");
            ps.destination = pr.required<int>("destination");
            ps.scheme = parse_scheme(pr.raw("scheme"), pr.field("scheme"));
            pr.finish();
            c.pair_schemes.push_back(ps);
        }
    }
    c.slot_seconds = r.get("slot_seconds", c.slot_seconds);
    c.block_bits = r.get("block_bits", c.block_bits);
    c.horizon_slots = r.get("horizon_slots", c.horizon_slots);
    c.stop_when_complete = r.get("stop_when_complete", c.stop_when_complete);
    c.seed = r.get("seed", c.seed);
    if (r.has("key_budget")) {
        c.key_budget = parse_key_budget(r.raw("key_budget"), "key_budget");
    }
    c.include_warmup = r.get("include_warmup", c.include_warmup);
    if (r.has("acceptance")) {
        c.acceptance = parse_acceptance(r.raw("acceptance"), "acceptance");
    }
    r.finish();
    validate(c);
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ConfigError("<file>", "cannot open " + file.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("<file>", file.string() + ": " + e.what());
    }
    auto c = parse_config(doc);
    if (!c.topology.file.empty()) {
        const std::filesystem::path topo(c.topology.file);
        if (topo.is_relative()) {
            c.topology.file = (file.parent_path() / topo).lexically_normal().string();
        }
    }
    return c;
}

json to_json(const ScenarioConfig& c) {
    json doc;
    doc["name"] = c.name;

    json topo;
    if (!c.topology.links.empty()) {
        topo["links"] = json::array();
        for (const auto& l : c.topology.links) {
            topo["links"].push_back({{"a", l.a},
                                     {"b", l.b},
                                     {"metric", l.metric},
                                     {"delay_s", l.mean_delay_s},
                                     {"key_rate_bps", l.key_rate_bps}});
        }
    }
    if (!c.topology.file.empty()) {
        topo["file"] = c.topology.file;
    }
    topo["builtin"] = c.topology.builtin;
    put_optional(topo, "link_delay_s", c.topology.link_delay_s);
    put_optional(topo, "key_rate_bps", c.topology.key_rate_bps);
    doc["topology"] = topo;

    doc["apps"] = json::array();
    for (const auto& a : c.apps) {
        doc["apps"].push_back(app_json(a));
    }
    if (c.random_apps) {
        const auto& r = *c.random_apps;
        doc["random_apps"] = {{"count", r.count},
                              {"start_max_s", r.start_max_s},
                              {"rate_rps", r.rate_rps},
                              {"demand_blocks", r.demand_blocks},
                              {"process", process_json(r.process)}};
    }
    doc["scheme"] = scheme_json(c.scheme);
    if (!c.pair_schemes.empty()) {
        doc["pair_schemes"] = json::array();
        for (const auto& p : c.pair_schemes) {
            doc["pair_schemes"].push_back({{"source", p.source},
                                           {"destination", p.destination},
                                           {"scheme", scheme_json(p.scheme)}});
        }
    }
    doc["slot_seconds"] = c.slot_seconds;
    doc["block_bits"] = c.block_bits;
    doc["horizon_slots"] = c.horizon_slots;
    doc["stop_when_complete"] = c.stop_when_complete;
    doc["seed"] = c.seed;

    json budget;
    budget["mode"] = c.key_budget.mode == KeyBudgetMode::Limited ? "limited" : "abundant";
    budget["headroom"] = c.key_budget.headroom;
    budget["initial_fraction"] = c.key_budget.initial_fraction;
    put_optional(budget, "accrual_s", c.key_budget.accrual_seconds);
    doc["key_budget"] = budget;
    doc["include_warmup"] = c.include_warmup;

    if (!c.acceptance.empty()) {
        json acc = json::object();
        put_optional(acc, "min_instant_ratio", c.acceptance.min_instant_ratio);
        put_optional(acc, "min_instant_ratio_post_warmup",
                     c.acceptance.min_instant_ratio_post_warmup);
        put_optional(acc, "min_completion_ratio", c.acceptance.min_completion_ratio);
        put_optional(acc, "max_mean_buffer_bytes", c.acceptance.max_mean_buffer_bytes);
        doc["acceptance"] = acc;
    }
    return doc;
}

netsim::Topology build_topology(const TopologySpec& spec) {
    std::vector<netsim::Link> links;
    if (!spec.links.empty()) {
        links = spec.links;
    } else if (!spec.file.empty()) {
        links = netsim::Topology::load(spec.file).links();
    } else if (spec.builtin == "nsfnet") {
        links = netsim::Topology::nsfnet().links();
    } else {
        throw ConfigError("topology.builtin", "unknown topology '" + spec.builtin + "'");
    }
    for (auto& l : links) {
        if (spec.link_delay_s) {
            l.mean_delay_s = *spec.link_delay_s;
        }
        if (spec.key_rate_bps) {
            l.key_rate_bps = *spec.key_rate_bps;
        }
    }
    try {
        return netsim::Topology(std::move(links));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("topology", e.what());
    }
}

std::vector<traffic::AppSpec> expand_apps(const ScenarioConfig& config,
                                          const netsim::Topology& topology) {
    auto apps = config.apps;
    for (std::size_t i = 0; i < apps.size(); ++i) {
        const auto where = index_path("apps", i);
        if (!topology.has_node(apps[i].source)) {
            throw ConfigError(where + ".source", "node not in topology");
        }
        if (!topology.has_node(apps[i].destination)) {
            throw ConfigError(where + ".destination", "node not in topology");
        }
    }
    if (!config.random_apps) {
        return apps;
    }
    const auto& spec = *config.random_apps;
    const auto& nodes = topology.nodes();
    auto rng = traffic::make_rng(config.seed, 0, 0x617070);
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
    std::uniform_real_distribution<double> start(0.0, spec.start_max_s);
    for (int i = 0; i < spec.count; ++i) {
        traffic::AppSpec a;
        a.source = nodes[pick(rng)];
        do {
            a.destination = nodes[pick(rng)];
        } while (a.destination == a.source);
        a.start_time = start(rng);
        a.rate = spec.rate_rps;
        a.demand = spec.demand_blocks;
        a.process = spec.process;
        apps.push_back(a);
    }
    return apps;
}

}  // namespace quiks
