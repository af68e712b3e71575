#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "quiks/controllers.hpp"
#include "quiks/netsim.hpp"
#include "quiks/traffic.hpp"

namespace quiks {

struct QuiksScheme {
    QuiksParams params;
    bool operator==(const QuiksScheme&) const = default;
};
struct NoBufferScheme {
    bool operator==(const NoBufferScheme&) const = default;
};
struct KaasScheme {
    double rate_rps = 120.0;
    bool operator==(const KaasScheme&) const = default;
};
struct StVqkpScheme {
    double multiplier = 2.0;
    bool operator==(const StVqkpScheme&) const = default;
};
struct DtVqkpScheme {
    DtVqkpParams params;
    bool operator==(const DtVqkpScheme&) const = default;
};

using Scheme = std::variant<QuiksScheme, NoBufferScheme, KaasScheme, StVqkpScheme, DtVqkpScheme>;

/// Short label used in tables, e.g. `quiks`, `kaas-120`, `dt_vqkp`.
[[nodiscard]] std::string scheme_label(const Scheme& scheme);

[[nodiscard]] std::unique_ptr<Controller> make_controller(const Scheme& scheme,
                                                          double slot_seconds, SlotIndex start);

struct TopologySpec {
    std::string builtin = "nsfnet";       // used when `file` and `links` are empty
    std::string file;
    std::vector<netsim::Link> links;
    std::optional<double> link_delay_s;   // overrides every link's mean delay
    std::optional<double> key_rate_bps;   // overrides every link's key rate

    bool operator==(const TopologySpec&) const = default;
};

/// Applications placed uniformly at random (distinct endpoints), starting in [0, start_max_s].
struct RandomApps {
    int count = 20;
    double start_max_s = 150.0;
    double rate_rps = 10.0;
    std::int64_t demand_blocks = 1562;
    traffic::RequestProcess process = traffic::PoissonProcess{};

    bool operator==(const RandomApps&) const = default;
};

enum class KeyBudgetMode { Abundant, Limited };

struct KeyBudget {
    KeyBudgetMode mode = KeyBudgetMode::Abundant;
    double headroom = 1.1;
    /// Share of each link's budget present at time zero; the rest accrues at a constant rate
    /// over `accrual_seconds` (default: the horizon).
    double initial_fraction = 1.0;
    std::optional<double> accrual_seconds;

    bool operator==(const KeyBudget&) const = default;
};

struct AcceptanceBounds {
    std::optional<double> min_instant_ratio;
    std::optional<double> min_instant_ratio_post_warmup;
    std::optional<double> min_completion_ratio;
    std::optional<double> max_mean_buffer_bytes;

    [[nodiscard]] bool empty() const noexcept {
        return !min_instant_ratio && !min_instant_ratio_post_warmup && !min_completion_ratio &&
               !max_mean_buffer_bytes;
    }
    bool operator==(const AcceptanceBounds&) const = default;
};

struct PairScheme {
    int source = 0;
    int destination = 1;
    Scheme scheme;

    bool operator==(const PairScheme&) const = default;
};

/// Declarative description of one experiment.
struct ScenarioConfig {
    std::string name = "scenario";
    TopologySpec topology;
    std::vector<traffic::AppSpec> apps;
    std::optional<RandomApps> random_apps;
    Scheme scheme = QuiksScheme{};
    std::vector<PairScheme> pair_schemes;
    double slot_seconds = 0.05;
    int block_bits = 256;
    std::int64_t horizon_slots = 20000;
    bool stop_when_complete = true;
    std::uint64_t seed = 1;
    KeyBudget key_budget;
    bool include_warmup = false;
    AcceptanceBounds acceptance;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Throws ConfigError naming the offending field.
void validate(const ScenarioConfig& config);

[[nodiscard]] ScenarioConfig parse_config(const nlohmann::json& doc);
/// Reads a JSON scenario; a relative topology file is resolved against the config's directory.
[[nodiscard]] ScenarioConfig load_config(const std::filesystem::path& file);
[[nodiscard]] nlohmann::json to_json(const ScenarioConfig& config);

[[nodiscard]] netsim::Topology build_topology(const TopologySpec& spec);

/// Explicit apps followed by the seeded random placement, if any.
[[nodiscard]] std::vector<traffic::AppSpec> expand_apps(const ScenarioConfig& config,
                                                        const netsim::Topology& topology);

}  // namespace quiks
