#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "quiks/analytics.hpp"
#include "quiks/errors.hpp"
#include "quiks/oracle.hpp"
#include "quiks/simulator.hpp"

namespace {

std::filesystem::path default_out_root() {
    if (const char* env = std::getenv("QUIKS_OUTPUT_ROOT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "runs";
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        out.push_back(std::stod(item));
    }
    return out;
}

void print_summary(const quiks::ScenarioResult& r, const std::filesystem::path& dir) {
    const auto& m = r.metrics;
    std::printf("%s [%s] seed=%llu slots=%lld\n", r.config.name.c_str(),
                quiks::scheme_label(r.config.scheme).c_str(),
                static_cast<unsigned long long>(r.config.seed),
                static_cast<long long>(r.slots_run));
    std::printf("  requests            %lld\n", static_cast<long long>(m.totals.requests));
    std::printf("  instant ratio       %.4f (after warmup %.4f)\n", m.instant_ratio,
                m.instant_ratio_post_warmup);
    std::printf("  completion ratio    %.4f\n", m.completion_ratio);
    std::printf("  buffer mean/max     %.1f / %.0f bytes\n", m.mean_buffer_bytes,
                m.max_buffer_bytes);
    std::printf("  latency median/p95  %.3f / %.3f s\n", m.latency_median_s, m.latency_p95_s);
    for (const auto& p : r.pairs) {
        if (!p.sigma_hat.empty()) {
            std::printf("  pair %d->%d sigma_hat %.3f target %lld reprobes %lld\n", p.source,
                        p.destination, p.sigma_hat.back(),
                        static_cast<long long>(p.targets.back()),
                        static_cast<long long>(p.reprobes));
        }
    }
    for (const auto& v : r.violations) {
        std::printf("  VIOLATION %s\n", v.c_str());
    }
    std::printf("  output              %s\n", dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive key buffers for QKD networks: simulator and tools"};
    app.require_subcommand(1);

    std::string out_dir;
    std::optional<std::uint64_t> seed;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

    auto* run = app.add_subcommand("run", "Run one scenario");
    std::string config_file;
    run->add_option("config", config_file, "Scenario JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--out", out_dir, "Output root (default $QUIKS_OUTPUT_ROOT or ./runs)");

    auto* suite = app.add_subcommand("suite", "Run every scenario in a directory");
    std::string suite_dir;
    suite->add_option("dir", suite_dir, "Directory of scenario JSON files")->required();
    suite->add_option("--out", out_dir, "Output root (default $QUIKS_OUTPUT_ROOT or ./runs)");
    suite->add_option("--jobs", jobs, "Parallel scenarios")->check(CLI::PositiveNumber);

    auto* oracle = app.add_subcommand("oracle", "Brute-force reference checks");
    oracle->require_subcommand(1);
    auto* sd = oracle->add_subcommand("sigma-delta", "Monte Carlo σ_Δ against the closed form");
    std::string process = "poisson";
    double mean = 5.0;
    double rho = 0.5;
    double innovation = 1.0;
    double theta1 = 0.6;
    double theta2 = 0.3;
    std::string delays = "0.3333333333333333,0.3333333333333333,0.3333333333333334";
    quiks::oracle::McOptions mc;
    sd->add_option("--process", process, "poisson | ar1 | ma2")
        ->check(CLI::IsMember({"poisson", "ar1", "ma2"}));
    sd->add_option("--mean", mean, "Mean requests per slot");
    sd->add_option("--rho", rho, "AR(1) coefficient");
    sd->add_option("--sd", innovation, "Innovation standard deviation");
    sd->add_option("--theta1", theta1, "MA(2) first coefficient");
    sd->add_option("--theta2", theta2, "MA(2) second coefficient");
    sd->add_option("--delays", delays, "Comma-separated ω_1..ω_K");
    sd->add_option("--trials", mc.trials, "Number of windows")->check(CLI::PositiveNumber);
    sd->add_option("--gap", mc.window_gap, "Window length in slots (default 50K)");
    sd->add_option("--seed", mc.seed, "Random seed");

    auto* topo = app.add_subcommand("topology", "Topology utilities");
    topo->require_subcommand(1);
    auto* check = topo->add_subcommand("check", "Validate an edge-list file and print routes");
    std::string topo_file;
    check->add_option("file", topo_file, "Edge list")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    const std::filesystem::path out_root = out_dir.empty() ? default_out_root() : std::filesystem::path(out_dir);
    try {
        if (*run) {
            auto config = quiks::load_config(config_file);
            if (seed) {
                config.seed = *seed;
            }
            const auto dir = out_root / config.name;
            const auto result = quiks::run_scenario(config, dir);
            print_summary(result, dir);
            return result.accepted() ? 0 : 1;
        }
        if (*suite) {
            const auto result = quiks::run_suite(suite_dir, out_root, jobs);
            quiks::write_suite_csv(std::cout, result);
            std::cerr << result.rows.size() << " scenarios, " << result.failed() << " failed\n";
            return result.any_violation() ? 1 : 0;
        }
        if (*sd) {
            quiks::oracle::ProcessSpec spec = quiks::oracle::ProcessSpec::iid_poisson(mean);
            if (process == "ar1") {
                spec = quiks::oracle::ProcessSpec::ar1(mean, rho, innovation);
            } else if (process == "ma2") {
                spec = quiks::oracle::ProcessSpec::ma2(mean, theta1, theta2, innovation);
            }
            const auto omega_raw = parse_list(delays);
            const quiks::DelayDistribution omega(omega_raw);
            const auto cov = quiks::oracle::true_autocovariance(
                spec, static_cast<std::size_t>(omega.max_delay()));
            const auto mcr = quiks::oracle::mc_sigma_delta(spec, omega.weights(), mc);
            quiks::analytics::AutocovarianceSeries series;
            series.cov = cov;
            series.mean = spec.mean;
            series.sample_count = 1;
            const double analytic = quiks::analytics::sigma_delta(series, omega);
            const double direct =
                std::sqrt(quiks::oracle::direct_sigma_delta_squared(cov, omega.weights()));
            std::printf("monte carlo  sd %.5f  mean %+.5f  (trials %lld, gap %lld)\n", mcr.sd,
                        mcr.mean, static_cast<long long>(mcr.trials),
                        static_cast<long long>(mcr.window_gap));
            std::printf("closed form  sd %.5f  (direct sum %.5f)\n", analytic, direct);
            std::printf("relative error %.3f%%\n", 100.0 * (mcr.sd - analytic) / analytic);
            return 0;
        }
        if (*check) {
            const auto t = quiks::netsim::Topology::load(topo_file);
            std::printf("%zu nodes, %zu links, connected\n", t.nodes().size(), t.links().size());
            for (int s : t.nodes()) {
                for (int d : t.nodes()) {
                    if (s < d) {
                        const auto path = quiks::netsim::route(t, s, d);
                        std::printf("%d->%d:", s, d);
                        for (int n : path) {
                            std::printf(" %d", n);
                        }
                        std::printf("\n");
                    }
                }
            }
            return 0;
        }
    } catch (const quiks::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
