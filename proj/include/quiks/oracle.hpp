#pragma once

// Brute-force reference computations. Nothing here uses the analytics code it is meant to
// check; the buffer-level variance comes from running the raw state recursion.

#include <cstdint>
#include <span>
#include <vector>

namespace quiks::oracle {

enum class ProcessKind { IidPoisson, Ar1Gaussian, Ma2Gaussian };

/// A stationary per-slot request process.
struct ProcessSpec {
    ProcessKind kind = ProcessKind::IidPoisson;
    double mean = 5.0;
    double rho = 0.5;           // AR(1) coefficient
    double innovation_sd = 1.0; // AR(1) and MA(2) innovation
    double theta1 = 0.6;        // MA(2)
    double theta2 = 0.3;

    static ProcessSpec iid_poisson(double mean) { return {ProcessKind::IidPoisson, mean}; }
    static ProcessSpec ar1(double mean, double rho, double sd) {
        return {ProcessKind::Ar1Gaussian, mean, rho, sd};
    }
    static ProcessSpec ma2(double mean, double theta1, double theta2, double sd) {
        return {ProcessKind::Ma2Gaussian, mean, 0.0, sd, theta1, theta2};
    }
};

/// Exact autocovariance C(0..lags-1) of the process.
[[nodiscard]] std::vector<double> true_autocovariance(const ProcessSpec& spec, std::size_t lags);

struct McResult {
    double mean = 0.0;   // of Δ
    double sd = 0.0;     // of Δ
    std::int64_t trials = 0;
    std::int64_t window_gap = 0;
};

struct McOptions {
    std::int64_t trials = 100000;
    std::int64_t window_gap = 0;        // 0 means 50·K
    std::int64_t chunk_trials = 10000;
    unsigned threads = 0;               // 0 means hardware concurrency
    std::uint64_t seed = 1;
};

/// Samples Δ = m_i − m_x over windows i − x = gap, with r = n each slot and keys arriving
/// as the expected fraction ω_j of the requests sent j slots earlier. Consecutive windows are
/// separated by another gap so that trials are effectively independent. `omega[j-1]` is the
/// probability of delay j.
[[nodiscard]] McResult mc_sigma_delta(const ProcessSpec& spec, std::span<const double> omega,
                                      const McOptions& options = {});

/// Λ(j,k) as the literal double sum of C(p−q), p ≤ j, q ≤ k, with C(−x) = C(x).
[[nodiscard]] double direct_lambda(std::span<const double> cov, int j, int k);

/// σ_Δ² from the literal four-fold sum 2 Σ_j Σ_k ω_j ω_k Σ_p Σ_q C(p−q).
[[nodiscard]] double direct_sigma_delta_squared(std::span<const double> cov,
                                                std::span<const double> omega);

/// Item-level buffer: every key and request is tracked individually. Returns, per slot,
/// (key_blocks, backlog) after `c[i]` keys arrive and `n[i]` requests are served FIFO.
struct ItemLevel {
    std::int64_t key_blocks = 0;
    std::int64_t backlog = 0;
};
[[nodiscard]] std::vector<ItemLevel> item_buffer_run(std::span<const std::int64_t> n,
                                                     std::span<const std::int64_t> c,
                                                     std::int64_t initial_keys = 0);

}  // namespace quiks::oracle
