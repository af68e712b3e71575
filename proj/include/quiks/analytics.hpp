#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "quiks/model.hpp"

namespace quiks::analytics {

/// Counts elementary loop iterations so tests can bound the work of each routine.
struct OpCounter {
    std::uint64_t ops = 0;
};

/// Estimated autocovariance C(0..L-1) of a per-slot request series.
struct AutocovarianceSeries {
    std::vector<double> cov;
    double mean = 0.0;
    std::size_t sample_count = 0;

    /// C(x) for any integer lag, using even symmetry for negative lags.
    [[nodiscard]] double at(std::int64_t lag) const;
    [[nodiscard]] std::size_t max_lag() const noexcept { return cov.size(); }
};

struct SizingResult {
    double sigma_delta = 0.0;
    std::int64_t target_level = 0;
    double reprobe_threshold = 0.0;
    double epsilon = 0.0;
};

struct NormalFit {
    double mu = 0.0;             // least-squares fit of the normal curve to the histogram
    double sigma = 0.0;
    double sample_mean = 0.0;    // moments, the starting point of the fit
    double sample_sigma = 0.0;
    double r_squared = 0.0;
    double chi2_reduced = 0.0;
    std::size_t bins_used = 0;
};

/// Biased (1/N) autocovariance estimator for lags 0..max_lag-1.
///
/// Requires at least 2*max_lag samples; throws InsufficientSamples otherwise.
[[nodiscard]] AutocovarianceSeries estimate_autocovariance(std::span<const double> samples,
                                                           std::size_t max_lag,
                                                           OpCounter* counter = nullptr);

/// Λ(j,k) = Σ_{p=1..j} Σ_{q=1..k} C(p-q) for 1 <= j,k <= K, built by the O(K²)
/// inclusion-exclusion recurrence. Stored row-major; use `at(j, k)` with 1-based indices.
class LambdaTable {
public:
    LambdaTable(const AutocovarianceSeries& cov, int K, OpCounter* counter = nullptr);

    [[nodiscard]] int size() const noexcept { return k_; }
    [[nodiscard]] double at(int j, int k) const {
        return values_[static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(k_) +
                       static_cast<std::size_t>(k - 1)];
    }

private:
    int k_;
    std::vector<double> values_;
};

[[nodiscard]] LambdaTable lambda_table(const AutocovarianceSeries& cov, int K,
                                       OpCounter* counter = nullptr);

/// 2·Σ_j Σ_k ω_j ω_k Λ(j,k), before clamping.
[[nodiscard]] double sigma_delta_squared(const AutocovarianceSeries& cov,
                                         const DelayDistribution& delays,
                                         OpCounter* counter = nullptr);

/// Standard deviation of the buffer-level change between well-separated slots under the
/// reactive strategy. Negative variance from estimation noise clamps to zero.
[[nodiscard]] double sigma_delta(const AutocovarianceSeries& cov, const DelayDistribution& delays,
                                 OpCounter* counter = nullptr);

/// Standard normal CDF.
[[nodiscard]] double normal_cdf(double z) noexcept;

/// Inverse standard normal CDF for p in (0,1).
///
/// Abramowitz & Stegun 26.2.23 (|error| < 4.5e-4) followed by one Newton step against
/// the erfc-based CDF, which brings the error well below 1e-6 for p >= 1e-12.
[[nodiscard]] double normal_quantile(double p);

/// Buffer L with Φ(-L/σ) = ε, i.e. σ times the (1-ε) normal quantile.
/// Throws InvalidEpsilon unless 0 < ε < 0.5.
[[nodiscard]] double required_buffer(double sigma, double epsilon);

/// Normal curve fitted by least squares to an equal-width histogram of the sample, starting
/// from the sample moments. R² and reduced χ² score the fitted curve.
///
/// When every sample is integral the bin width is snapped to a whole number of units so
/// that no bin straddles a different count of integer values than its neighbours.
/// Throws InsufficientSamples below 100 samples and DegenerateDistribution at zero variance.
[[nodiscard]] NormalFit fit_normal(std::span<const double> samples, std::size_t bin_count);

}  // namespace quiks::analytics
