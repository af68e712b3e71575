#include "quiks/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <iostream>
#include <numeric>
#include <string>

#include "quiks/errors.hpp"

namespace quiks::analytics {

namespace {

void tick(OpCounter* counter, std::uint64_t n = 1) {
    if (counter != nullptr) {
        counter->ops += n;
    }
}

}  // namespace

double AutocovarianceSeries::at(std::int64_t lag) const {
    const auto x = static_cast<std::size_t>(lag < 0 ? -lag : lag);
    if (x >= cov.size()) {
        throw LagRangeExceeded("autocovariance lag " + std::to_string(x) + " beyond estimated " +
                               std::to_string(cov.size()) + " lags");
    }
    return cov[x];
}

AutocovarianceSeries estimate_autocovariance(std::span<const double> samples, std::size_t max_lag,
                                             OpCounter* counter) {
    if (max_lag == 0) {
        throw InsufficientSamples("max_lag must be positive");
    }
    if (samples.size() < 2 * max_lag) {
        throw InsufficientSamples("need at least " + std::to_string(2 * max_lag) +
                                  " samples for " + std::to_string(max_lag) + " lags, got " +
                                  std::to_string(samples.size()));
    }
    const auto n = samples.size();
    AutocovarianceSeries out;
    out.sample_count = n;
    out.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
    tick(counter, n);

    out.cov.assign(max_lag, 0.0);
    for (std::size_t x = 0; x < max_lag; ++x) {
        double acc = 0.0;
        for (std::size_t i = 0; i + x < n; ++i) {
            acc += (samples[i] - out.mean) * (samples[i + x] - out.mean);
        }
        tick(counter, n - x);
        out.cov[x] = acc / static_cast<double>(n);
    }
    return out;
}

LambdaTable::LambdaTable(const AutocovarianceSeries& cov, int K, OpCounter* counter) : k_(K) {
    if (K < 1) {
        throw LagRangeExceeded("K must be positive");
    }
    if (cov.max_lag() < static_cast<std::size_t>(K)) {
        throw LagRangeExceeded("Λ needs lags 0.." + std::to_string(K - 1) + " but only " +
                               std::to_string(cov.max_lag()) + " were estimated");
    }
    const auto k = static_cast<std::size_t>(K);
    values_.assign(k * k, 0.0);
    auto prev = [&](std::size_t j, std::size_t q) -> double {
        // Λ(0,·) = Λ(·,0) = 0
        return (j == 0 || q == 0) ? 0.0 : values_[(j - 1) * k + (q - 1)];
    };
    for (std::size_t j = 1; j <= k; ++j) {
        for (std::size_t q = 1; q <= k; ++q) {
            const auto lag = static_cast<std::int64_t>(j) - static_cast<std::int64_t>(q);
            values_[(j - 1) * k + (q - 1)] =
                prev(j - 1, q) + prev(j, q - 1) - prev(j - 1, q - 1) + cov.at(lag);
        }
    }
    tick(counter, k * k);
}

LambdaTable lambda_table(const AutocovarianceSeries& cov, int K, OpCounter* counter) {
    return LambdaTable(cov, K, counter);
}

double sigma_delta_squared(const AutocovarianceSeries& cov, const DelayDistribution& delays,
                           OpCounter* counter) {
    const int K = delays.max_delay();
    const LambdaTable lambda(cov, K, counter);
    double total = 0.0;
    for (int j = 1; j <= K; ++j) {
        const double wj = delays.at(j);
        double row = 0.0;
        for (int k = 1; k <= K; ++k) {
            row += delays.at(k) * lambda.at(j, k);
        }
        total += wj * row;
    }
    tick(counter, static_cast<std::uint64_t>(K) * static_cast<std::uint64_t>(K));
    return 2.0 * total;
}

double sigma_delta(const AutocovarianceSeries& cov, const DelayDistribution& delays,
                   OpCounter* counter) {
    const double var = sigma_delta_squared(cov, delays, counter);
    if (var < 0.0) {
        std::clog << "quiks: negative sigma_delta^2 (" << var << ") clamped to 0\n";
        return 0.0;
    }
    return std::sqrt(var);
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidEpsilon("quantile probability must lie in (0,1)");
    }
    // A&S 26.2.23 for the upper tail q = min(p, 1-p).
    const double q = p < 0.5 ? p : 1.0 - p;
    const double t = std::sqrt(-2.0 * std::log(q));
    constexpr double c0 = 2.515517, c1 = 0.802853, c2 = 0.010328;
    constexpr double d1 = 1.432788, d2 = 0.189269, d3 = 0.001308;
    double z = t - (c0 + c1 * t + c2 * t * t) / (1.0 + d1 * t + d2 * t * t + d3 * t * t * t);
    if (p < 0.5) {
        z = -z;
    }
    // One Newton step on Φ(z) - p = 0.
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    const double err = p < 0.5 ? normal_cdf(z) - p : (1.0 - p) - normal_cdf(-z);
    return z - err / pdf;
}

double required_buffer(double sigma, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) {
        throw InvalidEpsilon("epsilon must lie in (0, 0.5), got " + std::to_string(epsilon));
    }
    if (sigma < 0.0) {
        throw InvalidEpsilon("sigma must be non-negative");
    }
    if (sigma == 0.0) {
        return 0.0;
    }
    return sigma * normal_quantile(1.0 - epsilon);
}

NormalFit fit_normal(std::span<const double> samples, std::size_t bin_count) {
    if (samples.size() < 100) {
        throw InsufficientSamples("normal fit needs at least 100 samples, got " +
                                  std::to_string(samples.size()));
    }
    if (bin_count == 0) {
        throw InsufficientSamples("bin_count must be positive");
    }
    const auto n = static_cast<double>(samples.size());
    double mean = 0.0;
    double m2 = 0.0;
    double count = 0.0;
    for (double x : samples) {
        count += 1.0;
        const double delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }
    const double sigma = std::sqrt(m2 / n);
    if (!(sigma > 0.0)) {
        throw DegenerateDistribution("samples have zero variance");
    }

    const auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
    const bool integral = std::all_of(samples.begin(), samples.end(),
                                      [](double x) { return x == std::floor(x); });
    double lo = *min_it;
    double width = 0.0;
    std::size_t bins = bin_count;
    if (integral) {
        const double values = *max_it - *min_it + 1.0;
        width = std::max(1.0, std::round(values / static_cast<double>(bin_count)));
        bins = static_cast<std::size_t>(std::ceil(values / width));
        lo -= 0.5;
    } else {
        width = (*max_it - *min_it) / static_cast<double>(bin_count);
    }

    std::vector<double> observed(bins, 0.0);
    for (double x : samples) {
        auto b = static_cast<std::size_t>((x - lo) / width);
        observed[std::min(b, bins - 1)] += 1.0;
    }

    auto expected_counts = [&](double mu, double sd) {
        std::vector<double> e(bins, 0.0);
        for (std::size_t b = 0; b < bins; ++b) {
            const double a = lo + width * static_cast<double>(b);
            e[b] = n * (normal_cdf((a + width - mu) / sd) - normal_cdf((a - mu) / sd));
        }
        return e;
    };
    auto residual = [&](const std::vector<double>& e) {
        double ss = 0.0;
        for (std::size_t b = 0; b < bins; ++b) {
            ss += (observed[b] - e[b]) * (observed[b] - e[b]);
        }
        return ss;
    };

    // Least-squares normal curve through the histogram (Levenberg-Marquardt on mu, sigma),
    // started from the sample moments.
    double mu = mean;
    double sd = sigma;
    auto expected = expected_counts(mu, sd);
    double ss = residual(expected);
    double damping = 1e-3;
    for (int iter = 0; iter < 100; ++iter) {
        double jtj[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
        double jtr[2] = {0.0, 0.0};
        for (std::size_t b = 0; b < bins; ++b) {
            const double a = lo + width * static_cast<double>(b);
            const double za = (a - mu) / sd;
            const double zb = (a + width - mu) / sd;
            const double pa = std::exp(-0.5 * za * za) / std::sqrt(2.0 * std::numbers::pi);
            const double pb = std::exp(-0.5 * zb * zb) / std::sqrt(2.0 * std::numbers::pi);
            const double d_mu = n / sd * (pa - pb);
            const double d_sd = n / sd * (za * pa - zb * pb);
            const double r = observed[b] - expected[b];
            jtj[0][0] += d_mu * d_mu;
            jtj[0][1] += d_mu * d_sd;
            jtj[1][1] += d_sd * d_sd;
            jtr[0] += d_mu * r;
            jtr[1] += d_sd * r;
        }
        const double a00 = jtj[0][0] * (1.0 + damping);
        const double a11 = jtj[1][1] * (1.0 + damping);
        const double det = a00 * a11 - jtj[0][1] * jtj[0][1];
        if (!(std::abs(det) > 0.0)) {
            break;
        }
        const double step_mu = (a11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
        const double step_sd = (a00 * jtr[1] - jtj[0][1] * jtr[0]) / det;
        const double next_sd = sd + step_sd;
        if (next_sd > 0.0) {
            auto trial = expected_counts(mu + step_mu, next_sd);
            const double trial_ss = residual(trial);
            if (trial_ss < ss) {
                const bool converged = ss - trial_ss <= 1e-12 * ss;
                mu += step_mu;
                sd = next_sd;
                expected = std::move(trial);
                ss = trial_ss;
                damping = std::max(damping / 10.0, 1e-9);
                if (converged) {
                    break;
                }
                continue;
            }
        }
        damping *= 10.0;
        if (damping > 1e9) {
            break;
        }
    }

    const double obs_mean = n / static_cast<double>(bins);
    double ss_res = 0.0;
    double ss_tot = 0.0;
    double chi2 = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        ss_res += (observed[b] - expected[b]) * (observed[b] - expected[b]);
        ss_tot += (observed[b] - obs_mean) * (observed[b] - obs_mean);
        if (expected[b] >= 5.0) {
            chi2 += (observed[b] - expected[b]) * (observed[b] - expected[b]) / expected[b];
            ++used;
        }
    }

    NormalFit fit;
    fit.mu = mu;
    fit.sigma = sd;
    fit.sample_mean = mean;
    fit.sample_sigma = sigma;
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.bins_used = used;
    fit.chi2_reduced = chi2 / static_cast<double>(std::max<std::size_t>(used, 4) - 3);
    return fit;
}

}  // namespace quiks::analytics
