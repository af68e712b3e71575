#include "quiks/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>
#include <thread>

namespace quiks::oracle {

std::vector<double> true_autocovariance(const ProcessSpec& spec, std::size_t lags) {
    std::vector<double> c(lags, 0.0);
    const double s2 = spec.innovation_sd * spec.innovation_sd;
    switch (spec.kind) {
        case ProcessKind::IidPoisson:
            if (lags > 0) {
                c[0] = spec.mean;
            }
            break;
        case ProcessKind::Ar1Gaussian:
            for (std::size_t h = 0; h < lags; ++h) {
                c[h] = s2 / (1.0 - spec.rho * spec.rho) * std::pow(spec.rho, static_cast<double>(h));
            }
            break;
        case ProcessKind::Ma2Gaussian: {
            const double t1 = spec.theta1;
            const double t2 = spec.theta2;
            const double g[3] = {1.0 + t1 * t1 + t2 * t2, t1 + t1 * t2, t2};
            for (std::size_t h = 0; h < lags && h < 3; ++h) {
                c[h] = s2 * g[h];
            }
            break;
        }
    }
    return c;
}

namespace {

class Sampler {
public:
    Sampler(const ProcessSpec& spec, std::mt19937_64& rng)
        : spec_(spec), rng_(rng), poisson_(spec.mean > 0 ? spec.mean : 1.0) {
        if (spec_.kind == ProcessKind::Ar1Gaussian) {
            // start in the stationary distribution
            state_ = normal_(rng_) * spec_.innovation_sd / std::sqrt(1.0 - spec_.rho * spec_.rho);
        } else if (spec_.kind == ProcessKind::Ma2Gaussian) {
            e1_ = normal_(rng_) * spec_.innovation_sd;
            e2_ = normal_(rng_) * spec_.innovation_sd;
        }
    }

    double next() {
        switch (spec_.kind) {
            case ProcessKind::IidPoisson:
                return spec_.mean > 0 ? static_cast<double>(poisson_(rng_)) : 0.0;
            case ProcessKind::Ar1Gaussian:
                state_ = spec_.rho * state_ + normal_(rng_) * spec_.innovation_sd;
                return spec_.mean + state_;
            case ProcessKind::Ma2Gaussian: {
                const double e = normal_(rng_) * spec_.innovation_sd;
                const double x = spec_.mean + e + spec_.theta1 * e1_ + spec_.theta2 * e2_;
                e2_ = e1_;
                e1_ = e;
                return x;
            }
        }
        return 0.0;
    }

private:
    ProcessSpec spec_;
    std::mt19937_64& rng_;
    std::poisson_distribution<std::int64_t> poisson_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    double state_ = 0.0;
    double e1_ = 0.0;
    double e2_ = 0.0;
};

struct Moments {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    void merge(const Moments& o) {
        if (o.n == 0) {
            return;
        }
        const auto total = n + o.n;
        const double d = o.mean - mean;
        mean += d * static_cast<double>(o.n) / static_cast<double>(total);
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) /
                         static_cast<double>(total);
        n = total;
    }
};

// Buffer level driven by the reactive strategy with expected-fraction key arrivals.
class ReactiveBuffer {
public:
    explicit ReactiveBuffer(std::span<const double> omega)
        : omega_(omega.begin(), omega.end()), sent_(omega.size(), 0.0) {}

    void step(double n) {
        double c = 0.0;
        for (std::size_t j = 0; j < omega_.size(); ++j) {
            // sent_[(head_ + j) % K] holds r_{i-1-j}
            c += omega_[j] * sent_[(head_ + j) % sent_.size()];
        }
        level_ += c - n;
        head_ = (head_ + sent_.size() - 1) % sent_.size();
        sent_[head_] = n;
    }

    [[nodiscard]] double level() const { return level_; }

private:
    std::vector<double> omega_;
    std::vector<double> sent_;
    std::size_t head_ = 0;
    double level_ = 0.0;
};

Moments run_chunk(const ProcessSpec& spec, std::span<const double> omega, std::int64_t gap,
                  std::int64_t trials, std::uint64_t seed, std::uint64_t chunk) {
    std::seed_seq seq{seed, chunk, std::uint64_t{0x6f7261636c65}};
    std::mt19937_64 rng(seq);
    Sampler sampler(spec, rng);
    ReactiveBuffer buffer(omega);
    Moments out;
    // fill the relay pipeline before the first window opens
    for (std::int64_t s = 0; s < gap; ++s) {
        buffer.step(sampler.next());
    }
    for (std::int64_t t = 0; t < trials; ++t) {
        const double m_x = buffer.level();
        for (std::int64_t s = 0; s < gap; ++s) {
            buffer.step(sampler.next());
        }
        out.add(buffer.level() - m_x);
        for (std::int64_t s = 0; s < gap; ++s) {
            buffer.step(sampler.next());
        }
    }
    return out;
}

}  // namespace

McResult mc_sigma_delta(const ProcessSpec& spec, std::span<const double> omega,
                        const McOptions& options) {
    if (omega.empty()) {
        throw std::invalid_argument("empty delay distribution");
    }
    const auto k = static_cast<std::int64_t>(omega.size());
    const auto gap = options.window_gap > 0 ? options.window_gap : 50 * k;
    if (gap < k) {
        throw std::invalid_argument("window gap shorter than the maximum delay");
    }
    const auto chunk_trials = std::max<std::int64_t>(1, options.chunk_trials);
    const auto chunks = (options.trials + chunk_trials - 1) / chunk_trials;

    std::vector<Moments> parts(static_cast<std::size_t>(chunks));
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (auto c = next++; c < chunks; c = next++) {
            const auto n = std::min(chunk_trials, options.trials - c * chunk_trials);
            parts[static_cast<std::size_t>(c)] =
                run_chunk(spec, omega, gap, n, options.seed, static_cast<std::uint64_t>(c));
        }
    };
    unsigned threads = options.threads != 0 ? options.threads : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::int64_t>(1, chunks)));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    // merge in chunk order so the result does not depend on the thread count
    Moments total;
    for (const auto& p : parts) {
        total.merge(p);
    }
    McResult r;
    r.mean = total.mean;
    r.sd = total.n > 1 ? std::sqrt(total.m2 / static_cast<double>(total.n - 1)) : 0.0;
    r.trials = total.n;
    r.window_gap = gap;
    return r;
}

double direct_lambda(std::span<const double> cov, int j, int k) {
    double sum = 0.0;
    for (int p = 1; p <= j; ++p) {
        for (int q = 1; q <= k; ++q) {
            const auto lag = static_cast<std::size_t>(std::abs(p - q));
            if (lag >= cov.size()) {
                throw std::out_of_range("covariance lag out of range");
            }
            sum += cov[lag];
        }
    }
    return sum;
}

double direct_sigma_delta_squared(std::span<const double> cov, std::span<const double> omega) {
    const int k = static_cast<int>(omega.size());
    double sum = 0.0;
    for (int a = 1; a <= k; ++a) {
        for (int b = 1; b <= k; ++b) {
            sum += omega[a - 1] * omega[b - 1] * direct_lambda(cov, a, b);
        }
    }
    return 2.0 * sum;
}

std::vector<ItemLevel> item_buffer_run(std::span<const std::int64_t> n,
                                       std::span<const std::int64_t> c,
                                       std::int64_t initial_keys) {
    if (n.size() != c.size()) {
        throw std::invalid_argument("n and c differ in length");
    }
    std::deque<std::size_t> keys(static_cast<std::size_t>(initial_keys), 0);
    std::deque<std::size_t> requests;
    std::vector<ItemLevel> out;
    for (std::size_t i = 0; i < n.size(); ++i) {
        for (std::int64_t k = 0; k < c[i]; ++k) {
            keys.push_back(i);
        }
        for (std::int64_t r = 0; r < n[i]; ++r) {
            requests.push_back(i);
        }
        while (!keys.empty() && !requests.empty()) {
            keys.pop_front();
            requests.pop_front();
        }
        out.push_back({static_cast<std::int64_t>(keys.size()),
                       static_cast<std::int64_t>(requests.size())});
    }
    return out;
}

}  // namespace quiks::oracle
