#pragma once

// The stationary heavy-tailed renewal environment: which columns of the slab
// carry enhanced edges, and the good/bad classification of column intervals.
//
// Inter-arrival sampler: xi = ceil(V^(-1/phi)) for V uniform on (0,1), which
// realizes P(xi > t) = t^(-phi) exactly at every integer t >= 1. The tail
// constant is therefore c = 1 and the good-interval bound below is sharp
// enough to test against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "common.hpp"
#include "rng.hpp"

namespace slabperc {

struct RenewalParams {
    double phi = 3.0;               // tail exponent, > 1
    std::uint64_t master_seed = 1;

    void validate() const { require(phi > 1.0, "RenewalParams: phi must exceed 1"); }
};

// xi = ceil(V^(-1/phi)); V in (0,1) strictly, so the result is >= 2.
inline std::uint64_t xi_from_uniform(double v, double phi) {
    return static_cast<std::uint64_t>(std::ceil(std::pow(v, -1.0 / phi)));
}

inline std::uint64_t sample_xi(double phi, Stream& stream) {
    return xi_from_uniform(stream.next_unit(), phi);
}

// E(xi) = sum_{t>=0} P(xi > t) = 1 + zeta(phi).
inline double mean_xi(double phi) { return 1.0 + std::riemann_zeta(phi); }

// Stationary delay: P(U=0) = 1/E(xi), P(U=k) = k^(-phi)/E(xi) for k >= 1.
// Inverse CDF with a lazily extended table; the support is unbounded.
class DelaySampler {
public:
    explicit DelaySampler(double phi) : phi_(phi), mean_(mean_xi(phi)) {
        cumulative_.push_back(1.0); // P(xi > 0) = 1, the k = 0 mass
    }

    std::uint64_t sample(Stream& stream) {
        double target = stream.next_unit() * mean_;
        while (cumulative_.back() < target && cumulative_.back() < mean_ * (1.0 - 1e-15))
            extend();
        // U = first k with cumulative_[k] >= target.
        auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), target);
        if (it == cumulative_.end()) --it;
        return static_cast<std::uint64_t>(it - cumulative_.begin());
    }

    double mass(std::uint64_t k) const {
        return (k == 0 ? 1.0 : std::pow(static_cast<double>(k), -phi_)) / mean_;
    }

private:
    void extend() {
        std::size_t target_size = cumulative_.size() * 2;
        while (cumulative_.size() < target_size) {
            double k = static_cast<double>(cumulative_.size());
            cumulative_.push_back(cumulative_.back() + std::pow(k, -phi_));
        }
    }
    double phi_;
    double mean_;
    std::vector<double> cumulative_; // partial sums of P(xi > k), k = 0,1,...
};

// Arrivals of the renewal process inside [0, window_x).
struct Environment {
    std::vector<std::uint64_t> arrivals; // strictly increasing
    std::uint64_t window_x = 0;
    RenewalParams params;
    std::uint64_t stream_id = 0;

    bool contains(std::uint64_t column) const {
        std::size_t lo = 0, hi = arrivals.size();
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (arrivals[mid] < column) lo = mid + 1;
            else hi = mid;
        }
        return lo < arrivals.size() && arrivals[lo] == column;
    }
};

// eta_0 = U, eta_i = eta_{i-1} + xi_i, kept while below the window edge.
inline Environment generate_environment(const RenewalParams& params, std::uint64_t window_x,
                                        std::uint64_t stream_id = 0) {
    params.validate();
    require(window_x >= 1, "generate_environment: window must be positive");
    Environment env;
    env.window_x = window_x;
    env.params = params;
    env.stream_id = stream_id;
    Stream stream(params.master_seed, stream_id);
    DelaySampler delay(params.phi);
    std::uint64_t eta = delay.sample(stream);
    while (eta < window_x) {
        env.arrivals.push_back(eta);
        eta += sample_xi(params.phi, stream);
    }
    return env;
}

// The renewal recursion unrolled over explicit steps; the sampled path
// above is this recursion driven by the xi sampler.
inline Environment environment_from_steps(std::uint64_t delay,
                                          const std::vector<std::uint64_t>& steps,
                                          std::uint64_t window_x) {
    Environment env;
    env.window_x = window_x;
    std::uint64_t eta = delay;
    std::size_t i = 0;
    while (eta < window_x) {
        env.arrivals.push_back(eta);
        if (i >= steps.size()) break;
        eta += steps[i++];
    }
    return env;
}

// A fully reinforced stub environment (every column selected); used by
// degenerate tests and the all-good multiscale stubs.
inline Environment dense_environment(std::uint64_t window_x) {
    Environment env;
    env.window_x = window_x;
    env.arrivals.resize(window_x);
    for (std::uint64_t i = 0; i < window_x; ++i) env.arrivals[i] = i;
    return env;
}

struct IntervalClassification {
    std::uint64_t n = 0;     // half-length; intervals are [2in, 2(i+1)n)
    double lambda = 0.0;
    std::vector<std::uint64_t> gaps; // d_i per interval
    std::vector<bool> good;          // d_i <= n^lambda

    std::size_t count() const { return good.size(); }
};

// Max gap between consecutive arrivals in each interval, with the interval
// endpoints as sentinels, so gaps straddling an endpoint count truncated.
inline IntervalClassification classify_intervals(const Environment& env, std::uint64_t n,
                                                 double lambda) {
    require(n >= 1, "classify_intervals: n must be positive");
    require(lambda > 0.0 && lambda < 1.0, "classify_intervals: lambda must lie in (0,1)");
    require(env.window_x % (2 * n) == 0, "classify_intervals: 2n must divide the window");
    IntervalClassification cls;
    cls.n = n;
    cls.lambda = lambda;
    const std::uint64_t m = env.window_x / (2 * n);
    const double threshold = std::pow(static_cast<double>(n), lambda);
    cls.gaps.reserve(m);
    cls.good.reserve(m);
    std::size_t j = 0; // first arrival not yet consumed
    for (std::uint64_t i = 0; i < m; ++i) {
        const std::uint64_t lo = 2 * i * n;
        const std::uint64_t hi = lo + 2 * n;
        std::uint64_t prev = lo, d = 0;
        while (j < env.arrivals.size() && env.arrivals[j] < hi) {
            std::uint64_t a = env.arrivals[j];
            if (a >= lo) {
                if (a - prev > d) d = a - prev;
                prev = a;
            }
            ++j;
        }
        if (hi - prev > d) d = hi - prev;
        cls.gaps.push_back(d);
        cls.good.push_back(static_cast<double>(d) <= threshold);
    }
    return cls;
}

// The good-interval probability bound with the sampler-exact constant c = 1.
inline double good_probability_bound(std::uint64_t n, double lambda, double phi) {
    require(phi > 2.0, "good_probability_bound: phi must exceed 2");
    require(lambda > 1.0 / phi && lambda < 1.0, "good_probability_bound: lambda must lie in (1/phi, 1)");
    double b = 1.0 - 3.0 * std::pow(static_cast<double>(n), 1.0 - phi * lambda);
    return b < 0.0 ? 0.0 : b;
}

// Line-based text round-trip: header, then one arrival per line.
inline void write_environment(std::ostream& os, const Environment& env) {
    os << "slabperc-environment v1\n";
    os << "phi " << env.params.phi << "\n";
    os << "seed " << env.params.master_seed << "\n";
    os << "stream " << env.stream_id << "\n";
    os << "window " << env.window_x << "\n";
    os << "arrivals " << env.arrivals.size() << "\n";
    for (auto a : env.arrivals) os << a << "\n";
}

inline Environment read_environment(std::istream& is) {
    Environment env;
    std::string line, word;
    if (!std::getline(is, line) || line != "slabperc-environment v1")
        throw param_error("environment file: bad magic line");
    std::size_t count = 0;
    for (int i = 0; i < 5; ++i) {
        if (!std::getline(is, line)) throw param_error("environment file: truncated header");
        std::istringstream ls(line);
        ls >> word;
        if (word == "phi") ls >> env.params.phi;
        else if (word == "seed") ls >> env.params.master_seed;
        else if (word == "stream") ls >> env.stream_id;
        else if (word == "window") ls >> env.window_x;
        else if (word == "arrivals") ls >> count;
        else throw param_error("environment file: unknown header field " + word);
    }
    env.arrivals.reserve(count);
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t a = 0;
        if (!(is >> a)) throw param_error("environment file: truncated arrivals");
        if (i > 0 && a <= prev) throw param_error("environment file: arrivals not increasing");
        if (a >= env.window_x) throw param_error("environment file: arrival outside window");
        env.arrivals.push_back(a);
        prev = a;
    }
    return env;
}

} // namespace slabperc
