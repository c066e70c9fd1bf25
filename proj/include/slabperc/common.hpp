#pragma once

// Shared primitives: error types, a packed bitset for edge configurations,
// and a deterministic thread-pool map used by the Monte Carlo drivers.

#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace slabperc {

// Invalid user-supplied parameters (CLI maps this to exit code 2).
struct param_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Region does not fit the lattice window.
struct window_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Resource caps exceeded (CLI maps this to exit code 3).
struct size_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw param_error(msg);
}

// One bit per edge index; edge counts are known up front, so no growth.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t n, bool value = false)
        : size_(n), words_((n + 63) / 64, value ? ~std::uint64_t{0} : 0) {
        trim();
    }

    std::size_t size() const { return size_; }

    bool get(std::size_t i) const {
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }
    void set(std::size_t i, bool v) {
        std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (v) words_[i >> 6] |= mask;
        else   words_[i >> 6] &= ~mask;
    }
    void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
        return c;
    }

    std::size_t hamming(const Bitset& other) const {
        std::size_t c = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            c += static_cast<std::size_t>(__builtin_popcountll(words_[i] ^ other.words_[i]));
        return c;
    }

    bool operator==(const Bitset& other) const {
        return size_ == other.size_ && words_ == other.words_;
    }

    const std::vector<std::uint64_t>& words() const { return words_; }
    std::vector<std::uint64_t>& words() { return words_; }

private:
    void trim() {
        if (size_ & 63) words_.back() &= (std::uint64_t{1} << (size_ & 63)) - 1;
    }
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

// Number of worker threads; 0 = hardware concurrency.
inline unsigned effective_threads(unsigned requested) {
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(task) for task in [0, n_tasks). Results are combined by the caller
// from a vector ordered by task index, so the schedule cannot leak into any
// output: aggregation is always in index order.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n_tasks, Fn&& fn, unsigned threads = 0) {
    std::vector<T> out(n_tasks);
    unsigned nt = effective_threads(threads);
    if (nt <= 1 || n_tasks <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (unsigned t = 0; t < nt; ++t) {
        pool.emplace_back([&, t]() {
            for (std::size_t i = t; i < n_tasks; i += nt) out[i] = fn(i);
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

// Replica-count reduction: returns the number of successes of a boolean
// replica function, split into contiguous chunks. Integer addition commutes,
// so the result is schedule-independent.
template <typename Fn>
std::uint64_t parallel_count(std::uint64_t replicas, Fn&& fn, unsigned threads = 0) {
    unsigned nt = effective_threads(threads);
    if (nt <= 1 || replicas < 128) {
        std::uint64_t c = 0;
        for (std::uint64_t r = 0; r < replicas; ++r) c += fn(r) ? 1 : 0;
        return c;
    }
    std::vector<std::uint64_t> partial(nt, 0);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::uint64_t chunk = (replicas + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
        pool.emplace_back([&, t]() {
            std::uint64_t lo = t * chunk;
            std::uint64_t hi = lo + chunk < replicas ? lo + chunk : replicas;
            std::uint64_t c = 0;
            for (std::uint64_t r = lo; r < hi; ++r) c += fn(r) ? 1 : 0;
            partial[t] = c;
        });
    }
    for (auto& th : pool) th.join();
    std::uint64_t total = 0;
    for (auto c : partial) total += c;
    return total;
}

} // namespace slabperc
