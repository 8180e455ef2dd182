// Shared error types and a small deterministic parallel-for helper.
#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sco {

using std::size_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;

// Raised when an input exceeds what this build is able to compute exactly
// (e.g. dense eigensolve above the configured size limit).
class CapabilityError : public std::runtime_error {
public:
    explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

class GenerationError : public std::runtime_error {
public:
    explicit GenerationError(const std::string& what) : std::runtime_error(what) {}
};

// Gram matrix of the sampled walk matrix lost rank; carries the observed
// top eigenvalues so callers can report why preprocessing failed.
class InitFailure : public std::runtime_error {
public:
    InitFailure(const std::string& what, std::vector<double> eigen_report)
        : std::runtime_error(what), eigen_report(std::move(eigen_report)) {}
    std::vector<double> eigen_report;
};

// Candidate center set produced a singular Gram matrix X.
class ContextFailure : public std::runtime_error {
public:
    explicit ContextFailure(const std::string& what) : std::runtime_error(what) {}
};

class SearchFailure : public std::runtime_error {
public:
    SearchFailure(const std::string& what, std::vector<std::string> round_diagnostics)
        : std::runtime_error(what), round_diagnostics(std::move(round_diagnostics)) {}
    std::vector<std::string> round_diagnostics;
};

namespace detail {
inline int& thread_count_ref() {
    static int count = static_cast<int>(std::thread::hardware_concurrency());
    return count;
}
}  // namespace detail

inline void set_thread_count(int n) { detail::thread_count_ref() = n < 1 ? 1 : n; }
inline int thread_count() { return detail::thread_count_ref(); }

// Runs fn(i) for i in [0, n). Work is split into fixed chunks claimed from an
// atomic cursor; results must not depend on execution order (all our uses
// write to disjoint slots or accumulate order-independent integer counts),
// so the outcome is identical for any thread count.
inline void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    const int threads = thread_count();
    if (threads <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    const size_t chunk = std::max<size_t>(1, n / (static_cast<size_t>(threads) * 8));
    auto worker = [&] {
        for (;;) {
            const size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            const size_t end = std::min(n, begin + chunk);
            for (size_t i = begin; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace sco
