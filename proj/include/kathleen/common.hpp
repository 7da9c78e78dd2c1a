#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace kathleen {

using Shape = std::vector<int64_t>;

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << "]";
    return os.str();
}

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

[[noreturn]] inline void shape_fail(const std::string& op, const Shape& a, const Shape& b) {
    throw ShapeError(op + ": incompatible shapes " + shape_str(a) + " vs " + shape_str(b));
}

// Non-finite forward outputs: hard error in debug builds, sticky flag in release.
enum class FiniteCheckMode { Throw, Flag };

inline FiniteCheckMode& finite_check_mode() {
#ifdef NDEBUG
    static FiniteCheckMode mode = FiniteCheckMode::Flag;
#else
    static FiniteCheckMode mode = FiniteCheckMode::Throw;
#endif
    return mode;
}

inline std::atomic<bool>& nonfinite_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

template <class S>
inline void check_finite(const std::vector<S>& v, const char* op) {
    for (S x : v) {
        if (!std::isfinite(static_cast<double>(x))) {
            if (finite_check_mode() == FiniteCheckMode::Throw) {
                throw NumericError(std::string(op) + ": non-finite value in forward output");
            }
            nonfinite_flag().store(true, std::memory_order_relaxed);
            return;
        }
    }
}

// Splits [0,n) into contiguous blocks, one per worker. Each block writes
// disjoint output, so results are identical for any thread count.
template <class F>
void parallel_for(int64_t n, int64_t grain, F&& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw <= 1 || n <= grain) {
        fn(int64_t{0}, n);
        return;
    }
    int64_t workers = std::min<int64_t>(hw, (n + grain - 1) / grain);
    int64_t block = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers - 1));
    for (int64_t w = 1; w < workers; ++w) {
        int64_t lo = w * block;
        int64_t hi = std::min(n, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    fn(int64_t{0}, std::min(n, block));
    for (auto& t : pool) t.join();
}

}  // namespace kathleen
