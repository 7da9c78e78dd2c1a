#pragma once

#include <atomic>
#include <cstdint>

namespace kathleen {

// Tracks live tensor storage. The bench command resets the peak between
// sequence lengths to measure per-length peaks (VmHWM is monotonic and
// useless for that).
class MemStats {
public:
    static std::atomic<int64_t>& current() {
        static std::atomic<int64_t> v{0};
        return v;
    }
    static std::atomic<int64_t>& peak() {
        static std::atomic<int64_t> v{0};
        return v;
    }

    static void add(int64_t bytes) {
        int64_t now = current().fetch_add(bytes, std::memory_order_relaxed) + bytes;
        int64_t prev = peak().load(std::memory_order_relaxed);
        while (now > prev && !peak().compare_exchange_weak(prev, now, std::memory_order_relaxed)) {
        }
    }
    static void sub(int64_t bytes) { current().fetch_sub(bytes, std::memory_order_relaxed); }
    static void reset_peak() { peak().store(current().load(), std::memory_order_relaxed); }
    static int64_t peak_bytes() { return peak().load(std::memory_order_relaxed); }
};

}  // namespace kathleen
