#pragma once

#include <cstddef>
#include <new>
#include <vector>

namespace bisr::memory {

/// Per-thread byte counters fed by TrackingAllocator.
struct Counters {
    std::size_t current = 0;
    std::size_t peak = 0;
};

Counters& thread_counters() noexcept;

void record_allocation(std::size_t bytes) noexcept;
void record_deallocation(std::size_t bytes) noexcept;

/// std::allocator-compatible allocator that reports every allocation to the
/// calling thread's counters. Used for all scratch of the fast Gram path and the
/// explicit im2col matrix of the brute-force oracle, so both are measured the
/// same way.
template <class T>
struct TrackingAllocator {
    using value_type = T;

    TrackingAllocator() noexcept = default;
    template <class U>
    TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        const std::size_t bytes = n * sizeof(T);
        T* p = static_cast<T*>(::operator new(bytes));
        record_allocation(bytes);
        return p;
    }

    void deallocate(T* p, std::size_t n) noexcept {
        record_deallocation(n * sizeof(T));
        ::operator delete(p);
    }

    template <class U>
    bool operator==(const TrackingAllocator<U>&) const noexcept {
        return true;
    }
};

template <class T>
using TrackedVector = std::vector<T, TrackingAllocator<T>>;

/// Measures the peak of tracked bytes allocated on this thread while alive,
/// relative to the live total at construction.
class PeakScope {
public:
    PeakScope() noexcept;
    ~PeakScope();
    PeakScope(const PeakScope&) = delete;
    PeakScope& operator=(const PeakScope&) = delete;

    std::size_t peak_bytes() const noexcept;
    std::size_t peak_scalars() const noexcept { return peak_bytes() / sizeof(double); }

private:
    std::size_t baseline_;
    std::size_t saved_peak_;
};

}  // namespace bisr::memory
