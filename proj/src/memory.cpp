#include "bisr/memory.hpp"

#include <algorithm>

namespace bisr::memory {

Counters& thread_counters() noexcept {
    thread_local Counters counters;
    return counters;
}

void record_allocation(std::size_t bytes) noexcept {
    Counters& c = thread_counters();
    c.current += bytes;
    c.peak = std::max(c.peak, c.current);
}

void record_deallocation(std::size_t bytes) noexcept {
    Counters& c = thread_counters();
    c.current -= std::min(bytes, c.current);
}

PeakScope::PeakScope() noexcept {
    Counters& c = thread_counters();
    baseline_ = c.current;
    saved_peak_ = c.peak;
    c.peak = c.current;
}

PeakScope::~PeakScope() {
    Counters& c = thread_counters();
    c.peak = std::max(saved_peak_, c.peak);
}

std::size_t PeakScope::peak_bytes() const noexcept {
    return thread_counters().peak - baseline_;
}

}  // namespace bisr::memory
