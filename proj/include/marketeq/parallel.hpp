#pragma once

#include <cstdint>
#include <functional>
#include <optional>

namespace marketeq {

// Smallest index in [0, count) where probe returns true, or nullopt.
//
// probe must be a pure function of its index. Under that contract the result
// is the same for every thread count: workers claim ascending chunks and may
// only skip indices strictly above the best success seen so far, so every
// index below the minimum success is always evaluated.
std::optional<std::uint64_t> first_success(
    std::uint64_t count, unsigned threads,
    const std::function<bool(std::uint64_t)>& probe);

// Threads actually used for a request (0 means one per hardware thread).
unsigned resolve_threads(unsigned requested);

}  // namespace marketeq
