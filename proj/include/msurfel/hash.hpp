#pragma once

#include <cstddef>
#include <cstdint>

#include "msurfel/rasterizer.hpp"

namespace msurfel {

inline constexpr uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr uint64_t kFnvPrime = 1099511628211ull;

inline uint64_t fnv1a(const void* data, size_t size, uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

/// Order-sensitive hash of every output buffer of a rendered frame; equal
/// hashes mean bit-identical images.
template <class S>
uint64_t frame_hash(const RenderFrameT<S>& f) {
    uint64_t h = kFnvOffset;
    h = fnv1a(f.color.data(), f.color.size() * sizeof(S), h);
    h = fnv1a(f.alpha.data(), f.alpha.size() * sizeof(S), h);
    h = fnv1a(f.depth.data(), f.depth.size() * sizeof(S), h);
    h = fnv1a(f.normal.data(), f.normal.size() * sizeof(S), h);
    return h;
}

}  // namespace msurfel
