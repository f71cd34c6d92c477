#pragma once

#include <cstdint>
#include <cstring>

#include "bype/coreset.hpp"
#include "bype/model.hpp"

namespace bype {

// FNV-1a over raw bytes; used for cheap identity checks in the metrics log.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t hash_tensor(const Tensor& t, std::uint64_t h) {
    return fnv1a64(t.data(), t.numel() * sizeof(double), h);
}

inline std::uint64_t hash_params(const model::VaeParams& p) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    p.for_each_param([&h](const std::string& name, const Tensor& t) {
        h = fnv1a64(name.data(), name.size(), h);
        h = hash_tensor(t, h);
    });
    return h;
}

inline std::uint64_t hash_coreset(const coreset::Pseudocoreset& c) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    h = hash_tensor(c.U, h);
    h = hash_tensor(c.w, h);
    return h;
}

} // namespace bype
