#include "bype/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace bype::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Table* select() {
    const char* env = std::getenv("BYPE_KERNELS");
    const Table* avx2 = cpu_has_avx2() ? avx2_table() : nullptr;
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return &scalar_table();
    if (env != nullptr && std::strcmp(env, "avx2") == 0) {
        if (avx2 == nullptr)
            throw std::runtime_error("BYPE_KERNELS=avx2 but AVX2 is unavailable");
        return avx2;
    }
    return avx2 != nullptr ? avx2 : &scalar_table();
}

} // namespace

const Table& active() {
    static const Table* chosen = select();
    return *chosen;
}

} // namespace bype::kernels
