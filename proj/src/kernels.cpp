#include <cstdlib>
#include <cstring>

#include "corank/common.hpp"
#include "corank/kernels.hpp"

namespace corank::kernels {

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "?";
}

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

Isa resolve_isa() {
    const bool avx2_ok = built_with_avx2() && cpu_supports_avx2();
    if (const char* env = std::getenv("CORANK_ISA")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::Scalar;
        if (std::strcmp(env, "avx2") == 0) {
            if (!avx2_ok) throw Error("CORANK_ISA=avx2 requested but AVX2 is unavailable");
            return Isa::Avx2;
        }
        throw Error(std::string("unknown CORANK_ISA value: ") + env);
    }
    return avx2_ok ? Isa::Avx2 : Isa::Scalar;
}

}  // namespace

Isa active_isa() {
    static const Isa isa = resolve_isa();
    return isa;
}

const Ops& active_ops() {
    static const Ops& ops = (active_isa() == Isa::Avx2) ? *avx2_ops() : scalar_ops();
    return ops;
}

}  // namespace corank::kernels
