#include "recam/kernels.hpp"

#include <atomic>
#include <cstdlib>

#include "recam/errors.hpp"

namespace recam::kernels {

// Defined in kernels_avx2.cpp / kernels_neon.cpp; nullptr when compiled out.
const Ops* avx2_ops();
const Ops* neon_ops();

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Ops* resolve(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return &scalar_ops();
        case Isa::avx2:
            return cpu_has_avx2() ? avx2_ops() : nullptr;
        case Isa::neon:
            return neon_ops();
    }
    return nullptr;
}

Isa best_isa() {
    if (resolve(Isa::avx2) != nullptr) {
        return Isa::avx2;
    }
    if (resolve(Isa::neon) != nullptr) {
        return Isa::neon;
    }
    return Isa::scalar;
}

Isa parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::scalar;
    if (name == "avx2") return Isa::avx2;
    if (name == "neon") return Isa::neon;
    if (name == "auto" || name.empty()) return best_isa();
    throw ConfigError("unknown kernel set '" + std::string(name) + "' (expected scalar|avx2|neon|auto)");
}

struct Dispatch {
    std::atomic<const Ops*> ops{nullptr};
    std::atomic<Isa> isa{Isa::scalar};
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

void init_once() {
    if (dispatch().ops.load(std::memory_order_acquire) != nullptr) {
        return;
    }
    Isa isa = best_isa();
    if (const char* env = std::getenv("RECAM_KERNELS")) {
        Isa wanted = parse_isa(env);
        if (resolve(wanted) != nullptr) {
            isa = wanted;
        }
    }
    dispatch().isa.store(isa, std::memory_order_relaxed);
    dispatch().ops.store(resolve(isa), std::memory_order_release);
}

}  // namespace

const Ops* ops_for(Isa isa) { return resolve(isa); }

bool isa_available(Isa isa) { return resolve(isa) != nullptr; }

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return "scalar";
        case Isa::avx2:
            return "avx2";
        case Isa::neon:
            return "neon";
    }
    return "?";
}

const Ops& active() {
    init_once();
    return *dispatch().ops.load(std::memory_order_acquire);
}

Isa active_isa() {
    init_once();
    return dispatch().isa.load(std::memory_order_relaxed);
}

void select(Isa isa) {
    const Ops* ops = resolve(isa);
    if (ops == nullptr) {
        throw ConfigError(std::string("kernel set '") + isa_name(isa) + "' is not available on this machine");
    }
    dispatch().isa.store(isa, std::memory_order_relaxed);
    dispatch().ops.store(ops, std::memory_order_release);
}

void select(std::string_view name) { select(parse_isa(name)); }

}  // namespace recam::kernels
