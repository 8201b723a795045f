#include <atomic>
#include <cstdlib>
#include <string>

#include "strudel/kernels.hpp"

namespace strudel::kernels {

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

namespace {

const KernelTable* lookup(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return &scalar_table();
        case Isa::Avx2: return avx2_table();
        case Isa::Neon: return neon_table();
    }
    return nullptr;
}

const KernelTable* detect() {
    if (const char* env = std::getenv("STRUDEL_ISA")) {
        const std::string want(env);
        for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
            if (want == isa_name(isa)) {
                if (const KernelTable* t = lookup(isa)) return t;
            }
        }
    }
    if (const KernelTable* t = avx2_table()) return t;
    if (const KernelTable* t = neon_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> current{detect()};
    return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool force_isa(Isa isa) {
    const KernelTable* t = lookup(isa);
    if (t == nullptr) return false;
    slot().store(t, std::memory_order_release);
    return true;
}

}  // namespace strudel::kernels
