#include "cid/error.hpp"
#include "cid/simd/kernels.hpp"

#include <cstdlib>
#include <string>

namespace cid::simd {

namespace {

constexpr Kernels kScalar{Isa::Scalar, &detail::dot_scalar, &detail::axpy_scalar};
#if defined(__x86_64__) || defined(__i386__)
constexpr Kernels kAvx2{Isa::Avx2, &detail::dot_avx2, &detail::axpy_avx2};
#endif
#if defined(__aarch64__)
constexpr Kernels kNeon{Isa::Neon, &detail::dot_neon, &detail::axpy_neon};
#endif

const Kernels& resolve() {
    if (const char* forced = std::getenv("CID_SIMD"); forced != nullptr && *forced != '\0') {
        const std::string name(forced);
        for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
            if (name == isa_name(isa) && isa_supported(isa)) {
                return kernels_for(isa);
            }
        }
    }
    const auto isas = supported_isas();
    return kernels_for(isas.back());
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool isa_supported(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar:
            return true;
        case Isa::Avx2:
#if defined(__x86_64__) || defined(__i386__)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

std::vector<Isa> supported_isas() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
        if (isa_supported(isa)) out.push_back(isa);
    }
    return out;
}

const Kernels& kernels_for(Isa isa) {
    if (!isa_supported(isa)) {
        throw PreconditionError("SIMD variant '" + std::string(isa_name(isa)) +
                                "' is not available on this CPU");
    }
    switch (isa) {
#if defined(__x86_64__) || defined(__i386__)
        case Isa::Avx2: return kAvx2;
#endif
#if defined(__aarch64__)
        case Isa::Neon: return kNeon;
#endif
        default: return kScalar;
    }
}

const Kernels& active() {
    static const Kernels& chosen = resolve();
    return chosen;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw PreconditionError("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
    }
    return active().dot(a.data(), b.data(), a.size());
}

double squared_norm(std::span<const double> a) {
    return active().dot(a.data(), a.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) {
        throw PreconditionError("axpy: length mismatch " + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()));
    }
    active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace cid::simd
