#pragma once
// Double-precision vector kernels used by the similarity meter and the
// linear classifiers. Every variant accumulates into four lanes
// (lane j takes elements i with i % 4 == j over the blocked prefix), reduces
// them as (l0 + l2) + (l1 + l3), then adds the tail sequentially. Multiplies
// and adds are never fused. That fixed order makes the SIMD variants
// bit-identical to the scalar reference.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace cid::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa) noexcept;

struct Kernels {
    Isa isa;
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

/// True when the variant is compiled in and the running CPU can execute it.
bool isa_supported(Isa isa) noexcept;
std::vector<Isa> supported_isas();

/// Throws cid::PreconditionError if `isa` is not supported here.
const Kernels& kernels_for(Isa isa);

/// Best supported variant, unless the CID_SIMD environment variable
/// (scalar|avx2|neon) names another supported one. Resolved once.
const Kernels& active();

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
#if defined(__x86_64__) || defined(__i386__)
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
#endif
#if defined(__aarch64__)
double dot_neon(const double* a, const double* b, std::size_t n);
void axpy_neon(double alpha, const double* x, double* y, std::size_t n);
#endif
}  // namespace detail

}  // namespace cid::simd
