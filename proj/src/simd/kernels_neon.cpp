#include "cid/simd/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace cid::simd::detail {

double dot_neon(const double* a, const double* b, std::size_t n) {
    // lo holds lanes (0, 1), hi holds lanes (2, 3).
    float64x2_t lo = vdupq_n_f64(0.0);
    float64x2_t hi = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
    }
    const float64x2_t pair = vaddq_f64(lo, hi);
    double sum = vgetq_lane_f64(pair, 0) + vgetq_lane_f64(pair, 1);
    for (; i < n; ++i) {
        const double prod = a[i] * b[i];
        sum = sum + prod;
    }
    return sum;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) {
        const double prod = alpha * x[i];
        y[i] = y[i] + prod;
    }
}

}  // namespace cid::simd::detail

#endif
