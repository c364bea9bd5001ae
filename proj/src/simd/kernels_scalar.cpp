#include "cid/simd/kernels.hpp"

namespace cid::simd::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (std::size_t j = 0; j < 4; ++j) {
            const double prod = a[i + j] * b[i + j];
            lane[j] = lane[j] + prod;
        }
    }
    double sum = (lane[0] + lane[2]) + (lane[1] + lane[3]);
    for (; i < n; ++i) {
        const double prod = a[i] * b[i];
        sum = sum + prod;
    }
    return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double prod = alpha * x[i];
        y[i] = y[i] + prod;
    }
}

}  // namespace cid::simd::detail
