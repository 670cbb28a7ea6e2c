#include "acl/kernels.hpp"

#include <algorithm>
#include <cmath>

// Expands to an OpenMP parallel-for over the next loop, gated on a bool named
// `par` in the enclosing scope. Without OpenMP it expands to nothing and the
// loop runs serially, which keeps -Wunknown-pragmas quiet.
#if defined(_OPENMP)
#define ACL_OMP_PARALLEL_FOR _Pragma("omp parallel for if(par)")
#else
#define ACL_OMP_PARALLEL_FOR
#endif

namespace acl::kernels {

namespace {

template <bool Par>
void matmul_impl(const double* a, const double* b, double* c, int m, int k,
                 int n, bool accumulate) {
    if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
    const bool par =
        Par && static_cast<std::size_t>(m) * k * n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c[k x n] = a^T b: row p of c gathers column p of a; parallel over p.
template <bool Par>
void matmul_at_impl(const double* a, const double* b, double* c, int m, int k,
                    int n, bool accumulate) {
    if (!accumulate) std::fill(c, c + static_cast<std::size_t>(k) * n, 0.0);
    const bool par =
        Par && static_cast<std::size_t>(m) * k * n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (int p = 0; p < k; ++p) {
        double* crow = c + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const double av = a[static_cast<std::size_t>(i) * k + p];
            const double* brow = b + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <bool Par>
void matmul_bt_impl(const double* a, const double* b, double* c, int m, int n,
                    int kb, bool accumulate) {
    const bool par =
        Par && static_cast<std::size_t>(m) * n * kb >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * n;
        double* crow = c + static_cast<std::size_t>(i) * kb;
        for (int j = 0; j < kb; ++j) {
            const double* brow = b + static_cast<std::size_t>(j) * n;
            // Four independent partial sums: the accumulation order is still
            // fixed (serial and parallel instantiate the same body, so they
            // stay bitwise equal) but the loop no longer stalls on a single
            // add chain.
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            int p = 0;
            for (; p + 4 <= n; p += 4) {
                s0 += arow[p] * brow[p];
                s1 += arow[p + 1] * brow[p + 1];
                s2 += arow[p + 2] * brow[p + 2];
                s3 += arow[p + 3] * brow[p + 3];
            }
            double acc = (s0 + s1) + (s2 + s3);
            for (; p < n; ++p) acc += arow[p] * brow[p];
            if (accumulate) {
                crow[j] += acc;
            } else {
                crow[j] = acc;
            }
        }
    }
}

}  // namespace

void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate) {
    matmul_impl<true>(a, b, c, m, k, n, accumulate);
}

void matmul_serial(const double* a, const double* b, double* c, int m, int k,
                   int n, bool accumulate) {
    matmul_impl<false>(a, b, c, m, k, n, accumulate);
}

void matmul_at(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
    matmul_at_impl<true>(a, b, c, m, k, n, accumulate);
}

void matmul_at_serial(const double* a, const double* b, double* c, int m, int k,
                      int n, bool accumulate) {
    matmul_at_impl<false>(a, b, c, m, k, n, accumulate);
}

void matmul_bt(const double* a, const double* b, double* c, int m, int n,
               int kb, bool accumulate) {
    matmul_bt_impl<true>(a, b, c, m, n, kb, accumulate);
}

void matmul_bt_serial(const double* a, const double* b, double* c, int m, int n,
                      int kb, bool accumulate) {
    matmul_bt_impl<false>(a, b, c, m, n, kb, accumulate);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = a[i] * b[i];
}

void scale(const double* a, double s, double* out, std::size_t n) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = a[i] * s;
}

void axpy(double s, const double* a, double* out, std::size_t n) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] += s * a[i];
}

void mul_add(const double* a, const double* b, double* out, std::size_t n,
             double s) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] += s * a[i] * b[i];
}

void add_scalar(double s, double* out, std::size_t n) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] += s;
}

void relu(const double* a, double* out, std::size_t n) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_mask(const double* a, double* out, std::size_t n) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = a[i] > 0.0 ? 1.0 : 0.0;
}

void relu_grad_add(const double* a, const double* gc, double* ga,
                   std::size_t n) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        if (a[i] > 0.0) ga[i] += gc[i];
}

void tanh_map(const double* a, double* out, std::size_t n) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = std::tanh(a[i]);
}

void tanh_grad_add(const double* z, const double* gc, double* ga,
                   std::size_t n) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        ga[i] += gc[i] * (1.0 - z[i] * z[i]);
}

void square(const double* a, double* out, std::size_t n) {
    const bool par = n >= kParallelWork;
    (void)par;
    ACL_OMP_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = a[i] * a[i];
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double acc = (s0 + s1) + (s2 + s3);
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace acl::kernels
