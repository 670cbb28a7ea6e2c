#pragma once

#include <cstddef>

namespace acl::kernels {

// Minimum scalar multiply-adds before a kernel goes parallel; below this
// thread startup dominates the loop itself.
inline constexpr std::size_t kParallelWork = 32768;

// All matrices are dense row-major double. The parallel variants split work
// across rows of the output only; every output element is accumulated by a
// single thread in a fixed order, so results are bitwise identical to the
// *_serial reference implementations (asserted in the test suite).

// c[m x n] = a[m x k] * b[k x n]. accumulate adds into c instead of overwriting.
void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate = false);
void matmul_serial(const double* a, const double* b, double* c, int m, int k,
                   int n, bool accumulate = false);

// c[k x n] = a^T * b, with a stored as [m x k].
void matmul_at(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
void matmul_at_serial(const double* a, const double* b, double* c, int m, int k,
                      int n, bool accumulate = false);

// c[m x kb] = a * b^T, with a stored as [m x n] and b stored as [kb x n].
void matmul_bt(const double* a, const double* b, double* c, int m, int n,
               int kb, bool accumulate = false);
void matmul_bt_serial(const double* a, const double* b, double* c, int m, int n,
                      int kb, bool accumulate = false);

// Elementwise kernels; out may alias an input.
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
// out += s * a. The workhorse of adjoint accumulation.
void axpy(double s, const double* a, double* out, std::size_t n);
// out += s * a * b, elementwise.
void mul_add(const double* a, const double* b, double* out, std::size_t n,
             double s = 1.0);
// out += s, elementwise.
void add_scalar(double s, double* out, std::size_t n);

// Activation forward maps and their fused backward accumulators.
void relu(const double* a, double* out, std::size_t n);
// out = 1 where a > 0 else 0; the relu subgradient at 0 is taken as 0.
void relu_mask(const double* a, double* out, std::size_t n);
// ga += gc where a > 0.
void relu_grad_add(const double* a, const double* gc, double* ga,
                   std::size_t n);
void tanh_map(const double* a, double* out, std::size_t n);
// ga += gc * (1 - z^2), with z the tanh forward output.
void tanh_grad_add(const double* z, const double* gc, double* ga,
                   std::size_t n);
void square(const double* a, double* out, std::size_t n);

// Reductions stay serial on purpose: a parallel reduction reassociates
// floating-point addition and would break run-to-run determinism.
double sum(const double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);

}  // namespace acl::kernels
