#include <cmath>
#include <cstring>
#include <vector>

#include "acl/kernels.hpp"
#include "acl/rng.hpp"
#include "vendor/doctest.h"

using namespace acl;

namespace {

std::vector<double> randv(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

// Textbook triple loop, kept independent of the kernel implementations.
void naive_matmul(const double* a, const double* b, double* c, int m, int k,
                  int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
            c[i * n + j] = acc;
        }
}

bool all_close(const std::vector<double>& a, const std::vector<double>& b,
                double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({1.0, std::fabs(a[i]), std::fabs(b[i])});
        if (std::fabs(a[i] - b[i]) > tol * scale) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("matmul matches the naive triple loop") {
    Rng rng(11);
    for (auto [m, k, n] : {std::tuple{3, 4, 5}, {1, 1, 1}, {7, 64, 9},
                           {17, 129, 5}}) {
        const std::vector<double> a = randv(std::size_t(m) * k, rng);
        const std::vector<double> b = randv(std::size_t(k) * n, rng);
        std::vector<double> want(std::size_t(m) * n), got(want.size());
        naive_matmul(a.data(), b.data(), want.data(), m, k, n);
        kernels::matmul(a.data(), b.data(), got.data(), m, k, n);
        // Accumulation order differs from the naive loop, so compare with a
        // small relative tolerance instead of bit equality.
        CHECK(all_close(want, got, 1e-12));
    }
}

TEST_CASE("matmul_at computes a^T b") {
    Rng rng(12);
    const int m = 6, k = 5, n = 4;
    const std::vector<double> a = randv(std::size_t(m) * k, rng);  // m x k
    const std::vector<double> b = randv(std::size_t(m) * n, rng);  // m x n
    std::vector<double> at(std::size_t(k) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) at[j * m + i] = a[i * k + j];
    std::vector<double> want(std::size_t(k) * n), got(want.size());
    naive_matmul(at.data(), b.data(), want.data(), k, m, n);
    kernels::matmul_at(a.data(), b.data(), got.data(), m, k, n);
    CHECK(all_close(want, got, 1e-12));
}

TEST_CASE("matmul_bt computes a b^T") {
    Rng rng(13);
    const int m = 6, n = 67, kb = 4;  // n > 4 exercises the unrolled tail
    const std::vector<double> a = randv(std::size_t(m) * n, rng);
    const std::vector<double> b = randv(std::size_t(kb) * n, rng);
    std::vector<double> bt(std::size_t(n) * kb);
    for (int i = 0; i < kb; ++i)
        for (int j = 0; j < n; ++j) bt[j * kb + i] = b[i * n + j];
    std::vector<double> want(std::size_t(m) * kb), got(want.size());
    naive_matmul(a.data(), bt.data(), want.data(), m, n, kb);
    kernels::matmul_bt(a.data(), b.data(), got.data(), m, n, kb);
    CHECK(all_close(want, got, 1e-12));
}

TEST_CASE("accumulate adds instead of overwriting") {
    Rng rng(14);
    const int m = 3, k = 4, n = 2;
    const std::vector<double> a = randv(std::size_t(m) * k, rng);
    const std::vector<double> b = randv(std::size_t(k) * n, rng);
    std::vector<double> base = randv(std::size_t(m) * n, rng);
    std::vector<double> once(std::size_t(m) * n);
    kernels::matmul(a.data(), b.data(), once.data(), m, k, n);
    std::vector<double> acc = base;
    kernels::matmul(a.data(), b.data(), acc.data(), m, k, n, true);
    for (std::size_t i = 0; i < acc.size(); ++i)
        CHECK(acc[i] == doctest::Approx(base[i] + once[i]).epsilon(1e-14));
}

TEST_CASE("parallel kernels are bitwise identical to the serial reference") {
    Rng rng(15);
    // Below and above the kParallelWork gate.
    for (auto [m, k, n] : {std::tuple{4, 8, 4}, {96, 80, 70}, {130, 1024, 64}}) {
        const std::vector<double> a = randv(std::size_t(m) * k, rng);
        const std::vector<double> b = randv(std::size_t(k) * n, rng);
        const std::vector<double> bt_in = randv(std::size_t(n) * k, rng);
        std::vector<double> s(std::size_t(m) * n), p(s.size());

        kernels::matmul_serial(a.data(), b.data(), s.data(), m, k, n);
        kernels::matmul(a.data(), b.data(), p.data(), m, k, n);
        CHECK(std::memcmp(s.data(), p.data(), s.size() * sizeof(double)) == 0);

        std::vector<double> s2(std::size_t(k) * n), p2(s2.size());
        kernels::matmul_at_serial(a.data(), b.data(), s2.data(), m, k, n);
        kernels::matmul_at(a.data(), b.data(), p2.data(), m, k, n);
        CHECK(std::memcmp(s2.data(), p2.data(), s2.size() * sizeof(double)) == 0);

        std::vector<double> s3(std::size_t(m) * n), p3(s3.size());
        kernels::matmul_bt_serial(a.data(), bt_in.data(), s3.data(), m, k, n);
        kernels::matmul_bt(a.data(), bt_in.data(), p3.data(), m, k, n);
        CHECK(std::memcmp(s3.data(), p3.data(), s3.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("elementwise kernels match scalar loops") {
    Rng rng(16);
    const std::size_t n = 37;
    const std::vector<double> a = randv(n, rng);
    const std::vector<double> b = randv(n, rng);
    std::vector<double> out(n);

    kernels::add(a.data(), b.data(), out.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == a[i] + b[i]);

    kernels::sub(a.data(), b.data(), out.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == a[i] - b[i]);

    kernels::mul(a.data(), b.data(), out.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == a[i] * b[i]);

    kernels::scale(a.data(), -2.5, out.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == -2.5 * a[i]);

    kernels::square(a.data(), out.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == a[i] * a[i]);

    out = b;
    kernels::axpy(0.5, a.data(), out.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == b[i] + 0.5 * a[i]);

    out = b;
    kernels::mul_add(a.data(), b.data(), out.data(), n, 2.0);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(out[i] == doctest::Approx(b[i] + 2.0 * a[i] * b[i]));

    out = a;
    kernels::add_scalar(3.0, out.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == a[i] + 3.0);
}

TEST_CASE("activation kernels and their fused backward accumulators") {
    const std::vector<double> a = {-2.0, -0.0, 0.0, 1e-300, 0.5, 3.0};
    const std::size_t n = a.size();
    std::vector<double> out(n);

    kernels::relu(a.data(), out.data(), n);
    const std::vector<double> relu_want = {0.0, 0.0, 0.0, 1e-300, 0.5, 3.0};
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == relu_want[i]);

    // Subgradient at exactly 0 is 0: the mask is the strict a > 0 indicator.
    kernels::relu_mask(a.data(), out.data(), n);
    const std::vector<double> mask_want = {0.0, 0.0, 0.0, 1.0, 1.0, 1.0};
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == mask_want[i]);

    const std::vector<double> gc = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    std::vector<double> ga(n, 10.0);
    kernels::relu_grad_add(a.data(), gc.data(), ga.data(), n);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(ga[i] == 10.0 + mask_want[i] * gc[i]);

    kernels::tanh_map(a.data(), out.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == std::tanh(a[i]));

    std::vector<double> z = out, gt(n, 1.0);
    kernels::tanh_grad_add(z.data(), gc.data(), gt.data(), n);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(gt[i] == doctest::Approx(1.0 + gc[i] * (1.0 - z[i] * z[i])));
}

TEST_CASE("reductions match naive accumulation") {
    Rng rng(17);
    const std::size_t n = 101;  // not a multiple of the unroll width
    const std::vector<double> a = randv(n, rng);
    const std::vector<double> b = randv(n, rng);
    double want_sum = 0.0, want_dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        want_sum += a[i];
        want_dot += a[i] * b[i];
    }
    CHECK(kernels::sum(a.data(), n) == doctest::Approx(want_sum).epsilon(1e-13));
    CHECK(kernels::dot(a.data(), b.data(), n) ==
          doctest::Approx(want_dot).epsilon(1e-13));
}
