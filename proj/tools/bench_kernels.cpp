// Times the parallel matrix kernels against their serial reference
// implementations on MLP-shaped workloads and verifies bitwise agreement.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <vector>

#include "acl/kernels.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_per_call(const std::function<void()>& f, int reps) {
    f();  // warm up
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) f();
    const auto t1 = Clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

std::vector<double> randu(std::size_t n, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = d(gen);
    return v;
}

struct Case {
    const char* name;
    int m, k, n;
};

}  // namespace

int main() {
    std::mt19937_64 gen(7);
    // Shapes from the experiments: 1024-pixel input layer, 64-unit hidden
    // layers, window-sized batches.
    const Case cases[] = {
        {"input layer   (120x1024 * 1024x64)", 120, 1024, 64},
        {"hidden layer  (120x64 * 64x64)", 120, 64, 64},
        {"batch grads   (1024x120 * 120x64)", 1024, 120, 64},
        {"wide batch    (512x1024 * 1024x64)", 512, 1024, 64},
    };
    std::printf("%-38s %12s %12s %8s %s\n", "case", "serial (us)",
                "parallel (us)", "speedup", "bitwise");
    for (const Case& c : cases) {
        const std::vector<double> a = randu(static_cast<std::size_t>(c.m) * c.k, gen);
        const std::vector<double> b = randu(static_cast<std::size_t>(c.k) * c.n, gen);
        std::vector<double> out_s(static_cast<std::size_t>(c.m) * c.n);
        std::vector<double> out_p(out_s.size());
        const double work = static_cast<double>(c.m) * c.k * c.n;
        const int reps = work > 5e7 ? 5 : 50;
        const double ts = seconds_per_call(
            [&]() { acl::kernels::matmul_serial(a.data(), b.data(), out_s.data(),
                                                c.m, c.k, c.n); },
            reps);
        const double tp = seconds_per_call(
            [&]() { acl::kernels::matmul(a.data(), b.data(), out_p.data(),
                                         c.m, c.k, c.n); },
            reps);
        const bool same = std::memcmp(out_s.data(), out_p.data(),
                                      out_s.size() * sizeof(double)) == 0;
        std::printf("%-38s %12.1f %12.1f %7.2fx %s\n", c.name, ts * 1e6,
                    tp * 1e6, ts / tp, same ? "yes" : "NO");
        if (!same) return 1;
    }
    return 0;
}
