#include "acl/objectives.hpp"

#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "acl/error.hpp"
#include "acl/kernels.hpp"

namespace acl {

namespace {

constexpr double kPi = 3.14159265358979323846;

LossValue make_loss(Tensor value) {
    LossValue lv;
    lv.number = value.item();
    lv.value = std::move(value);
    return lv;
}

void check_scores(const Tensor& s, const char* who) {
    if (s.empty())
        throw ArgumentError(std::string(who) + ": empty score batch");
    if (s.cols() != 1)
        throw DimensionError(std::string(who) + ": scores must be batch x 1, got " +
                             std::to_string(s.rows()) + "x" +
                             std::to_string(s.cols()));
}

// Sinusoid grid shared by every constraint evaluation with the same
// (length, period range): basis rows plus the moments the closed-form
// amplitude needs.
struct SinusoidGrid {
    int n = 0;
    std::vector<std::vector<double>> s;  // one basis per (period, phase)
    std::vector<double> mean_s;
    std::vector<double> ss;      // <s, s>
    std::vector<double> css;     // <s - mean, s - mean>
};

const SinusoidGrid& sinusoid_grid(int n, double pmin, double pmax) {
    static std::map<std::tuple<int, double, double>, SinusoidGrid> cache;
    auto key = std::make_tuple(n, pmin, pmax);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    constexpr int kPhaseSteps = 64;
    constexpr double kPeriodStep = 0.125;
    SinusoidGrid g;
    g.n = n;
    const int psteps =
        static_cast<int>(std::floor((pmax - pmin) / kPeriodStep)) + 1;
    for (int pi = 0; pi < psteps; ++pi) {
        const double period = pmin + kPeriodStep * pi;
        for (int qi = 0; qi < kPhaseSteps; ++qi) {
            const double phase = 2.0 * kPi * qi / kPhaseSteps;
            std::vector<double> s(n);
            for (int t = 0; t < n; ++t)
                s[t] = std::sin(2.0 * kPi * t / period + phase);
            const double sum = kernels::sum(s.data(), n);
            const double mean = sum / n;
            const double ss = kernels::dot(s.data(), s.data(), n);
            g.mean_s.push_back(mean);
            g.ss.push_back(ss);
            g.css.push_back(ss - n * mean * mean);
            g.s.push_back(std::move(s));
        }
    }
    return cache.emplace(key, std::move(g)).first->second;
}

}  // namespace

LossValue supervised_loss(const Tensor& pred, const Tensor& target) {
    if (pred.empty() || target.empty())
        throw ArgumentError("supervised_loss: empty batch");
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw DimensionError("supervised_loss: prediction " +
                             std::to_string(pred.rows()) + "x" +
                             std::to_string(pred.cols()) + " vs target " +
                             std::to_string(target.rows()) + "x" +
                             std::to_string(target.cols()));
    return make_loss(mean(square(sub(pred, target))));
}

LossValue critic_objective(const Tensor& real_scores,
                           const Tensor& fake_scores) {
    check_scores(real_scores, "critic_objective");
    check_scores(fake_scores, "critic_objective");
    return make_loss(sub(mean(real_scores), mean(fake_scores)));
}

LossValue generator_objective(const Tensor& fake_scores) {
    check_scores(fake_scores, "generator_objective");
    return make_loss(scale(mean(fake_scores), -1.0));
}

Tensor gp_interpolate(const Tensor& real, const Tensor& fake,
                      const std::vector<double>& eps) {
    if (real.rows() != fake.rows() || real.cols() != fake.cols())
        throw DimensionError("gp_interpolate: real " +
                             std::to_string(real.rows()) + "x" +
                             std::to_string(real.cols()) + " vs fake " +
                             std::to_string(fake.rows()) + "x" +
                             std::to_string(fake.cols()));
    if (eps.size() != static_cast<std::size_t>(real.rows()))
        throw DimensionError("gp_interpolate: need one eps per row");
    Tensor out(real.rows(), real.cols());
    for (int i = 0; i < real.rows(); ++i) {
        const double e = eps[i];
        for (int jc = 0; jc < real.cols(); ++jc)
            out.at(i, jc) =
                e * real.at(i, jc) + (1.0 - e) * fake.at(i, jc);
    }
    return out;
}

LossValue gradient_penalty_at(const Mlp& critic, const Tensor& yhat,
                              double lambda) {
    if (lambda < 0.0)
        throw ArgumentError("gradient_penalty: lambda must be >= 0");
    TracedForward tf = mlp_forward_traced(critic, yhat);
    Tensor g = mlp_input_gradient(critic, tf);
    Tensor norms = row_norm(g);
    Tensor dev = sub(norms, Tensor::ones(norms.rows(), 1));
    return make_loss(scale(mean(square(dev)), lambda));
}

LossValue gradient_penalty(const Mlp& critic, const Tensor& real,
                           const Tensor& fake, double lambda, Rng& rng) {
    std::vector<double> eps(real.rows());
    for (double& e : eps) e = rng.uniform();
    return gradient_penalty_at(critic, gp_interpolate(real, fake, eps),
                               lambda);
}

LossValue semi_supervised_loss(const LossValue& adv, const LossValue& sup,
                               double alpha) {
    if (alpha < 0.0)
        throw ArgumentError("semi_supervised_loss: alpha must be >= 0");
    return make_loss(add(adv.value, scale(sup.value, alpha)));
}

LossValue pendulum_constraint_batch(const Tensor& windows, double period_min,
                                    double period_max) {
    if (windows.empty())
        throw ArgumentError("pendulum_constraint: empty batch");
    const int n = windows.cols();
    const int b = windows.rows();
    if (n < 4)
        throw ArgumentError("pendulum_constraint: window length " +
                            std::to_string(n) + " is too short to fit (need >= 4)");
    if (!(period_min > 0.0) || !(period_min <= period_max))
        throw ArgumentError("pendulum_constraint: bad period range");
    const SinusoidGrid& grid = sinusoid_grid(n, period_min, period_max);

    Tensor dres(b, n);
    double total = 0.0;
    for (int i = 0; i < b; ++i) {
        const double* y = windows.data() + static_cast<std::size_t>(i) * n;
        const double sum_y = kernels::sum(y, n);
        // Grid search on the expanded residual, then one direct recompute at
        // the winning point so the reported value cannot go negative by
        // cancellation.
        int best = 0;
        double best_res = 0.0, best_amp = 0.0;
        bool first = true;
        const double yy = kernels::dot(y, y, n);
        for (std::size_t k = 0; k < grid.s.size(); ++k) {
            const double ys = kernels::dot(y, grid.s[k].data(), n);
            const double cys = ys - grid.mean_s[k] * sum_y;
            const double amp = grid.css[k] > 1e-12 ? cys / grid.css[k] : 0.0;
            const double res = yy - 2.0 * amp * ys + amp * amp * grid.ss[k];
            if (first || res < best_res) {
                first = false;
                best = static_cast<int>(k);
                best_res = res;
                best_amp = amp;
            }
        }
        const double* s = grid.s[best].data();
        double res = 0.0;
        double* gr = dres.data() + static_cast<std::size_t>(i) * n;
        for (int t = 0; t < n; ++t) {
            const double d = y[t] - best_amp * s[t];
            res += d * d;
            gr[t] = 2.0 * d / (static_cast<double>(n) * b);
        }
        total += res / n;
    }
    return make_loss(custom_scalar(windows, total / b, std::move(dres)));
}

LossValue handcrafted_pendulum_constraint(const Tensor& traj,
                                          double period_min,
                                          double period_max) {
    if (traj.empty())
        throw ArgumentError("pendulum_constraint: empty trajectory");
    if (traj.cols() != 1)
        throw DimensionError("pendulum_constraint: trajectory must be n x 1");
    if (traj.rows() < 4)
        throw ArgumentError("pendulum_constraint: trajectory length " +
                            std::to_string(traj.rows()) + " too short (need >= 4)");
    return pendulum_constraint_batch(reshape(traj, 1, traj.rows()),
                                     period_min, period_max);
}

}  // namespace acl
