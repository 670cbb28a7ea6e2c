#include <cmath>
#include <vector>

#include "acl/error.hpp"
#include "acl/nn.hpp"
#include "acl/objectives.hpp"
#include "acl/rng.hpp"
#include "acl/tensor.hpp"
#include "vendor/doctest.h"

using namespace acl;

namespace {
constexpr double kPi = 3.14159265358979323846;

// Two-layer relu MLP acting as the linear map y -> slope * y for positive
// pre-activations: hidden = relu(a*y + c) with c large enough to stay
// active, out = b*hidden + d. Gradient d(out)/dy == a*b wherever active.
Mlp linear_critic(double a, double b, double c) {
    MlpConfig cfg;
    cfg.widths = {1, 1, 1};
    Mlp m;
    m.cfg = cfg;
    m.weights = {Tensor(1, 1, {a}), Tensor(1, 1, {b})};
    m.biases = {Tensor(1, 1, {c}), Tensor(1, 1, {0.0})};
    for (Tensor& t : m.weights) t.set_requires_grad(true);
    for (Tensor& t : m.biases) t.set_requires_grad(true);
    return m;
}

}  // namespace

TEST_CASE("supervised loss is the mean squared error") {
    Tensor pred(2, 2, {1.0, 2.0, 3.0, 4.0});
    Tensor target(2, 2, {0.0, 2.0, 3.0, 2.0});
    LossValue lv = supervised_loss(pred, target);
    CHECK(lv.number == doctest::Approx((1.0 + 0.0 + 0.0 + 4.0) / 4.0));
    CHECK(lv.value.item() == lv.number);
    CHECK_THROWS_AS(supervised_loss(pred, Tensor(2, 1)), DimensionError);
    CHECK_THROWS_AS(supervised_loss(Tensor(0, 2), Tensor(0, 2)), ArgumentError);
}

TEST_CASE("critic and generator objectives") {
    Tensor real(3, 1, {1.0, 2.0, 3.0});
    Tensor fake(2, 1, {0.5, 1.5});
    LossValue c = critic_objective(real, fake);
    CHECK(c.number == doctest::Approx(2.0 - 1.0));
    LossValue g = generator_objective(fake);
    CHECK(g.number == doctest::Approx(-1.0));
    CHECK_THROWS_AS(critic_objective(Tensor(0, 1), fake), ArgumentError);
    CHECK_THROWS_AS(generator_objective(Tensor(0, 1)), ArgumentError);
}

TEST_CASE("supervised loss gradient flows to predictions") {
    Tensor pred(1, 2, {2.0, -1.0});
    pred.set_requires_grad(true);
    Tensor target(1, 2, {0.0, 0.0});
    {
        Tape tape;
        backward(supervised_loss(pred, target).value);
    }
    // d mean((p-t)^2) / dp = 2(p-t)/n
    CHECK(pred.grad()[0] == doctest::Approx(2.0 * 2.0 / 2.0));
    CHECK(pred.grad()[1] == doctest::Approx(2.0 * -1.0 / 2.0));
}

TEST_CASE("gp_interpolate blends rows by their own eps") {
    Tensor real(2, 2, {1.0, 2.0, 3.0, 4.0});
    Tensor fake(2, 2, {0.0, 0.0, 1.0, 2.0});
    Tensor y = gp_interpolate(real, fake, {0.25, 1.0});
    CHECK(y.at(0, 0) == doctest::Approx(0.25));
    CHECK(y.at(0, 1) == doctest::Approx(0.5));
    CHECK(y.at(1, 0) == doctest::Approx(3.0));
    CHECK(y.at(1, 1) == doctest::Approx(4.0));
    CHECK_THROWS_AS(gp_interpolate(real, Tensor(1, 2), {0.5}), DimensionError);
    CHECK_THROWS_AS(gp_interpolate(real, fake, {0.5}), DimensionError);
}

TEST_CASE("gradient penalty value on an effectively linear critic") {
    // Critic output slope a*b = 3: penalty = lambda * (|3| - 1)^2 = 4*lambda.
    Mlp critic = linear_critic(1.5, 2.0, 100.0);
    Tensor yhat(4, 1, {-1.0, 0.0, 0.5, 2.0});  // all keep the unit active
    LossValue gp = gradient_penalty_at(critic, yhat, 10.0);
    CHECK(gp.number == doctest::Approx(10.0 * 4.0).epsilon(1e-12));

    // Slope exactly 1 is penalty-free.
    Mlp unit = linear_critic(1.0, 1.0, 100.0);
    CHECK(gradient_penalty_at(unit, yhat, 10.0).number ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("gradient penalty parameter gradient matches finite differences") {
    Rng rng(31);
    MlpConfig cfg;
    cfg.widths = {2, 6, 6, 1};
    cfg.hidden = Act::Tanh;
    Mlp critic = init_params(cfg, rng);
    Tensor yhat(3, 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) yhat.at(i, j) = rng.normal();

    {
        Tape tape;
        backward(gradient_penalty_at(critic, yhat, 10.0).value);
    }
    const std::vector<double> grads = flatten_grads(critic);
    const double h = 1e-5;
    std::size_t idx = 0;
    for (Tensor& p : critic.params()) {
        for (std::size_t e = 0; e < p.size(); ++e, ++idx) {
            const double orig = p.data()[e];
            p.data()[e] = orig + h;
            const double fp = gradient_penalty_at(critic, yhat, 10.0).number;
            p.data()[e] = orig - h;
            const double fm = gradient_penalty_at(critic, yhat, 10.0).number;
            p.data()[e] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            CHECK(grads[idx] == doctest::Approx(fd).epsilon(1e-5).scale(
                                    std::max(1.0, std::fabs(fd))));
        }
    }
}

TEST_CASE("randomized gradient penalty reduces to the pointwise one") {
    // With real == fake every interpolate equals that point regardless of eps.
    Mlp critic = linear_critic(2.0, 1.0, 50.0);
    Tensor pt(3, 1, {0.1, 0.2, 0.3});
    Rng rng(32);
    LossValue a = gradient_penalty(critic, pt, pt, 7.0, rng);
    LossValue b = gradient_penalty_at(critic, pt, 7.0);
    CHECK(a.number == doctest::Approx(b.number).epsilon(1e-12));
}

TEST_CASE("semi-supervised loss combines terms linearly") {
    Tensor a = Tensor::scalar(2.0);
    Tensor s = Tensor::scalar(3.0);
    LossValue adv{a, 2.0}, sup{s, 3.0};
    LossValue total = semi_supervised_loss(adv, sup, 10.0);
    CHECK(total.number == doctest::Approx(32.0));
    CHECK(total.value.item() == doctest::Approx(32.0));
}

TEST_CASE("pendulum constraint: zero on on-grid sinusoids") {
    const int n = 20;
    const double T = 12.0;             // on the period grid
    const double phi = 2.0 * kPi * 5 / 64;  // on the phase grid
    Tensor w(2, n);
    for (int t = 0; t < n; ++t) {
        w.at(0, t) = 0.8 * std::sin(2.0 * kPi * t / T + phi);
        w.at(1, t) = 1.3 * std::sin(2.0 * kPi * t / T + phi);
    }
    LossValue lv = pendulum_constraint_batch(w);
    CHECK(lv.number == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("pendulum constraint: constant windows cost their square") {
    const int n = 16;
    for (double c : {0.5, -1.0}) {
        Tensor w = Tensor::full(1, n, c);
        LossValue lv = pendulum_constraint_batch(w);
        // The centered projection gives a constant window amplitude exactly
        // 0, so the residual is exactly c^2.
        CHECK(lv.number == doctest::Approx(c * c).epsilon(1e-12));
    }
}

TEST_CASE("pendulum constraint: noisy sinusoid costs about the noise power") {
    const int n = 64;
    const double sigma = 0.25;
    Rng rng(33);
    Tensor w(4, n);
    for (int b = 0; b < 4; ++b) {
        const double T = 10.0 + 0.125 * rng.uniform_int(33);  // on-grid
        const double phi = 2.0 * kPi * rng.uniform_int(64) / 64.0;
        for (int t = 0; t < n; ++t)
            w.at(b, t) = std::sin(2.0 * kPi * t / T + phi) +
                         sigma * rng.normal();
    }
    LossValue lv = pendulum_constraint_batch(w);
    // Expected residual = sigma^2 up to both sampling noise and the fit
    // absorbing a little of it.
    CHECK(lv.number > 0.6 * sigma * sigma);
    CHECK(lv.number < 1.3 * sigma * sigma);
}

TEST_CASE("pendulum constraint gradient vanishes at a perfect fit") {
    const int n = 24;
    Tensor w(1, n);
    w.set_requires_grad(true);
    const double T = 11.0, phi = 2.0 * kPi * 17 / 64;
    for (int t = 0; t < n; ++t)
        w.at(0, t) = 0.9 * std::sin(2.0 * kPi * t / T + phi);
    {
        Tape tape;
        backward(pendulum_constraint_batch(w).value);
    }
    for (double g : w.grad()) CHECK(std::fabs(g) < 1e-8);
}

TEST_CASE("pendulum constraint gradient is the scaled residual") {
    // Fitted parameters are constants, so d(loss)/dy = 2 (y - A s) / (n B).
    // At a perturbed perfect fit the residual is the perturbation itself as
    // long as the winning grid point stays put.
    const int n = 32;
    const double T = 12.5, phi = 2.0 * kPi * 9 / 64;
    Tensor w(1, n);
    w.set_requires_grad(true);
    for (int t = 0; t < n; ++t)
        w.at(0, t) = std::sin(2.0 * kPi * t / T + phi);
    Tensor clean(1, n);
    for (int t = 0; t < n; ++t) clean.at(0, t) = w.at(0, t);
    w.at(0, 3) += 0.05;

    {
        Tape tape;
        backward(pendulum_constraint_batch(w).value);
    }
    // Fit still matches the clean sinusoid: residual concentrated at t=3.
    for (int t = 0; t < n; ++t) {
        const double resid = w.at(0, t) - clean.at(0, t);
        CHECK(w.grad()[t] ==
              doctest::Approx(2.0 * resid / n).epsilon(0.05).scale(0.01));
    }

    CHECK_THROWS_AS(pendulum_constraint_batch(Tensor(1, 3)), ArgumentError);
    CHECK_THROWS_AS(handcrafted_pendulum_constraint(Tensor(3, 1)),
                    ArgumentError);
}

TEST_CASE("single-trajectory constraint agrees with the batch form") {
    const int n = 20;
    Rng rng(34);
    Tensor traj(n, 1);
    for (int t = 0; t < n; ++t) traj.at(t, 0) = rng.uniform(-1.0, 1.0);
    Tensor row(1, n);
    for (int t = 0; t < n; ++t) row.at(0, t) = traj.at(t, 0);
    CHECK(handcrafted_pendulum_constraint(traj).number ==
          doctest::Approx(pendulum_constraint_batch(row).number).epsilon(1e-12));
}
