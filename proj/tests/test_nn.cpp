#include <cmath>
#include <sstream>
#include <vector>

#include "acl/error.hpp"
#include "acl/nn.hpp"
#include "acl/rng.hpp"
#include "acl/tensor.hpp"
#include "vendor/doctest.h"

using namespace acl;

namespace {

MlpConfig small_cfg(std::vector<int> widths, Act hidden = Act::Relu) {
    MlpConfig cfg;
    cfg.widths = std::move(widths);
    cfg.hidden = hidden;
    return cfg;
}

Tensor randt(int r, int c, Rng& rng) {
    Tensor t(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) t.at(i, j) = rng.normal();
    return t;
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_THROWS_AS(small_cfg({4}).validate(), ConfigError);      // no hidden layer
    CHECK_THROWS_AS(small_cfg({4, 2}).validate(), ConfigError);   // still none
    CHECK_THROWS_AS(small_cfg({4, 0, 2}).validate(), ConfigError);
    CHECK_NOTHROW(small_cfg({4, 3, 2}).validate());
    CHECK(small_cfg({4, 3, 2}).input_width() == 4);
    CHECK(small_cfg({4, 3, 2}).output_width() == 2);
}

TEST_CASE("init_params: shapes, zero biases, He scale") {
    Rng rng(1);
    Mlp m = init_params(small_cfg({100, 300, 2}), rng);
    REQUIRE(m.weights.size() == 2);
    REQUIRE(m.biases.size() == 2);
    CHECK(m.weights[0].rows() == 300);  // [out x in]
    CHECK(m.weights[0].cols() == 100);
    CHECK(m.weights[1].rows() == 2);
    CHECK(m.weights[1].cols() == 300);
    CHECK(m.biases[0].rows() == 1);
    CHECK(m.biases[0].cols() == 300);

    for (const Tensor& b : m.biases)
        for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.data()[i] == 0.0);

    // W0 ~ N(0, 2/100): sample variance over 30000 entries should land
    // within a few percent.
    const Tensor& w = m.weights[0];
    double mean = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) mean += w.data()[i];
    mean /= static_cast<double>(w.size());
    double var = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double d = w.data()[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(w.size());
    CHECK(std::fabs(mean) < 0.005);
    CHECK(var == doctest::Approx(0.02).epsilon(0.08));

    CHECK(m.params().size() == 4);
    CHECK(m.param_count() == 100 * 300 + 300 + 300 * 2 + 2);
}

TEST_CASE("init_params is deterministic in the seed") {
    Rng r1(9), r2(9);
    Mlp a = init_params(small_cfg({5, 4, 3}), r1);
    Mlp b = init_params(small_cfg({5, 4, 3}), r2);
    CHECK(flatten_params(a) == flatten_params(b));
}

TEST_CASE("mlp_forward matches a hand-rolled loop") {
    Rng rng(2);
    for (Act act : {Act::Relu, Act::Tanh}) {
        Mlp m = init_params(small_cfg({3, 4, 2}, act), rng);
        const Tensor x = randt(5, 3, rng);
        const Tensor out = mlp_forward(m, x);
        REQUIRE(out.rows() == 5);
        REQUIRE(out.cols() == 2);
        for (int r = 0; r < 5; ++r) {
            double h[4];
            for (int j = 0; j < 4; ++j) {
                double acc = m.biases[0].at(0, j);
                for (int i = 0; i < 3; ++i)
                    acc += x.at(r, i) * m.weights[0].at(j, i);
                h[j] = act == Act::Relu ? (acc > 0 ? acc : 0) : std::tanh(acc);
            }
            for (int o = 0; o < 2; ++o) {
                double acc = m.biases[1].at(0, o);
                for (int j = 0; j < 4; ++j)
                    acc += h[j] * m.weights[1].at(o, j);
                CHECK(out.at(r, o) == doctest::Approx(acc).epsilon(1e-13));
            }
        }
    }
}

TEST_CASE("mlp_forward rejects width mismatch") {
    Rng rng(3);
    Mlp m = init_params(small_cfg({3, 4, 2}), rng);
    CHECK_THROWS_AS(mlp_forward(m, Tensor(5, 4)), DimensionError);
}

TEST_CASE("traced forward agrees with the plain one") {
    Rng rng(4);
    Mlp m = init_params(small_cfg({3, 5, 5, 1}, Act::Tanh), rng);
    const Tensor x = randt(4, 3, rng);
    TracedForward tf = mlp_forward_traced(m, x);
    const Tensor plain = mlp_forward(m, x);
    REQUIRE(tf.out.rows() == plain.rows());
    for (int i = 0; i < plain.rows(); ++i)
        CHECK(tf.out.at(i, 0) == plain.at(i, 0));
    CHECK(tf.pre.size() == m.weights.size());
    CHECK(tf.post.size() == m.weights.size());
}

TEST_CASE("mlp_input_gradient matches finite differences") {
    Rng rng(5);
    for (Act act : {Act::Tanh, Act::Relu}) {
        Mlp m = init_params(small_cfg({3, 8, 8, 1}, act), rng);
        Tensor x = randt(2, 3, rng);
        TracedForward tf = mlp_forward_traced(m, x);
        const Tensor g = mlp_input_gradient(m, tf);
        REQUIRE(g.rows() == 2);
        REQUIRE(g.cols() == 3);
        const double h = 1e-6;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 3; ++c) {
                const double orig = x.at(r, c);
                x.at(r, c) = orig + h;
                const double fp = mlp_forward(m, x).at(r, 0);
                x.at(r, c) = orig - h;
                const double fm = mlp_forward(m, x).at(r, 0);
                x.at(r, c) = orig;
                // Relu units sit at kinks with probability 0 for random
                // Gaussian inputs; 1e-5 absolute covers the fd noise.
                CHECK(g.at(r, c) ==
                      doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-4));
            }
    }
}

TEST_CASE("adam follows the scalar recurrence") {
    Tensor p(1, 1, {1.0});
    p.set_requires_grad(true);
    AdamConfig cfg;
    cfg.lr = 0.1;
    cfg.beta1 = 0.5;
    cfg.beta2 = 0.9;
    cfg.eps = 1e-8;
    Adam opt({p}, cfg);

    const std::vector<double> grads = {0.3, -0.2, 0.7};
    double w = 1.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 3; ++t) {
        const double g = grads[t - 1];
        p.grad()[0] = g;
        opt.step();
        m = cfg.beta1 * m + (1 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
        const double mhat = m / (1 - std::pow(cfg.beta1, t));
        const double vhat = v / (1 - std::pow(cfg.beta2, t));
        w -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        CHECK(p.data()[0] == doctest::Approx(w).epsilon(1e-15));
    }
    CHECK(opt.t() == 3);
}

TEST_CASE("adam weight decay is decoupled from the moment estimates") {
    Tensor p(1, 1, {2.0});
    p.set_requires_grad(true);
    AdamConfig cfg;
    cfg.lr = 0.01;
    cfg.weight_decay = 0.5;
    Adam opt({p}, cfg);
    p.grad()[0] = 0.0;  // zero gradient: only the decay term moves the weight
    opt.step();
    CHECK(p.data()[0] == doctest::Approx(2.0 - 0.01 * 0.5 * 2.0).epsilon(1e-15));
}

TEST_CASE("adam with lr 0 freezes parameters") {
    Rng rng(6);
    Mlp m = init_params(small_cfg({3, 4, 2}), rng);
    const std::vector<double> before = flatten_params(m);
    AdamConfig cfg;
    cfg.lr = 0.0;
    Adam opt(m.params(), cfg);
    for (Tensor& t : m.weights)
        for (double& g : t.grad()) g = 1.0;
    for (Tensor& t : m.biases)
        for (double& g : t.grad()) g = 1.0;
    opt.step();
    CHECK(flatten_params(m) == before);
}

TEST_CASE("flatten and unflatten round-trip") {
    Rng rng(7);
    Mlp m = init_params(small_cfg({3, 4, 2}), rng);
    std::vector<double> theta = flatten_params(m);
    REQUIRE(theta.size() == m.param_count());
    for (double& x : theta) x += 1.0;
    unflatten_params(m, theta);
    CHECK(flatten_params(m) == theta);
    theta.pop_back();
    CHECK_THROWS_AS(unflatten_params(m, theta), DimensionError);
}

TEST_CASE("json round-trip preserves parameters bitwise") {
    Rng rng(8);
    Mlp m = init_params(small_cfg({3, 4, 2}, Act::Tanh), rng);
    nlohmann::json j = mlp_to_json(m);
    Mlp back = mlp_from_json(j);
    CHECK(back.cfg.widths == m.cfg.widths);
    CHECK(back.cfg.hidden == Act::Tanh);
    CHECK(flatten_params(back) == flatten_params(m));

    // Restored parameters must be trainable leaves.
    for (const Tensor& w : back.weights) CHECK(w.requires_grad());

    SUBCASE("tampered format tag") {
        j["format"] = "other";
        CHECK_THROWS_AS(mlp_from_json(j), ParseError);
    }
    SUBCASE("wrong weight count") {
        j["weights"].erase(0);
        CHECK_THROWS_AS(mlp_from_json(j), ParseError);
    }
    SUBCASE("unknown activation name") {
        j["hidden"] = "gelu";
        CHECK_THROWS_AS(mlp_from_json(j), ParseError);
    }
}
