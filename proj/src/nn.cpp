#include "acl/nn.hpp"

#include <cmath>
#include <utility>

#include "acl/error.hpp"

namespace acl {

std::string act_name(Act a) {
    switch (a) {
        case Act::Identity: return "identity";
        case Act::Relu: return "relu";
        case Act::Tanh: return "tanh";
    }
    return "identity";
}

Act act_from_name(const std::string& s) {
    if (s == "identity") return Act::Identity;
    if (s == "relu") return Act::Relu;
    if (s == "tanh") return Act::Tanh;
    throw ParseError("unknown activation '" + s + "'");
}

void MlpConfig::validate() const {
    if (widths.size() < 3)
        throw ConfigError("mlp needs at least one hidden layer, got " +
                          std::to_string(widths.size()) + " widths");
    for (int w : widths)
        if (w < 1)
            throw ConfigError("mlp widths must be >= 1, got " +
                              std::to_string(w));
}

std::vector<Tensor> Mlp::params() const {
    std::vector<Tensor> out;
    out.reserve(weights.size() * 2);
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(weights[l]);
        out.push_back(biases[l]);
    }
    return out;
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const Tensor& w : weights) n += w.size();
    for (const Tensor& b : biases) n += b.size();
    return n;
}

Mlp init_params(const MlpConfig& cfg, Rng& rng) {
    cfg.validate();
    Mlp m;
    m.cfg = cfg;
    for (std::size_t l = 0; l + 1 < cfg.widths.size(); ++l) {
        const int fan_in = cfg.widths[l];
        const int fan_out = cfg.widths[l + 1];
        Tensor w(fan_out, fan_in);
        const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (double& v : w.values()) v = rng.normal(0.0, sd);
        w.set_requires_grad(true);
        Tensor b(1, fan_out);
        b.set_requires_grad(true);
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    return m;
}

namespace {

Tensor apply_act(Act a, const Tensor& x) {
    switch (a) {
        case Act::Identity: return x;
        case Act::Relu: return relu(x);
        case Act::Tanh: return tanh(x);
    }
    return x;
}

void check_input_width(const Mlp& m, const Tensor& x, const char* who) {
    if (x.cols() != m.cfg.input_width())
        throw DimensionError(std::string(who) + ": input has " +
                             std::to_string(x.cols()) + " columns, model expects " +
                             std::to_string(m.cfg.input_width()));
}

}  // namespace

Tensor mlp_forward(const Mlp& m, const Tensor& x) {
    check_input_width(m, x, "mlp_forward");
    Tensor z = x;
    const std::size_t L = m.weights.size();
    for (std::size_t l = 0; l < L; ++l) {
        Tensor a = add_row(matmul_bt(z, m.weights[l]), m.biases[l]);
        z = apply_act(l + 1 < L ? m.cfg.hidden : m.cfg.output, a);
    }
    return z;
}

TracedForward mlp_forward_traced(const Mlp& m, const Tensor& x) {
    check_input_width(m, x, "mlp_forward_traced");
    TracedForward tf;
    Tensor z = x;
    const std::size_t L = m.weights.size();
    for (std::size_t l = 0; l < L; ++l) {
        Tensor a = add_row(matmul_bt(z, m.weights[l]), m.biases[l]);
        z = apply_act(l + 1 < L ? m.cfg.hidden : m.cfg.output, a);
        tf.pre.push_back(a);
        tf.post.push_back(z);
    }
    tf.out = z;
    return tf;
}

Tensor mlp_input_gradient(const Mlp& m, const TracedForward& tf) {
    if (m.cfg.output_width() != 1 || m.cfg.output != Act::Identity)
        throw ArgumentError(
            "mlp_input_gradient needs a scalar identity output head");
    if (m.cfg.hidden != Act::Relu && m.cfg.hidden != Act::Tanh)
        throw ArgumentError(
            "mlp_input_gradient supports relu or tanh hidden units");
    const std::size_t L = m.weights.size();
    if (tf.pre.size() != L)
        throw ArgumentError("traced forward does not match the model");
    const int batch = tf.out.rows();
    // u holds d(out)/d(pre-activation of layer l), walking from the head down.
    Tensor u = Tensor::ones(batch, 1);
    for (std::size_t l = L - 1; l >= 1; --l) {
        Tensor t = matmul(u, m.weights[l]);
        if (m.cfg.hidden == Act::Relu) {
            u = mul(t, relu_mask(tf.pre[l - 1]));
        } else {
            Tensor dz = sub(Tensor::ones(t.rows(), t.cols()),
                            square(tf.post[l - 1]));
            u = mul(t, dz);
        }
    }
    return matmul(u, m.weights[0]);
}

std::vector<double> flatten_params(const Mlp& m) {
    std::vector<double> out;
    out.reserve(m.param_count());
    for (const Tensor& p : m.params())
        out.insert(out.end(), p.values().begin(), p.values().end());
    return out;
}

std::vector<double> flatten_grads(const Mlp& m) {
    std::vector<double> out;
    out.reserve(m.param_count());
    for (const Tensor& p : m.params())
        out.insert(out.end(), p.grad().begin(), p.grad().end());
    return out;
}

void unflatten_params(Mlp& m, const std::vector<double>& theta) {
    if (theta.size() != m.param_count())
        throw DimensionError("unflatten_params: " + std::to_string(theta.size()) +
                             " values for " + std::to_string(m.param_count()) +
                             " parameters");
    std::size_t off = 0;
    for (Tensor p : m.params()) {
        std::copy(theta.begin() + off, theta.begin() + off + p.size(),
                  p.values().begin());
        off += p.size();
    }
}

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    for (const Tensor& p : params_) {
        if (!p.requires_grad())
            throw StateError("adam: parameter does not track gradients");
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Tensor& p = params_[k];
        const std::vector<double>& g = p.grad();
        if (g.size() != p.size())
            throw DimensionError("adam: gradient size mismatch");
        std::vector<double>& m = m_[k];
        std::vector<double>& v = v_[k];
        double* w = p.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            const double decay = cfg_.weight_decay * w[i];
            w[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + decay);
        }
    }
}

nlohmann::json mlp_to_json(const Mlp& m) {
    nlohmann::json j;
    j["format"] = "acl-mlp";
    j["version"] = 1;
    j["widths"] = m.cfg.widths;
    j["hidden"] = act_name(m.cfg.hidden);
    j["output"] = act_name(m.cfg.output);
    nlohmann::json ws = nlohmann::json::array();
    nlohmann::json bs = nlohmann::json::array();
    for (const Tensor& w : m.weights) ws.push_back(w.values());
    for (const Tensor& b : m.biases) bs.push_back(b.values());
    j["weights"] = std::move(ws);
    j["biases"] = std::move(bs);
    return j;
}

Mlp mlp_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "acl-mlp")
            throw ParseError("checkpoint: unexpected format tag");
        if (j.at("version").get<int>() != 1)
            throw ParseError("checkpoint: unsupported version");
        MlpConfig cfg;
        cfg.widths = j.at("widths").get<std::vector<int>>();
        cfg.hidden = act_from_name(j.at("hidden").get<std::string>());
        cfg.output = act_from_name(j.at("output").get<std::string>());
        cfg.validate();
        Mlp m;
        m.cfg = cfg;
        const auto& ws = j.at("weights");
        const auto& bs = j.at("biases");
        if (ws.size() != cfg.widths.size() - 1 || bs.size() != ws.size())
            throw ParseError("checkpoint: layer count mismatch");
        for (std::size_t l = 0; l + 1 < cfg.widths.size(); ++l) {
            Tensor w(cfg.widths[l + 1], cfg.widths[l],
                     ws[l].get<std::vector<double>>());
            Tensor b(1, cfg.widths[l + 1], bs[l].get<std::vector<double>>());
            w.set_requires_grad(true);
            b.set_requires_grad(true);
            m.weights.push_back(std::move(w));
            m.biases.push_back(std::move(b));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    } catch (const DimensionError& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

}  // namespace acl
