#pragma once

#include <string>
#include <vector>

#include "acl/rng.hpp"
#include "acl/tensor.hpp"
#include "vendor/json.hpp"

namespace acl {

enum class Act { Identity, Relu, Tanh };

std::string act_name(Act a);
Act act_from_name(const std::string& s);

struct MlpConfig {
    // widths[0] is the input width, widths.back() the output width.
    std::vector<int> widths;
    Act hidden = Act::Relu;
    Act output = Act::Identity;

    int input_width() const { return widths.front(); }
    int output_width() const { return widths.back(); }
    // Throws ConfigError unless there is at least one hidden layer and every
    // width is positive.
    void validate() const;
};

// Weights are stored [out x in] so the forward pass is x W^T + b.
struct Mlp {
    MlpConfig cfg;
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;

    // All learnable tensors, interleaved W0, b0, W1, b1, ...
    std::vector<Tensor> params() const;
    std::size_t param_count() const;
};

// He initialization: W ~ Normal(0, sqrt(2 / fan_in)), biases zero.
Mlp init_params(const MlpConfig& cfg, Rng& rng);

// x is [batch x input_width]; DimensionError on width mismatch.
Tensor mlp_forward(const Mlp& m, const Tensor& x);

// Forward pass that keeps per-layer pre- and post-activation tensors so the
// input gradient can be rebuilt as a recorded graph afterwards.
struct TracedForward {
    Tensor out;
    std::vector<Tensor> pre;   // pre[l]: activations entering layer l's nonlinearity
    std::vector<Tensor> post;  // post[l]: output of layer l; post.back() == out
};
TracedForward mlp_forward_traced(const Mlp& m, const Tensor& x);

// d(sum of outputs)/d(input row), one row per batch row, built from recorded
// ops so that it stays differentiable w.r.t. the weights. Requires a scalar
// identity output head and Relu or Tanh hidden units. For Relu the activation
// second derivative is zero almost everywhere, so treating the mask as a
// constant yields the exact parameter gradient a.e.; for Tanh the full chain
// is recorded.
Tensor mlp_input_gradient(const Mlp& m, const TracedForward& tf);

// Flat parameter vector round-trip, layer order W0, b0, W1, b1, ...
std::vector<double> flatten_params(const Mlp& m);
std::vector<double> flatten_grads(const Mlp& m);
void unflatten_params(Mlp& m, const std::vector<double>& theta);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.0;
    double beta2 = 0.9;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled L2
};

// Holds moment buffers for a fixed parameter list and updates the parameters
// in place from their grad buffers.
class Adam {
  public:
    Adam(std::vector<Tensor> params, AdamConfig cfg);
    void step();
    int t() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

  private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    AdamConfig cfg_;
    int t_ = 0;
};

// Checkpoint serialization: versioned JSON with full float64 round-trip.
nlohmann::json mlp_to_json(const Mlp& m);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace acl
