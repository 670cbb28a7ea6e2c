#include "acl/tensor.hpp"

#include <atomic>
#include <cmath>
#include <string>
#include <utility>

#include "acl/error.hpp"
#include "acl/kernels.hpp"

namespace acl {

namespace {

thread_local Tape* g_current_tape = nullptr;
std::atomic<std::uint64_t> g_next_epoch{1};

std::string shape_str(const Tensor& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require_nonempty(const Tensor& t, const char* who) {
    if (t.empty())
        throw DimensionError(std::string(who) + ": empty tensor operand");
#ifdef ACL_CHECK_FINITE
    for (double v : t.values())
        if (!std::isfinite(v))
            throw NumericError(std::string(who) + ": non-finite operand value");
#endif
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    require_nonempty(a, who);
    require_nonempty(b, who);
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(who) + ": shape mismatch " +
                             shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

Tensor::Tensor(int rows, int cols) {
    if (rows <= 0 || cols <= 0)
        throw DimensionError("tensor dimensions must be positive, got " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    rows_ = rows;
    cols_ = cols;
    data_ = std::make_shared<std::vector<double>>(
        static_cast<std::size_t>(rows) * cols, 0.0);
}

Tensor::Tensor(int rows, int cols, std::vector<double> values) {
    if (rows <= 0 || cols <= 0)
        throw DimensionError("tensor dimensions must be positive, got " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    if (values.size() != static_cast<std::size_t>(rows) * cols)
        throw DimensionError("tensor init: " + std::to_string(values.size()) +
                             " values for a " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " tensor");
    rows_ = rows;
    cols_ = cols;
    data_ = std::make_shared<std::vector<double>>(std::move(values));
}

Tensor Tensor::scalar(double v) { return Tensor(1, 1, {v}); }

Tensor Tensor::ones(int rows, int cols) { return full(rows, cols, 1.0); }

Tensor Tensor::full(int rows, int cols, double v) {
    Tensor t(rows, cols);
    std::fill(t.data_->begin(), t.data_->end(), v);
    return t;
}

double Tensor::at(int i, int j) const {
    require_nonempty(*this, "at");
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
        throw ArgumentError("index (" + std::to_string(i) + "," +
                            std::to_string(j) + ") out of range for " +
                            shape_str(*this));
    return (*data_)[static_cast<std::size_t>(i) * cols_ + j];
}

double& Tensor::at(int i, int j) {
    require_nonempty(*this, "at");
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
        throw ArgumentError("index (" + std::to_string(i) + "," +
                            std::to_string(j) + ") out of range for " +
                            shape_str(*this));
    return (*data_)[static_cast<std::size_t>(i) * cols_ + j];
}

double Tensor::item() const {
    require_nonempty(*this, "item");
    if (rows_ != 1 || cols_ != 1)
        throw RankError("item: tensor is " + shape_str(*this) + ", not 1x1");
    return (*data_)[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
    require_nonempty(*this, "set_requires_grad");
    requires_grad_ = on;
    if (on && !grad_)
        grad_ = std::make_shared<std::vector<double>>(data_->size(), 0.0);
    if (!on) grad_.reset();
    return *this;
}

const std::vector<double>& Tensor::grad() const {
    if (!requires_grad_ || !grad_)
        throw StateError("grad: tensor does not track gradients");
    return *grad_;
}

std::vector<double>& Tensor::grad() {
    if (!requires_grad_ || !grad_)
        throw StateError("grad: tensor does not track gradients");
    return *grad_;
}

Tape::Tape() {
    if (g_current_tape)
        throw StateError("a computation record is already active on this thread");
    epoch_ = g_next_epoch.fetch_add(1);
    g_current_tape = this;
}

Tape::~Tape() {
    if (g_current_tape == this) g_current_tape = nullptr;
}

Tape* Tape::current() { return g_current_tape; }

void Tape::check_open() const {
    if (consumed_)
        throw StateError("computation record already consumed by backward");
}

int Tape::node_of(const Tensor& t) {
    if (t.tape_epoch_ == epoch_ && t.node_ >= 0) return t.node_;
    auto it = leaf_ids_.find(static_cast<const void*>(t.data_.get()));
    if (it != leaf_ids_.end()) {
        t.tape_epoch_ = epoch_;
        t.node_ = it->second;
        return it->second;
    }
    NodeData nd;
    nd.op = Op::Leaf;
    nd.value = t;
    nd.requires_grad = t.requires_grad();
    const int id = static_cast<int>(nodes_.size());
    leaf_ids_.emplace(static_cast<const void*>(t.data_.get()), id);
    t.tape_epoch_ = epoch_;
    t.node_ = id;
    nodes_.push_back(std::move(nd));
    return id;
}

Tensor Tape::emit(NodeData nd) {
    const int id = static_cast<int>(nodes_.size());
    nd.value.tape_epoch_ = epoch_;
    nd.value.node_ = id;
    Tensor out = nd.value;
    nodes_.push_back(std::move(nd));
    return out;
}

Tensor Tape::record1(Op op, const Tensor& a, Tensor value, bool grad_flows) {
    check_open();
    NodeData nd;
    nd.op = op;
    nd.a = node_of(a);
    nd.value = std::move(value);
    nd.requires_grad = grad_flows && nodes_[nd.a].requires_grad;
    return emit(std::move(nd));
}

Tensor Tape::record2(Op op, const Tensor& a, const Tensor& b, Tensor value) {
    check_open();
    NodeData nd;
    nd.op = op;
    nd.a = node_of(a);
    nd.b = node_of(b);
    nd.value = std::move(value);
    nd.requires_grad =
        nodes_[nd.a].requires_grad || nodes_[nd.b].requires_grad;
    return emit(std::move(nd));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_nonempty(a, "matmul");
    require_nonempty(b, "matmul");
    if (a.cols() != b.rows())
        throw DimensionError("matmul: " + shape_str(a) + " times " +
                             shape_str(b));
    Tensor out(a.rows(), b.cols());
    kernels::matmul(a.data(), b.data(), out.data(), a.rows(), a.cols(),
                    b.cols());
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record2(Op::MatMul, a, b, std::move(out));
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
    require_nonempty(a, "matmul_bt");
    require_nonempty(b, "matmul_bt");
    if (a.cols() != b.cols())
        throw DimensionError("matmul_bt: " + shape_str(a) + " times " +
                             shape_str(b) + " transposed");
    Tensor out(a.rows(), b.rows());
    kernels::matmul_bt(a.data(), b.data(), out.data(), a.rows(), a.cols(),
                       b.rows());
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record2(Op::MatMulBT, a, b, std::move(out));
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.rows(), a.cols());
    kernels::add(a.data(), b.data(), out.data(), a.size());
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record2(Op::Add, a, b, std::move(out));
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out(a.rows(), a.cols());
    kernels::sub(a.data(), b.data(), out.data(), a.size());
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record2(Op::Sub, a, b, std::move(out));
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out(a.rows(), a.cols());
    kernels::mul(a.data(), b.data(), out.data(), a.size());
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record2(Op::Mul, a, b, std::move(out));
}

Tensor scale(const Tensor& a, double s) {
    require_nonempty(a, "scale");
    Tensor out(a.rows(), a.cols());
    kernels::scale(a.data(), s, out.data(), a.size());
    Tape* t = Tape::current();
    if (!t) return out;
    t->check_open();
    Tape::NodeData nd;
    nd.op = Op::Scale;
    nd.a = t->node_of(a);
    nd.value = std::move(out);
    nd.scalar = s;
    nd.requires_grad = t->nodes_[nd.a].requires_grad;
    return t->emit(std::move(nd));
}

Tensor square(const Tensor& a) {
    require_nonempty(a, "square");
    Tensor out(a.rows(), a.cols());
    kernels::square(a.data(), out.data(), a.size());
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record1(Op::Square, a, std::move(out), true);
}

Tensor relu(const Tensor& a) {
    require_nonempty(a, "relu");
    Tensor out(a.rows(), a.cols());
    kernels::relu(a.data(), out.data(), a.size());
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record1(Op::Relu, a, std::move(out), true);
}

Tensor relu_mask(const Tensor& a) {
    require_nonempty(a, "relu_mask");
    Tensor out(a.rows(), a.cols());
    kernels::relu_mask(a.data(), out.data(), a.size());
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record1(Op::ReluMask, a, std::move(out), false);
}

Tensor tanh(const Tensor& a) {
    require_nonempty(a, "tanh");
    Tensor out(a.rows(), a.cols());
    kernels::tanh_map(a.data(), out.data(), a.size());
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record1(Op::Tanh, a, std::move(out), true);
}

Tensor mean(const Tensor& a) {
    require_nonempty(a, "mean");
    Tensor out =
        Tensor::scalar(kernels::sum(a.data(), a.size()) /
                       static_cast<double>(a.size()));
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record1(Op::Mean, a, std::move(out), true);
}

Tensor row_norm(const Tensor& a) {
    require_nonempty(a, "row_norm");
    Tensor out(a.rows(), 1);
    for (int i = 0; i < a.rows(); ++i) {
        const double* row = a.data() + static_cast<std::size_t>(i) * a.cols();
        out.data()[i] = std::sqrt(kernels::dot(row, row, a.cols()));
    }
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record1(Op::RowNorm, a, std::move(out), true);
}

Tensor add_row(const Tensor& a, const Tensor& bias) {
    require_nonempty(a, "add_row");
    require_nonempty(bias, "add_row");
    if (bias.rows() != 1 || bias.cols() != a.cols())
        throw DimensionError("add_row: bias " + shape_str(bias) +
                             " does not broadcast over " + shape_str(a));
    Tensor out(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        kernels::add(a.data() + static_cast<std::size_t>(i) * a.cols(),
                     bias.data(),
                     out.data() + static_cast<std::size_t>(i) * a.cols(),
                     a.cols());
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record2(Op::AddRow, a, bias, std::move(out));
}

Tensor reshape(const Tensor& a, int rows, int cols) {
    require_nonempty(a, "reshape");
    if (rows <= 0 || cols <= 0 ||
        static_cast<std::size_t>(rows) * cols != a.size())
        throw DimensionError("reshape: " + shape_str(a) + " to " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    // Copies so the result has its own storage identity; a view sharing the
    // buffer would collide with its source in leaf deduplication.
    Tensor out(rows, cols, a.values());
    Tape* t = Tape::current();
    if (!t) return out;
    return t->record1(Op::Reshape, a, std::move(out), true);
}

Tensor col_gather(const Tensor& a, const std::vector<int>& idx) {
    require_nonempty(a, "col_gather");
    if (idx.empty()) throw ArgumentError("col_gather: empty column list");
    for (int j : idx)
        if (j < 0 || j >= a.cols())
            throw ArgumentError("col_gather: column " + std::to_string(j) +
                                " out of range for " + shape_str(a));
    Tensor out(a.rows(), static_cast<int>(idx.size()));
    for (int i = 0; i < a.rows(); ++i) {
        const double* src = a.data() + static_cast<std::size_t>(i) * a.cols();
        double* dst = out.data() + static_cast<std::size_t>(i) * idx.size();
        for (std::size_t j = 0; j < idx.size(); ++j) dst[j] = src[idx[j]];
    }
    Tape* t = Tape::current();
    if (!t) return out;
    t->check_open();
    Tape::NodeData nd;
    nd.op = Op::ColGather;
    nd.a = t->node_of(a);
    nd.value = std::move(out);
    nd.cols = idx;
    nd.requires_grad = t->nodes_[nd.a].requires_grad;
    return t->emit(std::move(nd));
}

Tensor custom_scalar(const Tensor& a, double v, Tensor grad_wrt_a) {
    require_nonempty(a, "custom_scalar");
    require_same_shape(a, grad_wrt_a, "custom_scalar");
    Tensor out = Tensor::scalar(v);
    Tape* t = Tape::current();
    if (!t) return out;
    t->check_open();
    Tape::NodeData nd;
    nd.op = Op::CustomScalar;
    nd.a = t->node_of(a);
    nd.value = std::move(out);
    nd.custom_grad = std::move(grad_wrt_a);
    nd.requires_grad = t->nodes_[nd.a].requires_grad;
    return t->emit(std::move(nd));
}

void backward(const Tensor& loss) {
    Tape* t = Tape::current();
    if (!t) throw StateError("backward: no active computation record");
    t->check_open();
    if (loss.tape_epoch_ != t->epoch_ || loss.node_ < 0)
        throw StateError(
            "backward: tensor was not recorded on the active record");
    if (loss.rows() != 1 || loss.cols() != 1)
        throw RankError("backward: loss is " + shape_str(loss) + ", not 1x1");

    auto& nodes = t->nodes_;
    const int root = loss.node_;
    std::vector<std::vector<double>> adj(nodes.size());
    std::vector<char> touched(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].requires_grad)
            adj[i].assign(nodes[i].value.size(), 0.0);
    if (!nodes[root].requires_grad) adj[root].assign(1, 0.0);
    adj[root][0] = 1.0;
    touched[root] = 1;

    auto touch = [&](int id) {
        if (id >= 0 && nodes[id].requires_grad) touched[id] = 1;
    };

    for (int i = root; i >= 0; --i) {
        Tape::NodeData& n = nodes[i];
        if (n.op == Op::Leaf) {
            if (n.requires_grad) *n.value.grad_ = adj[i];
            continue;
        }
        if (!n.requires_grad || !touched[i]) continue;
        const std::vector<double>& g = adj[i];
        const bool ga = n.a >= 0 && nodes[n.a].requires_grad;
        const bool gb = n.b >= 0 && nodes[n.b].requires_grad;
        const Tensor& va = n.a >= 0 ? nodes[n.a].value : n.value;
        const Tensor& vb = n.b >= 0 ? nodes[n.b].value : n.value;
        switch (n.op) {
            case Op::MatMul:
                if (ga)
                    kernels::matmul_bt(g.data(), vb.data(), adj[n.a].data(),
                                       va.rows(), vb.cols(), va.cols(), true);
                if (gb)
                    kernels::matmul_at(va.data(), g.data(), adj[n.b].data(),
                                       va.rows(), va.cols(), vb.cols(), true);
                break;
            case Op::MatMulBT:
                if (ga)
                    kernels::matmul(g.data(), vb.data(), adj[n.a].data(),
                                    va.rows(), vb.rows(), vb.cols(), true);
                if (gb)
                    kernels::matmul_at(g.data(), va.data(), adj[n.b].data(),
                                       va.rows(), vb.rows(), va.cols(), true);
                break;
            case Op::Add:
                if (ga) kernels::axpy(1.0, g.data(), adj[n.a].data(), g.size());
                if (gb) kernels::axpy(1.0, g.data(), adj[n.b].data(), g.size());
                break;
            case Op::Sub:
                if (ga) kernels::axpy(1.0, g.data(), adj[n.a].data(), g.size());
                if (gb)
                    kernels::axpy(-1.0, g.data(), adj[n.b].data(), g.size());
                break;
            case Op::Mul:
                if (ga)
                    kernels::mul_add(g.data(), vb.data(), adj[n.a].data(),
                                     g.size());
                if (gb)
                    kernels::mul_add(g.data(), va.data(), adj[n.b].data(),
                                     g.size());
                break;
            case Op::Scale:
                if (ga)
                    kernels::axpy(n.scalar, g.data(), adj[n.a].data(),
                                  g.size());
                break;
            case Op::Square:
                if (ga)
                    kernels::mul_add(g.data(), va.data(), adj[n.a].data(),
                                     g.size(), 2.0);
                break;
            case Op::Relu:
                if (ga)
                    kernels::relu_grad_add(va.data(), g.data(),
                                           adj[n.a].data(), g.size());
                break;
            case Op::Tanh:
                if (ga)
                    kernels::tanh_grad_add(n.value.data(), g.data(),
                                           adj[n.a].data(), g.size());
                break;
            case Op::Mean:
                if (ga)
                    kernels::add_scalar(
                        g[0] / static_cast<double>(va.size()),
                        adj[n.a].data(), va.size());
                break;
            case Op::RowNorm:
                if (ga) {
                    for (int r = 0; r < va.rows(); ++r) {
                        // Guard keeps an all-zero row from producing NaNs; its
                        // true subgradient there is taken as 0.
                        const double nr =
                            std::max(n.value.data()[r], 1e-150);
                        kernels::axpy(
                            g[r] / nr,
                            va.data() +
                                static_cast<std::size_t>(r) * va.cols(),
                            adj[n.a].data() +
                                static_cast<std::size_t>(r) * va.cols(),
                            va.cols());
                    }
                }
                break;
            case Op::AddRow:
                if (ga) kernels::axpy(1.0, g.data(), adj[n.a].data(), g.size());
                if (gb) {
                    double* bg = adj[n.b].data();
                    const int c = va.cols();
                    for (int r = 0; r < va.rows(); ++r)
                        kernels::axpy(
                            1.0, g.data() + static_cast<std::size_t>(r) * c,
                            bg, c);
                }
                break;
            case Op::Reshape:
                if (ga) kernels::axpy(1.0, g.data(), adj[n.a].data(), g.size());
                break;
            case Op::ColGather:
                if (ga) {
                    const int ac = va.cols();
                    const int k = static_cast<int>(n.cols.size());
                    for (int r = 0; r < va.rows(); ++r)
                        for (int j = 0; j < k; ++j)
                            adj[n.a][static_cast<std::size_t>(r) * ac +
                                     n.cols[j]] +=
                                g[static_cast<std::size_t>(r) * k + j];
                }
                break;
            case Op::CustomScalar:
                if (ga)
                    kernels::axpy(g[0], n.custom_grad.data(),
                                  adj[n.a].data(), n.custom_grad.size());
                break;
            case Op::ReluMask:
            case Op::Leaf:
                break;
        }
        touch(n.a);
        touch(n.b);
    }

    t->consumed_ = true;
    t->nodes_.clear();
    t->leaf_ids_.clear();
}

}  // namespace acl
