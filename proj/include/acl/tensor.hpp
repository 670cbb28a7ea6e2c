#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

namespace acl {

class Tape;

// Dense row-major matrix of doubles with shared storage: copies alias the
// same buffer, so a parameter handed to several ops is one object as far as
// gradient accumulation is concerned. Scalars are 1x1, row vectors 1xN.
class Tensor {
  public:
    Tensor() = default;
    Tensor(int rows, int cols);
    Tensor(int rows, int cols, std::vector<double> values);

    static Tensor scalar(double v);
    static Tensor ones(int rows, int cols);
    static Tensor full(int rows, int cols, double v);

    bool empty() const { return !data_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_ ? data_->size() : 0; }

    double* data() { return data_->data(); }
    const double* data() const { return data_->data(); }
    std::vector<double>& values() { return *data_; }
    const std::vector<double>& values() const { return *data_; }

    double at(int i, int j) const;
    double& at(int i, int j);
    // Value of a 1x1 tensor; RankError otherwise.
    double item() const;

    // Allocates (or drops) the gradient buffer. Copies made after this share
    // it, which is what makes in-place optimizer updates see fresh gradients.
    Tensor& set_requires_grad(bool on);
    bool requires_grad() const { return requires_grad_; }
    // Gradient written by the last backward() this tensor participated in.
    // StateError when requires_grad is off.
    const std::vector<double>& grad() const;
    std::vector<double>& grad();

  private:
    std::shared_ptr<std::vector<double>> data_;
    std::shared_ptr<std::vector<double>> grad_;
    int rows_ = 0;
    int cols_ = 0;
    bool requires_grad_ = false;

    // Which tape recorded this tensor, and as which node. Epochs are globally
    // unique so a stale link can never match a new tape by accident.
    mutable std::uint64_t tape_epoch_ = 0;
    mutable int node_ = -1;

    friend class Tape;
    friend void backward(const Tensor& loss);
};

enum class Op {
    Leaf,
    MatMul,     // c = a b
    MatMulBT,   // c = a b^T
    Add,
    Sub,
    Mul,
    Scale,      // c = s a
    Square,
    Relu,
    ReluMask,   // 1[a > 0], constant under differentiation
    Tanh,
    Mean,       // scalar mean over all elements
    RowNorm,    // per-row euclidean norm, c is m x 1
    AddRow,     // c = a + row-broadcast bias (1 x n)
    Reshape,    // copying reshape, same element count
    ColGather,  // c = a[:, idx]
    CustomScalar,  // scalar with caller-supplied gradient w.r.t. its input
};

// Define-by-run record of one forward computation. Constructing a Tape makes
// it the active record for the thread; ops executed while one is active
// append nodes. backward() consumes the record: each tape supports exactly
// one backward pass, then only destruction.
class Tape {
  public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* current();

    bool consumed() const { return consumed_; }
    std::size_t node_count() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 and runs the reverse sweep, overwriting the
    // grad buffer of every requires-grad leaf reachable from loss. The loss
    // must be 1x1 (RankError) and recorded on the active tape (StateError).
    friend void backward(const Tensor& loss);

  private:
    struct NodeData {
        Op op;
        int a = -1;
        int b = -1;
        Tensor value;
        double scalar = 0.0;        // Scale factor
        std::vector<int> cols;      // ColGather indices
        Tensor custom_grad;         // CustomScalar: d(out)/d(input a)
        bool requires_grad = false;
    };

    int node_of(const Tensor& t);
    Tensor emit(NodeData nd);
    Tensor record1(Op op, const Tensor& a, Tensor value, bool grad_flows);
    Tensor record2(Op op, const Tensor& a, const Tensor& b, Tensor value);
    void check_open() const;

    std::vector<NodeData> nodes_;
    std::unordered_map<const void*, int> leaf_ids_;
    std::uint64_t epoch_;
    bool consumed_ = false;

    friend Tensor matmul(const Tensor&, const Tensor&);
    friend Tensor matmul_bt(const Tensor&, const Tensor&);
    friend Tensor add(const Tensor&, const Tensor&);
    friend Tensor sub(const Tensor&, const Tensor&);
    friend Tensor mul(const Tensor&, const Tensor&);
    friend Tensor scale(const Tensor&, double);
    friend Tensor square(const Tensor&);
    friend Tensor relu(const Tensor&);
    friend Tensor relu_mask(const Tensor&);
    friend Tensor tanh(const Tensor&);
    friend Tensor mean(const Tensor&);
    friend Tensor row_norm(const Tensor&);
    friend Tensor add_row(const Tensor&, const Tensor&);
    friend Tensor reshape(const Tensor&, int, int);
    friend Tensor col_gather(const Tensor&, const std::vector<int>&);
    friend Tensor custom_scalar(const Tensor&, double, Tensor);
};

// Ops compute eagerly; when a Tape is active they also record themselves.
Tensor matmul(const Tensor& a, const Tensor& b);
// a [m x n] times b^T with b stored [k x n]; the linear-layer primitive for
// weights kept in [out x in] layout.
Tensor matmul_bt(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);
// Indicator a > 0 as 0/1 values. No gradient flows to a: exact almost
// everywhere since the indicator is piecewise constant.
Tensor relu_mask(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor mean(const Tensor& a);
// Per-row euclidean norm; backward guards rows with norm 0.
Tensor row_norm(const Tensor& a);
Tensor add_row(const Tensor& a, const Tensor& bias);
Tensor reshape(const Tensor& a, int rows, int cols);
Tensor col_gather(const Tensor& a, const std::vector<int>& idx);
// Scalar node with value v and caller-computed gradient d(v)/d(a). Lets a
// fitted analytic objective join the graph without tracing its solver.
Tensor custom_scalar(const Tensor& a, double v, Tensor grad_wrt_a);

void backward(const Tensor& loss);

}  // namespace acl
