#pragma once

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace xvars {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

/// A named, trainable weight tensor. Modules own their parameters by value;
/// the tape only keeps non-owning pointers for the duration of one pass.
struct Parameter {
    std::string name;
    Matrix value;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {}

    Eigen::Index size() const { return value.size(); }
};

using ParameterList = std::vector<Parameter*>;
using ConstParameterList = std::vector<const Parameter*>;

}  // namespace xvars

namespace xvars::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    bool requires_grad() const;
    int id() const { return id_; }
    Tape* tape() const { return tape_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

/// Reverse-mode tape. Records each op's output and a closure that pushes the
/// output gradient to its inputs. Gradients for parameters are collected per
/// Parameter pointer so forward code can stay const on the model.
class Tape {
public:
    using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const { return grad_enabled_; }

    Var constant(Matrix value);
    /// Leaf bound to a parameter; tracked only if the parameter is trainable
    /// and gradients are enabled on this tape.
    Var parameter(const Parameter& p);

    Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
    Var record(Matrix value, std::span<const Var> inputs, Backward backward);

    void accumulate(const Var& v, const Matrix& grad);

    /// Runs backpropagation from a 1x1 output.
    void backward(const Var& loss);

    const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

    /// Gradient accumulated for a parameter, or nullptr when it received none.
    const Matrix* gradient(const Parameter& p) const;
    const std::unordered_map<const Parameter*, Matrix>& parameter_gradients() const { return param_grads_; }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        Backward backward;
        const Parameter* param = nullptr;
        bool requires_grad = false;
    };

    std::deque<Node> nodes_;
    std::unordered_map<const Parameter*, Matrix> param_grads_;
    bool grad_enabled_;
};

// ---- differentiable ops -------------------------------------------------

Var matmul(const Var& a, const Var& b);
/// a * b^T without materialising the transpose on the tape.
Var matmul_transposed(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Adds a 1xN row to every row of an MxN input.
Var add_row(const Var& a, const Var& row);
Var scale(const Var& a, double factor);
Var gelu(const Var& a);
Var tanh(const Var& a);
/// Row-wise layer normalisation with learned gain and bias (both 1xN).
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
/// Row-wise softmax; with causal=true, entry (i,j) for j>i is masked out.
Var softmax_rows(const Var& x, bool causal);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
/// Mean over rows: MxN -> 1xN.
Var mean_rows(const Var& a);
/// Embedding lookup: selects rows `ids` of `table`.
Var gather_rows(const Var& table, std::span<const int> ids);
/// Sum over rows i of weight[i] * CE(logits row i, target[i]).
/// Rows with target < 0 are skipped. Returns a 1x1 node.
Var cross_entropy(const Var& logits, std::span<const int> targets, std::span<const double> weights);
/// Sum of 1x1 nodes.
Var sum_scalars(std::span<const Var> parts);

}  // namespace xvars::ad
