#include "xvars/autograd/tape.hpp"

#include <cmath>
#include <limits>

#include "xvars/common/error.hpp"

namespace xvars::ad {

const Matrix& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Matrix value) {
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::parameter(const Parameter& p) {
    const bool track = grad_enabled_ && p.trainable;
    nodes_.push_back(Node{p.value, {}, {}, track ? &p : nullptr, track});
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backward backward) {
    bool needs_grad = false;
    for (const auto& in : inputs) {
        if (in.tape_ != this) {
            fail(ErrorCode::InvalidArgument, "autograd: mixing variables from different tapes");
        }
        needs_grad = needs_grad || requires_grad(in.id_);
    }
    Node node;
    node.value = std::move(value);
    node.requires_grad = needs_grad;
    if (needs_grad) {
        node.backward = std::move(backward);
    }
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::accumulate(const Var& v, const Matrix& grad) {
    auto& node = nodes_[static_cast<std::size_t>(v.id_)];
    if (!node.requires_grad) {
        return;
    }
    if (node.grad.size() == 0) {
        node.grad = grad;
    } else {
        node.grad += grad;
    }
}

void Tape::backward(const Var& loss) {
    if (loss.tape_ != this || loss.rows() != 1 || loss.cols() != 1) {
        fail(ErrorCode::InvalidArgument, "backward() needs a 1x1 output of this tape");
    }
    if (!requires_grad(loss.id_)) {
        return;
    }
    nodes_[static_cast<std::size_t>(loss.id_)].grad = Matrix::Ones(1, 1);
    for (int i = loss.id_; i >= 0; --i) {
        auto& node = nodes_[static_cast<std::size_t>(i)];
        if (!node.requires_grad || node.grad.size() == 0) {
            continue;
        }
        if (node.param != nullptr) {
            auto [it, inserted] = param_grads_.try_emplace(node.param, node.grad);
            if (!inserted) {
                it->second += node.grad;
            }
        } else if (node.backward) {
            const Matrix grad = std::move(node.grad);
            node.backward(*this, grad);
        }
        node.grad.resize(0, 0);
    }
}

const Matrix* Tape::gradient(const Parameter& p) const {
    const auto it = param_grads_.find(&p);
    return it == param_grads_.end() ? nullptr : &it->second;
}

// ---- ops ----------------------------------------------------------------

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        fail(ErrorCode::DimensionMismatch,
             std::string(op) + ": shape " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                 " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

}  // namespace

Var matmul(const Var& a, const Var& b) {
    if (a.cols() != b.rows()) {
        fail(ErrorCode::DimensionMismatch, "matmul: inner dimensions " + std::to_string(a.cols()) +
                                               " and " + std::to_string(b.rows()));
    }
    Tape& t = *a.tape();
    return t.record(a.value() * b.value(), {a, b}, [a, b](Tape& tape, const Matrix& g) {
        if (a.requires_grad()) tape.accumulate(a, g * b.value().transpose());
        if (b.requires_grad()) tape.accumulate(b, a.value().transpose() * g);
    });
}

Var matmul_transposed(const Var& a, const Var& b) {
    if (a.cols() != b.cols()) {
        fail(ErrorCode::DimensionMismatch, "matmul_transposed: widths " + std::to_string(a.cols()) +
                                               " and " + std::to_string(b.cols()));
    }
    Tape& t = *a.tape();
    return t.record(a.value() * b.value().transpose(), {a, b}, [a, b](Tape& tape, const Matrix& g) {
        if (a.requires_grad()) tape.accumulate(a, g * b.value());
        if (b.requires_grad()) tape.accumulate(b, g.transpose() * a.value());
    });
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tape& t = *a.tape();
    return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& tape, const Matrix& g) {
        tape.accumulate(a, g);
        tape.accumulate(b, g);
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tape& t = *a.tape();
    return t.record(a.value() - b.value(), {a, b}, [a, b](Tape& tape, const Matrix& g) {
        tape.accumulate(a, g);
        tape.accumulate(b, -g);
    });
}

Var add_row(const Var& a, const Var& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        fail(ErrorCode::DimensionMismatch, "add_row: bias width " + std::to_string(row.cols()) +
                                               " vs input width " + std::to_string(a.cols()));
    }
    Tape& t = *a.tape();
    Matrix out = a.value().rowwise() + row.value().row(0);
    return t.record(std::move(out), {a, row}, [a, row](Tape& tape, const Matrix& g) {
        tape.accumulate(a, g);
        if (row.requires_grad()) tape.accumulate(row, g.colwise().sum());
    });
}

Var scale(const Var& a, double factor) {
    Tape& t = *a.tape();
    return t.record(a.value() * factor, {a}, [a, factor](Tape& tape, const Matrix& g) {
        tape.accumulate(a, g * factor);
    });
}

Var gelu(const Var& a) {
    Tape& t = *a.tape();
    const Matrix& x = a.value();
    Matrix out = x.unaryExpr([](double v) {
        return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + 0.044715 * v * v * v)));
    });
    return t.record(std::move(out), {a}, [a](Tape& tape, const Matrix& g) {
        const Matrix& x = a.value();
        Matrix d = x.unaryExpr([](double v) {
            const double inner = kGeluC * (v + 0.044715 * v * v * v);
            const double th = std::tanh(inner);
            const double dinner = kGeluC * (1.0 + 3.0 * 0.044715 * v * v);
            return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * dinner;
        });
        tape.accumulate(a, g.cwiseProduct(d));
    });
}

Var tanh(const Var& a) {
    Tape& t = *a.tape();
    Matrix out = a.value().array().tanh().matrix();
    Matrix saved = out;
    return t.record(std::move(out), {a}, [a, saved = std::move(saved)](Tape& tape, const Matrix& g) {
        tape.accumulate(a, g.cwiseProduct((1.0 - saved.array().square()).matrix()));
    });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
    const auto n = x.cols();
    if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n) {
        fail(ErrorCode::DimensionMismatch, "layer_norm: gain/bias width mismatch");
    }
    const Matrix& in = x.value();
    Matrix xhat(in.rows(), n);
    Eigen::VectorXd inv_std(in.rows());
    for (Eigen::Index i = 0; i < in.rows(); ++i) {
        const double mu = in.row(i).mean();
        const double var = (in.row(i).array() - mu).square().mean();
        inv_std(i) = 1.0 / std::sqrt(var + eps);
        xhat.row(i) = (in.row(i).array() - mu) * inv_std(i);
    }
    Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
    out.rowwise() += bias.value().row(0);
    Tape& t = *x.tape();
    return t.record(std::move(out), {x, gain, bias},
                    [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                        Tape& tape, const Matrix& g) {
                        if (gain.requires_grad()) {
                            tape.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
                        }
                        if (bias.requires_grad()) {
                            tape.accumulate(bias, g.colwise().sum());
                        }
                        if (x.requires_grad()) {
                            Matrix dxhat = (g.array().rowwise() * gain.value().row(0).array()).matrix();
                            Matrix dx(dxhat.rows(), dxhat.cols());
                            for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
                                const double m1 = dxhat.row(i).mean();
                                const double m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
                                dx.row(i) = inv_std(i) *
                                            (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2).matrix();
                            }
                            tape.accumulate(x, dx);
                        }
                    });
}

Var softmax_rows(const Var& x, bool causal) {
    const Matrix& in = x.value();
    Matrix out = Matrix::Zero(in.rows(), in.cols());
    for (Eigen::Index i = 0; i < in.rows(); ++i) {
        const Eigen::Index width = causal ? std::min<Eigen::Index>(i + 1, in.cols()) : in.cols();
        const double mx = in.row(i).head(width).maxCoeff();
        double total = 0.0;
        for (Eigen::Index j = 0; j < width; ++j) {
            out(i, j) = std::exp(in(i, j) - mx);
            total += out(i, j);
        }
        out.row(i).head(width) /= total;
    }
    Matrix saved = out;
    Tape& t = *x.tape();
    return t.record(std::move(out), {x}, [x, saved = std::move(saved)](Tape& tape, const Matrix& g) {
        Matrix dx(saved.rows(), saved.cols());
        for (Eigen::Index i = 0; i < saved.rows(); ++i) {
            const double dot = g.row(i).dot(saved.row(i));
            dx.row(i) = saved.row(i).cwiseProduct((g.row(i).array() - dot).matrix());
        }
        tape.accumulate(x, dx);
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) {
        fail(ErrorCode::EmptyInput, "concat_rows: no inputs");
    }
    const auto cols = parts.front().cols();
    Eigen::Index rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) {
            fail(ErrorCode::DimensionMismatch, "concat_rows: width " + std::to_string(p.cols()) +
                                                   " vs " + std::to_string(cols));
        }
        rows += p.rows();
    }
    Matrix out(rows, cols);
    Eigen::Index offset = 0;
    for (const auto& p : parts) {
        out.middleRows(offset, p.rows()) = p.value();
        offset += p.rows();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    Tape& t = *parts.front().tape();
    return t.record(std::move(out), parts, [inputs = std::move(inputs)](Tape& tape, const Matrix& g) {
        Eigen::Index offset = 0;
        for (const auto& p : inputs) {
            if (p.requires_grad()) {
                tape.accumulate(p, g.middleRows(offset, p.rows()));
            }
            offset += p.rows();
        }
    });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.rows()) {
        fail(ErrorCode::DimensionMismatch, "slice_rows: range out of bounds");
    }
    Tape& t = *a.tape();
    return t.record(a.value().middleRows(start, count), {a},
                    [a, start, count](Tape& tape, const Matrix& g) {
                        Matrix full = Matrix::Zero(a.rows(), a.cols());
                        full.middleRows(start, count) = g;
                        tape.accumulate(a, full);
                    });
}

Var mean_rows(const Var& a) {
    if (a.rows() == 0) {
        fail(ErrorCode::EmptyInput, "mean_rows: no rows");
    }
    Tape& t = *a.tape();
    const double inv = 1.0 / static_cast<double>(a.rows());
    return t.record(a.value().colwise().mean(), {a}, [a, inv](Tape& tape, const Matrix& g) {
        tape.accumulate(a, g.replicate(a.rows(), 1) * inv);
    });
}

Var gather_rows(const Var& table, std::span<const int> ids) {
    Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= table.rows()) {
            fail(ErrorCode::DecodeFailure, "gather_rows: id " + std::to_string(ids[i]) + " outside table of " +
                                               std::to_string(table.rows()) + " rows");
        }
        out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
    }
    std::vector<int> saved(ids.begin(), ids.end());
    Tape& t = *table.tape();
    return t.record(std::move(out), {table}, [table, saved = std::move(saved)](Tape& tape, const Matrix& g) {
        Matrix grad = Matrix::Zero(table.rows(), table.cols());
        for (std::size_t i = 0; i < saved.size(); ++i) {
            grad.row(saved[i]) += g.row(static_cast<Eigen::Index>(i));
        }
        tape.accumulate(table, grad);
    });
}

Var cross_entropy(const Var& logits, std::span<const int> targets, std::span<const double> weights) {
    const Matrix& z = logits.value();
    if (static_cast<Eigen::Index>(targets.size()) != z.rows() || weights.size() != targets.size()) {
        fail(ErrorCode::DimensionMismatch, "cross_entropy: targets/weights must match logit rows");
    }
    Matrix probs = Matrix::Zero(z.rows(), z.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const int target = targets[static_cast<std::size_t>(i)];
        if (target < 0) {
            continue;
        }
        if (target >= z.cols()) {
            fail(ErrorCode::InvalidLabel, "cross_entropy: target " + std::to_string(target) +
                                              " outside " + std::to_string(z.cols()) + " classes");
        }
        const double mx = z.row(i).maxCoeff();
        const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
        probs.row(i) = (z.row(i).array() - lse).exp().matrix();
        loss += weights[static_cast<std::size_t>(i)] * (lse - z(i, target));
    }
    std::vector<int> t_saved(targets.begin(), targets.end());
    std::vector<double> w_saved(weights.begin(), weights.end());
    Tape& t = *logits.tape();
    return t.record(Matrix::Constant(1, 1, loss), {logits},
                    [logits, probs = std::move(probs), t_saved = std::move(t_saved),
                     w_saved = std::move(w_saved)](Tape& tape, const Matrix& g) {
                        Matrix grad = Matrix::Zero(probs.rows(), probs.cols());
                        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
                            const int target = t_saved[static_cast<std::size_t>(i)];
                            if (target < 0) {
                                continue;
                            }
                            grad.row(i) = probs.row(i) * w_saved[static_cast<std::size_t>(i)];
                            grad(i, target) -= w_saved[static_cast<std::size_t>(i)];
                        }
                        tape.accumulate(logits, grad * g(0, 0));
                    });
}

Var sum_scalars(std::span<const Var> parts) {
    if (parts.empty()) {
        fail(ErrorCode::EmptyInput, "sum_scalars: no inputs");
    }
    double total = 0.0;
    for (const auto& p : parts) {
        if (p.rows() != 1 || p.cols() != 1) {
            fail(ErrorCode::DimensionMismatch, "sum_scalars: inputs must be 1x1");
        }
        total += p.value()(0, 0);
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    Tape& t = *parts.front().tape();
    return t.record(Matrix::Constant(1, 1, total), parts, [inputs = std::move(inputs)](Tape& tape, const Matrix& g) {
        for (const auto& p : inputs) {
            tape.accumulate(p, g);
        }
    });
}

}  // namespace xvars::ad
