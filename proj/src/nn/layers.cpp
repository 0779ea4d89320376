#include "xvars/nn/layers.hpp"

#include <cmath>

#include "xvars/common/error.hpp"

namespace xvars::nn {
namespace {

Matrix random_normal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = rng.normal() * stddev;
        }
    }
    return m;
}

}  // namespace

LowRankAdapter::LowRankAdapter(const std::string& name, Eigen::Index in, Eigen::Index out, int rank,
                               double alpha, Rng& rng)
    : down(name + ".lora_down", random_normal(in, rank, 1.0 / std::sqrt(static_cast<double>(in)), rng)),
      up(name + ".lora_up", Matrix::Zero(rank, out)),
      scale(alpha / static_cast<double>(rank)) {}

ad::Var LowRankAdapter::forward(ad::Tape& tape, const ad::Var& x) const {
    auto h = ad::matmul(x, tape.parameter(down));
    return ad::scale(ad::matmul(h, tape.parameter(up)), scale);
}

void LowRankAdapter::collect(ParameterList& out) {
    out.push_back(&down);
    out.push_back(&up);
}

void LowRankAdapter::collect(ConstParameterList& out) const {
    out.push_back(&down);
    out.push_back(&up);
}

Linear::Linear(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng, double init_std)
    : weight_(name + ".weight", random_normal(in, out, init_std, rng)),
      bias_(name + ".bias", Matrix::Zero(1, out)) {}

ad::Var Linear::forward(ad::Tape& tape, const ad::Var& x) const {
    if (x.cols() != in_features()) {
        fail(ErrorCode::DimensionMismatch, weight_.name + ": input width " + std::to_string(x.cols()) +
                                               ", expected " + std::to_string(in_features()));
    }
    auto y = ad::add_row(ad::matmul(x, tape.parameter(weight_)), tape.parameter(bias_));
    if (adapter_) {
        y = ad::add(y, adapter_->forward(tape, x));
    }
    return y;
}

Matrix Linear::apply(const Matrix& x) const {
    if (x.cols() != in_features()) {
        fail(ErrorCode::DimensionMismatch, weight_.name + ": input width " + std::to_string(x.cols()) +
                                               ", expected " + std::to_string(in_features()));
    }
    Matrix y = x * weight_.value;
    y.rowwise() += bias_.value.row(0);
    if (adapter_) {
        y += (x * adapter_->down.value) * adapter_->up.value * adapter_->scale;
    }
    return y;
}

void Linear::attach_adapter(int rank, double alpha, Rng& rng) {
    adapter_.emplace(weight_.name.substr(0, weight_.name.rfind('.')), in_features(), out_features(), rank,
                     alpha, rng);
}

void Linear::collect(ParameterList& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

void Linear::collect(ConstParameterList& out) const {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

LayerNorm::LayerNorm(const std::string& name, Eigen::Index width)
    : gain_(name + ".gain", Matrix::Ones(1, width)), bias_(name + ".bias", Matrix::Zero(1, width)) {}

ad::Var LayerNorm::forward(ad::Tape& tape, const ad::Var& x) const {
    return ad::layer_norm(x, tape.parameter(gain_), tape.parameter(bias_));
}

void LayerNorm::collect(ParameterList& out) {
    out.push_back(&gain_);
    out.push_back(&bias_);
}

void LayerNorm::collect(ConstParameterList& out) const {
    out.push_back(&gain_);
    out.push_back(&bias_);
}

TransformerBlock::TransformerBlock(const std::string& name, const BlockConfig& cfg, Rng& rng)
    : cfg_(cfg),
      ln1_(name + ".ln1", cfg.width),
      ln2_(name + ".ln2", cfg.width),
      query_(name + ".query", cfg.width, cfg.width, rng, cfg.init_std),
      key_(name + ".key", cfg.width, cfg.width, rng, cfg.init_std),
      value_(name + ".value", cfg.width, cfg.width, rng, cfg.init_std),
      output_(name + ".output", cfg.width, cfg.width, rng, cfg.init_std),
      fc1_(name + ".fc1", cfg.width, cfg.mlp_hidden, rng, cfg.init_std),
      fc2_(name + ".fc2", cfg.mlp_hidden, cfg.width, rng, cfg.init_std) {}

ad::Var TransformerBlock::forward(ad::Tape& tape, const ad::Var& x) const {
    const auto normed = ln1_.forward(tape, x);
    const auto q = query_.forward(tape, normed);
    const auto k = key_.forward(tape, normed);
    const auto v = value_.forward(tape, normed);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg_.width));
    const auto weights = ad::softmax_rows(ad::scale(ad::matmul_transposed(q, k), inv_sqrt), cfg_.causal);
    const auto attended = output_.forward(tape, ad::matmul(weights, v));
    const auto mid = ad::add(x, attended);
    const auto hidden = ad::gelu(fc1_.forward(tape, ln2_.forward(tape, mid)));
    return ad::add(mid, fc2_.forward(tape, hidden));
}

void TransformerBlock::attach_adapters(int rank, double alpha, Rng& rng) {
    for (Linear* l : {&query_, &key_, &value_, &output_, &fc1_, &fc2_}) {
        l->attach_adapter(rank, alpha, rng);
    }
}

bool TransformerBlock::has_adapters() const { return query_.has_adapter(); }

void TransformerBlock::collect(ParameterList& out) {
    ln1_.collect(out);
    for (Linear* l : {&query_, &key_, &value_, &output_}) l->collect(out);
    ln2_.collect(out);
    fc1_.collect(out);
    fc2_.collect(out);
}

void TransformerBlock::collect(ConstParameterList& out) const {
    ln1_.collect(out);
    for (const Linear* l : {&query_, &key_, &value_, &output_}) l->collect(out);
    ln2_.collect(out);
    fc1_.collect(out);
    fc2_.collect(out);
}

void TransformerBlock::collect_adapters(ParameterList& out) {
    for (Linear* l : {&query_, &key_, &value_, &output_, &fc1_, &fc2_}) {
        if (auto* a = l->adapter()) a->collect(out);
    }
}

void TransformerBlock::collect_adapters(ConstParameterList& out) const {
    for (const Linear* l : {&query_, &key_, &value_, &output_, &fc1_, &fc2_}) {
        if (const auto* a = l->adapter()) a->collect(out);
    }
}

}  // namespace xvars::nn
