#pragma once

#include <optional>
#include <string>

#include "xvars/autograd/tape.hpp"
#include "xvars/common/random.hpp"

namespace xvars::nn {

/// Additive low-rank update: x -> scale * (x * down) * up.
/// `up` starts at zero so a freshly attached adapter is an exact no-op.
struct LowRankAdapter {
    Parameter down;
    Parameter up;
    double scale = 1.0;

    LowRankAdapter(const std::string& name, Eigen::Index in, Eigen::Index out, int rank, double alpha, Rng& rng);

    ad::Var forward(ad::Tape& tape, const ad::Var& x) const;
    void collect(ParameterList& out);
    void collect(ConstParameterList& out) const;
};

class Linear {
public:
    Linear() = default;
    Linear(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng, double init_std);

    ad::Var forward(ad::Tape& tape, const ad::Var& x) const;
    /// Plain evaluation, no tape.
    Matrix apply(const Matrix& x) const;

    Eigen::Index in_features() const { return weight_.value.rows(); }
    Eigen::Index out_features() const { return weight_.value.cols(); }

    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }
    const Parameter& weight() const { return weight_; }
    const Parameter& bias() const { return bias_; }

    void attach_adapter(int rank, double alpha, Rng& rng);
    bool has_adapter() const { return adapter_.has_value(); }
    LowRankAdapter* adapter() { return adapter_ ? &*adapter_ : nullptr; }
    const LowRankAdapter* adapter() const { return adapter_ ? &*adapter_ : nullptr; }

    /// Base weights only; adapter parameters are collected separately.
    void collect(ParameterList& out);
    void collect(ConstParameterList& out) const;

private:
    Parameter weight_;  // in x out
    Parameter bias_;    // 1 x out
    std::optional<LowRankAdapter> adapter_;
};

class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(const std::string& name, Eigen::Index width);

    ad::Var forward(ad::Tape& tape, const ad::Var& x) const;
    void collect(ParameterList& out);
    void collect(ConstParameterList& out) const;

private:
    Parameter gain_;
    Parameter bias_;
};

struct BlockConfig {
    Eigen::Index width = 32;
    Eigen::Index mlp_hidden = 64;
    bool causal = false;
    double init_std = 0.08;
};

/// Pre-norm single-head transformer block:
///   x + attn(ln1(x)), then + mlp(ln2(.)).
class TransformerBlock {
public:
    TransformerBlock() = default;
    TransformerBlock(const std::string& name, const BlockConfig& cfg, Rng& rng);

    ad::Var forward(ad::Tape& tape, const ad::Var& x) const;

    /// Attach rank-r adapters to every projection in the block.
    void attach_adapters(int rank, double alpha, Rng& rng);
    bool has_adapters() const;

    void collect(ParameterList& out);
    void collect(ConstParameterList& out) const;
    void collect_adapters(ParameterList& out);
    void collect_adapters(ConstParameterList& out) const;

private:
    BlockConfig cfg_;
    LayerNorm ln1_, ln2_;
    Linear query_, key_, value_, output_, fc1_, fc2_;
};

}  // namespace xvars::nn
