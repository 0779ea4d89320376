#pragma once

#include <unordered_map>
#include <vector>

#include "xvars/autograd/tape.hpp"

namespace xvars::nn {

/// Running gradient sum across micro-batches, keyed by parameter. Iteration
/// always follows the registration order so updates are reproducible.
class GradientBuffer {
public:
    explicit GradientBuffer(ParameterList params);

    void add(const ad::Tape& tape);
    void clear();
    const Matrix& gradient(std::size_t index) const { return grads_[index]; }
    const ParameterList& parameters() const { return params_; }
    bool all_finite() const;

private:
    ParameterList params_;
    std::vector<Matrix> grads_;
    std::unordered_map<const Parameter*, std::size_t> index_;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    Adam(ParameterList params, AdamConfig cfg);

    void step(const GradientBuffer& grads);
    long long steps() const { return t_; }

private:
    ParameterList params_;
    AdamConfig cfg_;
    std::vector<Matrix> m_, v_;
    long long t_ = 0;
};

}  // namespace xvars::nn
