#include "xvars/nn/optim.hpp"

#include <cmath>

#include "xvars/common/error.hpp"

namespace xvars::nn {

GradientBuffer::GradientBuffer(ParameterList params) : params_(std::move(params)) {
    grads_.reserve(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        grads_.push_back(Matrix::Zero(params_[i]->value.rows(), params_[i]->value.cols()));
        index_[params_[i]] = i;
    }
}

void GradientBuffer::add(const ad::Tape& tape) {
    for (const auto& [param, grad] : tape.parameter_gradients()) {
        const auto it = index_.find(param);
        if (it != index_.end()) {
            grads_[it->second] += grad;
        }
    }
}

void GradientBuffer::clear() {
    for (auto& g : grads_) {
        g.setZero();
    }
}

bool GradientBuffer::all_finite() const {
    for (const auto& g : grads_) {
        if (!g.allFinite()) {
            return false;
        }
    }
    return true;
}

Adam::Adam(ParameterList params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (const auto* p : params_) {
        m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
}

void Adam::step(const GradientBuffer& grads) {
    if (grads.parameters() != params_) {
        fail(ErrorCode::InvalidArgument, "Adam::step: gradient buffer tracks a different parameter set");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const Matrix& g = grads.gradient(i);
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
        const auto m_hat = m_[i].array() / bc1;
        const auto v_hat = v_[i].array() / bc2;
        params_[i]->value.array() -= cfg_.learning_rate * m_hat / (v_hat.sqrt() + cfg_.epsilon);
    }
}

}  // namespace xvars::nn
