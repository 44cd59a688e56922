#include "duet/optim.hpp"

#include <cmath>

namespace duet {

AdamState::AdamState(const std::vector<Parameter*>& params, double lr_, double weight_decay_)
    : lr(lr_), weight_decay(weight_decay_) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const Parameter* p : params) {
        m.push_back(Tensor::zeros(p->value.shape));
        v.push_back(Tensor::zeros(p->value.shape));
    }
}

void adam_step(std::vector<Parameter*>& params, AdamState& state) {
    if (params.size() != state.m.size())
        throw ContractError("adam_step: state was built for a different parameter list");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t p = 0; p < params.size(); ++p) {
        Parameter& param = *params[p];
        if (!param.grad.same_shape(param.value))
            throw ContractError("adam_step: gradient shape mismatch for " + param.name);
        Tensor& m = state.m[p];
        Tensor& v = state.v[p];
        for (size_t i = 0; i < param.value.numel(); ++i) {
            const double g = param.grad.data[i];
            m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g;
            v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g * g;
            const double m_hat = m.data[i] / bc1;
            const double v_hat = v.data[i] / bc2;
            param.value.data[i] -= state.lr * (m_hat / (std::sqrt(v_hat) + state.eps) +
                                               state.weight_decay * param.value.data[i]);
        }
    }
}

}  // namespace duet
