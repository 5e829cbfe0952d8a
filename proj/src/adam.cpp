#include "fedleak/adam.hpp"

#include <cmath>

#include "fedleak/errors.hpp"

namespace fedleak {

AdamState make_adam_state(const Tensor& param, const AdamHyper& hyper) {
    if (!(hyper.beta1 > 0.0f && hyper.beta1 < 1.0f) || !(hyper.beta2 > 0.0f && hyper.beta2 < 1.0f)) {
        throw UsageError("adam: beta1 and beta2 must lie in (0,1)");
    }
    if (!(hyper.epsilon > 0.0f)) throw UsageError("adam: epsilon must be positive");
    return AdamState{Tensor(param.shape()), Tensor(param.shape()), 0, hyper};
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state) {
    require_same_shape(param, grad, "adam_step");
    require_same_shape(param, state.m, "adam_step first moment");
    require_same_shape(param, state.v, "adam_step second moment");

    state.t += 1;
    const AdamHyper& h = state.hyper;
    const float correction1 = 1.0f - static_cast<float>(std::pow(h.beta1, static_cast<double>(state.t)));
    const float correction2 = 1.0f - static_cast<float>(std::pow(h.beta2, static_cast<double>(state.t)));

    float* w = param.data();
    float* m = state.m.data();
    float* v = state.v.data();
    const float* g = grad.data();
    const std::size_t n = param.size();
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = h.beta1 * m[i] + (1.0f - h.beta1) * g[i];
        v[i] = h.beta2 * v[i] + (1.0f - h.beta2) * g[i] * g[i];
        const float m_hat = m[i] / correction1;
        const float v_hat = v[i] / correction2;
        w[i] -= h.lr * m_hat / std::sqrt(v_hat + h.epsilon);
    }
}

}  // namespace fedleak
