#pragma once

#include <cstdint>

#include "fedleak/tensor.hpp"

namespace fedleak {

struct AdamHyper {
    float lr = 0.001f;
    float beta1 = 0.5f;
    float beta2 = 0.999f;
    float epsilon = 1e-7f;
};

struct AdamState {
    Tensor m;
    Tensor v;
    std::int64_t t = 0;
    AdamHyper hyper;
};

/// Zero moments shaped like `param`. Throws UsageError unless beta1, beta2 are in (0,1).
AdamState make_adam_state(const Tensor& param, const AdamHyper& hyper);

/// One Adam update in place. Note epsilon sits inside the square root:
///   w <- w - lr * m_hat / sqrt(v_hat + eps)
void adam_step(Tensor& param, const Tensor& grad, AdamState& state);

}  // namespace fedleak
