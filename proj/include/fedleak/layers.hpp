#pragma once

#include "fedleak/tensor.hpp"

namespace fedleak {

// Forward/backward kernels for the layers the two networks use.
//
// Convolution kernels are [C_out, C_in, kH, kW]; transposed-convolution
// kernels are [C_in, C_out, kH, kW], so that conv_transpose2d with kernel K
// is exactly the input gradient of conv2d with the same K.

/// Which gradients a backward pass should produce. Skipped gradients come back empty.
struct GradRequest {
    bool input = true;
    bool params = true;
};

struct LayerGrads {
    Tensor input;
    Tensor weight;
    Tensor bias;
};

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, int stride, int padding);
std::size_t conv_transpose_out_extent(std::size_t in, std::size_t kernel, int stride, int padding, int output_padding);

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int padding);
LayerGrads conv2d_backward(const Tensor& grad_out, const Tensor& saved_input, const Tensor& kernel, int stride,
                           int padding, GradRequest request = {});

Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int padding,
                        int output_padding);
LayerGrads conv_transpose2d_backward(const Tensor& grad_out, const Tensor& saved_input, const Tensor& kernel,
                                     int stride, int padding, int output_padding, GradRequest request = {});

/// out[j] = sum_i weight[j,i] * input[i] + bias[j]. Input of any shape is read flat.
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);
LayerGrads linear_backward(const Tensor& grad_out, const Tensor& saved_input, const Tensor& weight,
                           GradRequest request = {});

Tensor relu(const Tensor& x);
// Masks by the forward input: gradient passes where x > 0.
Tensor relu_backward(const Tensor& grad_out, const Tensor& saved_input);

Tensor tanh_forward(const Tensor& x);
// Takes the forward *output* y = tanh(x): grad * (1 - y^2).
Tensor tanh_backward(const Tensor& grad_out, const Tensor& saved_output);

Tensor softmax(const Tensor& logits);

struct LossGrad {
    float loss = 0.0f;
    Tensor grad;
};

/// -log softmax(logits)[target] and its gradient softmax - onehot.
LossGrad softmax_cross_entropy(const Tensor& logits, int target_class);

}  // namespace fedleak
