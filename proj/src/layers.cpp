#include "fedleak/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedleak/errors.hpp"

namespace fedleak {

namespace {

float dot(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Geometry of one convolution in its "forward" direction: a [C,H,W] image is
// mapped onto P = OH*OW window positions.
struct Geometry {
    std::size_t channels, height, width;
    std::size_t kh, kw;
    std::size_t out_h, out_w;
    int stride, padding;

    std::size_t rows() const { return channels * kh * kw; }
    std::size_t positions() const { return out_h * out_w; }
};

// cols[(c*kh+ky)*kw+kx][oy*OW+ox] = image[c, oy*s-p+ky, ox*s-p+kx], zero outside.
std::vector<float> im2col(const float* image, const Geometry& g) {
    std::vector<float> cols(g.rows() * g.positions(), 0.0f);
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
                float* row = cols.data() + ((c * g.kh + ky) * g.kw + kx) * g.positions();
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const long iy = static_cast<long>(oy) * g.stride - g.padding + static_cast<long>(ky);
                    if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
                    const float* src = image + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const long ix = static_cast<long>(ox) * g.stride - g.padding + static_cast<long>(kx);
                        if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
                        row[oy * g.out_w + ox] = src[ix];
                    }
                }
            }
        }
    }
    return cols;
}

// Adjoint of im2col: scatter-add columns back onto the image.
void col2im(const std::vector<float>& cols, const Geometry& g, float* image) {
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
                const float* row = cols.data() + ((c * g.kh + ky) * g.kw + kx) * g.positions();
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const long iy = static_cast<long>(oy) * g.stride - g.padding + static_cast<long>(ky);
                    if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
                    float* dst = image + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const long ix = static_cast<long>(ox) * g.stride - g.padding + static_cast<long>(kx);
                        if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
                        dst[ix] += row[oy * g.out_w + ox];
                    }
                }
            }
        }
    }
}

void check_stride_padding(int stride, int padding, const char* op) {
    if (stride < 1) throw UsageError(std::string(op) + ": stride must be >= 1");
    if (padding < 0) throw UsageError(std::string(op) + ": padding must be >= 0");
}

void require_rank(const Tensor& t, std::size_t rank, const char* what, const char* op) {
    if (t.rank() != rank) {
        throw DimensionError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                             shape_str(t.shape()));
    }
}

// Validates conv2d operands and returns the geometry of the forward map.
Geometry conv2d_geometry(const Tensor& input, const Tensor& kernel, int stride, int padding, const char* op) {
    check_stride_padding(stride, padding, op);
    require_rank(input, 3, "input", op);
    require_rank(kernel, 4, "kernel", op);
    if (kernel.dim(1) != input.dim(0)) {
        throw DimensionError(std::string(op) + ": kernel " + shape_str(kernel.shape()) + " expects " +
                             std::to_string(kernel.dim(1)) + " input channels but input is " +
                             shape_str(input.shape()));
    }
    Geometry g{input.dim(0), input.dim(1), input.dim(2), kernel.dim(2), kernel.dim(3), 0, 0, stride, padding};
    g.out_h = conv_out_extent(g.height, g.kh, stride, padding);
    g.out_w = conv_out_extent(g.width, g.kw, stride, padding);
    return g;
}

// A transposed convolution from [C_in,H,W] to [C_out,OH,OW] is the adjoint of
// the conv2d from [C_out,OH,OW] to [C_in,H,W]; the returned geometry describes
// that conv2d (image = the transposed-conv output).
Geometry transpose_geometry(const Tensor& input, const Tensor& kernel, int stride, int padding, int output_padding,
                            const char* op) {
    check_stride_padding(stride, padding, op);
    if (output_padding < 0 || output_padding >= stride) {
        throw UsageError(std::string(op) + ": output_padding must be in [0, stride)");
    }
    require_rank(input, 3, "input", op);
    require_rank(kernel, 4, "kernel", op);
    if (kernel.dim(0) != input.dim(0)) {
        throw DimensionError(std::string(op) + ": kernel " + shape_str(kernel.shape()) + " expects " +
                             std::to_string(kernel.dim(0)) + " input channels but input is " +
                             shape_str(input.shape()));
    }
    Geometry g{kernel.dim(1), 0, 0, kernel.dim(2), kernel.dim(3), input.dim(1), input.dim(2), stride, padding};
    g.height = conv_transpose_out_extent(input.dim(1), g.kh, stride, padding, output_padding);
    g.width = conv_transpose_out_extent(input.dim(2), g.kw, stride, padding, output_padding);
    return g;
}

void require_bias(const Tensor& bias, std::size_t n, const char* op) {
    if (bias.rank() != 1 || bias.dim(0) != n) {
        throw DimensionError(std::string(op) + ": bias " + shape_str(bias.shape()) + " does not match " +
                             std::to_string(n) + " output channels");
    }
}

}  // namespace

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, int stride, int padding) {
    const long span = static_cast<long>(in) + 2L * padding - static_cast<long>(kernel);
    if (span < 0) {
        throw DimensionError("convolution kernel " + std::to_string(kernel) + " larger than padded input " +
                             std::to_string(in + 2 * static_cast<std::size_t>(padding)));
    }
    return static_cast<std::size_t>(span / stride) + 1;
}

std::size_t conv_transpose_out_extent(std::size_t in, std::size_t kernel, int stride, int padding,
                                      int output_padding) {
    const long out = (static_cast<long>(in) - 1) * stride - 2L * padding + static_cast<long>(kernel) + output_padding;
    if (out < 1) throw DimensionError("transposed convolution output extent would be " + std::to_string(out));
    return static_cast<std::size_t>(out);
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int padding) {
    const Geometry g = conv2d_geometry(input, kernel, stride, padding, "conv2d");
    const std::size_t out_channels = kernel.dim(0);
    require_bias(bias, out_channels, "conv2d");

    const auto cols = im2col(input.data(), g);
    const std::size_t rows = g.rows(), positions = g.positions();
    Tensor out({out_channels, g.out_h, g.out_w});
    for (std::size_t o = 0; o < out_channels; ++o) {
        float* dst = out.data() + o * positions;
        std::fill(dst, dst + positions, bias[o]);
        const float* k = kernel.data() + o * rows;
        for (std::size_t r = 0; r < rows; ++r) {
            if (k[r] != 0.0f) axpy(k[r], cols.data() + r * positions, dst, positions);
        }
    }
    return out;
}

LayerGrads conv2d_backward(const Tensor& grad_out, const Tensor& saved_input, const Tensor& kernel, int stride,
                           int padding, GradRequest request) {
    const Geometry g = conv2d_geometry(saved_input, kernel, stride, padding, "conv2d_backward");
    const std::size_t out_channels = kernel.dim(0);
    const Shape expected{out_channels, g.out_h, g.out_w};
    if (grad_out.shape() != expected) {
        throw DimensionError("conv2d_backward: grad_out " + shape_str(grad_out.shape()) + " does not match output " +
                             shape_str(expected));
    }
    const std::size_t rows = g.rows(), positions = g.positions();
    LayerGrads grads;

    if (request.params) {
        const auto cols = im2col(saved_input.data(), g);
        grads.weight = Tensor(kernel.shape());
        grads.bias = Tensor({out_channels});
        for (std::size_t o = 0; o < out_channels; ++o) {
            const float* go = grad_out.data() + o * positions;
            float sum = 0.0f;
            for (std::size_t p = 0; p < positions; ++p) sum += go[p];
            grads.bias[o] = sum;
            float* gk = grads.weight.data() + o * rows;
            for (std::size_t r = 0; r < rows; ++r) gk[r] = dot(go, cols.data() + r * positions, positions);
        }
    }
    if (request.input) {
        std::vector<float> grad_cols(rows * positions, 0.0f);
        for (std::size_t o = 0; o < out_channels; ++o) {
            const float* go = grad_out.data() + o * positions;
            const float* k = kernel.data() + o * rows;
            for (std::size_t r = 0; r < rows; ++r) {
                if (k[r] != 0.0f) axpy(k[r], go, grad_cols.data() + r * positions, positions);
            }
        }
        grads.input = Tensor(saved_input.shape());
        col2im(grad_cols, g, grads.input.data());
    }
    return grads;
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int padding,
                        int output_padding) {
    const Geometry g = transpose_geometry(input, kernel, stride, padding, output_padding, "conv_transpose2d");
    const std::size_t in_channels = input.dim(0);
    require_bias(bias, g.channels, "conv_transpose2d");

    const std::size_t rows = g.rows(), positions = g.positions();
    std::vector<float> cols(rows * positions, 0.0f);
    for (std::size_t ci = 0; ci < in_channels; ++ci) {
        const float* x = input.data() + ci * positions;
        const float* k = kernel.data() + ci * rows;
        for (std::size_t r = 0; r < rows; ++r) {
            if (k[r] != 0.0f) axpy(k[r], x, cols.data() + r * positions, positions);
        }
    }
    Tensor out({g.channels, g.height, g.width});
    const std::size_t plane = g.height * g.width;
    for (std::size_t co = 0; co < g.channels; ++co) std::fill(out.data() + co * plane, out.data() + (co + 1) * plane, bias[co]);
    col2im(cols, g, out.data());
    return out;
}

LayerGrads conv_transpose2d_backward(const Tensor& grad_out, const Tensor& saved_input, const Tensor& kernel,
                                     int stride, int padding, int output_padding, GradRequest request) {
    const Geometry g =
        transpose_geometry(saved_input, kernel, stride, padding, output_padding, "conv_transpose2d_backward");
    const Shape expected{g.channels, g.height, g.width};
    if (grad_out.shape() != expected) {
        throw DimensionError("conv_transpose2d_backward: grad_out " + shape_str(grad_out.shape()) +
                             " does not match output " + shape_str(expected));
    }
    const std::size_t in_channels = saved_input.dim(0);
    const std::size_t rows = g.rows(), positions = g.positions();
    const auto grad_cols = im2col(grad_out.data(), g);
    LayerGrads grads;

    if (request.params) {
        grads.weight = Tensor(kernel.shape());
        for (std::size_t ci = 0; ci < in_channels; ++ci) {
            const float* x = saved_input.data() + ci * positions;
            float* gk = grads.weight.data() + ci * rows;
            for (std::size_t r = 0; r < rows; ++r) gk[r] = dot(x, grad_cols.data() + r * positions, positions);
        }
        grads.bias = Tensor({g.channels});
        const std::size_t plane = g.height * g.width;
        for (std::size_t co = 0; co < g.channels; ++co) {
            const float* go = grad_out.data() + co * plane;
            float sum = 0.0f;
            for (std::size_t p = 0; p < plane; ++p) sum += go[p];
            grads.bias[co] = sum;
        }
    }
    if (request.input) {
        grads.input = Tensor(saved_input.shape());
        for (std::size_t ci = 0; ci < in_channels; ++ci) {
            float* gi = grads.input.data() + ci * positions;
            const float* k = kernel.data() + ci * rows;
            for (std::size_t r = 0; r < rows; ++r) {
                if (k[r] != 0.0f) axpy(k[r], grad_cols.data() + r * positions, gi, positions);
            }
        }
    }
    return grads;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    if (weight.rank() != 2 || weight.dim(1) != input.size()) {
        throw DimensionError("linear: weight " + shape_str(weight.shape()) + " does not accept input " +
                             shape_str(input.shape()));
    }
    const std::size_t n_out = weight.dim(0), n_in = weight.dim(1);
    require_bias(bias, n_out, "linear");
    Tensor out({n_out});
    for (std::size_t j = 0; j < n_out; ++j) out[j] = dot(weight.data() + j * n_in, input.data(), n_in) + bias[j];
    return out;
}

LayerGrads linear_backward(const Tensor& grad_out, const Tensor& saved_input, const Tensor& weight,
                           GradRequest request) {
    if (weight.rank() != 2 || weight.dim(1) != saved_input.size()) {
        throw DimensionError("linear_backward: weight " + shape_str(weight.shape()) + " does not accept input " +
                             shape_str(saved_input.shape()));
    }
    const std::size_t n_out = weight.dim(0), n_in = weight.dim(1);
    if (grad_out.size() != n_out) {
        throw DimensionError("linear_backward: grad_out " + shape_str(grad_out.shape()) + " does not match " +
                             std::to_string(n_out) + " outputs");
    }
    LayerGrads grads;
    if (request.params) {
        grads.weight = Tensor(weight.shape());
        grads.bias = Tensor({n_out});
        for (std::size_t j = 0; j < n_out; ++j) {
            grads.bias[j] = grad_out[j];
            if (grad_out[j] != 0.0f) axpy(grad_out[j], saved_input.data(), grads.weight.data() + j * n_in, n_in);
        }
    }
    if (request.input) {
        grads.input = Tensor(saved_input.shape());
        for (std::size_t j = 0; j < n_out; ++j) {
            if (grad_out[j] != 0.0f) axpy(grad_out[j], weight.data() + j * n_in, grads.input.data(), n_in);
        }
    }
    return grads;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.values()) v = v > 0.0f ? v : 0.0f;
    return y;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& saved_input) {
    require_same_shape(grad_out, saved_input, "relu_backward");
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(saved_input[i] > 0.0f)) g[i] = 0.0f;
    }
    return g;
}

Tensor tanh_forward(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.values()) v = std::tanh(v);
    return y;
}

Tensor tanh_backward(const Tensor& grad_out, const Tensor& saved_output) {
    require_same_shape(grad_out, saved_output, "tanh_backward");
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0f - saved_output[i] * saved_output[i];
    return g;
}

Tensor softmax(const Tensor& logits) {
    Tensor p = logits;
    float max_logit = -std::numeric_limits<float>::infinity();
    for (float v : logits.values()) max_logit = std::max(max_logit, v);
    float sum = 0.0f;
    for (auto& v : p.values()) {
        v = std::exp(v - max_logit);
        sum += v;
    }
    for (auto& v : p.values()) v /= sum;
    return p;
}

LossGrad softmax_cross_entropy(const Tensor& logits, int target_class) {
    const auto k = static_cast<int>(logits.size());
    if (target_class < 0 || target_class >= k) {
        throw IndexError("softmax_cross_entropy: target class " + std::to_string(target_class) + " outside [0," +
                         std::to_string(k) + ")");
    }
    float max_logit = -std::numeric_limits<float>::infinity();
    for (float v : logits.values()) max_logit = std::max(max_logit, v);
    float sum = 0.0f;
    for (float v : logits.values()) sum += std::exp(v - max_logit);
    const float log_sum = std::log(sum);

    LossGrad out;
    out.loss = log_sum - (logits[static_cast<std::size_t>(target_class)] - max_logit);
    out.grad = Tensor(logits.shape());
    for (std::size_t i = 0; i < logits.size(); ++i) out.grad[i] = std::exp(logits[i] - max_logit - log_sum);
    out.grad[static_cast<std::size_t>(target_class)] -= 1.0f;
    return out;
}

}  // namespace fedleak
