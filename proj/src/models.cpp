#include "fedleak/models.hpp"

#include <cmath>

#include "fedleak/errors.hpp"

namespace fedleak {

namespace {

constexpr int kConvStride = 2;
constexpr int kConvPadding = 1;
constexpr std::size_t kKernel = 3;

}  // namespace

// ---- ParamSet ----

void ParamSet::add(std::string name, Tensor tensor) {
    if (contains(name)) throw UsageError("duplicate parameter name '" + name + "'");
    entries_.push_back({std::move(name), std::move(tensor)});
}

Tensor& ParamSet::at(std::string_view name) {
    for (auto& e : entries_) {
        if (e.name == name) return e.tensor;
    }
    throw IndexError("no parameter named '" + std::string(name) + "'");
}

const Tensor& ParamSet::at(std::string_view name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return e.tensor;
    }
    throw IndexError("no parameter named '" + std::string(name) + "'");
}

bool ParamSet::contains(std::string_view name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return true;
    }
    return false;
}

std::size_t ParamSet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
}

bool ParamSet::same_layout(const ParamSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name != other.entries_[i].name) return false;
        if (entries_[i].tensor.shape() != other.entries_[i].tensor.shape()) return false;
    }
    return true;
}

ParamSet ParamSet::zeros_like() const {
    ParamSet out;
    for (const auto& e : entries_) out.add(e.name, Tensor(e.tensor.shape()));
    return out;
}

void ParamSet::add_scaled(const ParamSet& other, float scale) {
    if (!same_layout(other)) throw DimensionError("add_scaled: parameter layouts differ");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        float* dst = entries_[i].tensor.data();
        const float* src = other.entries_[i].tensor.data();
        const std::size_t n = entries_[i].tensor.size();
        for (std::size_t k = 0; k < n; ++k) dst[k] += scale * src[k];
    }
}

void ParamSet::scale(float factor) {
    for (auto& e : entries_) {
        for (auto& v : e.tensor.values()) v *= factor;
    }
}

// ---- architectures ----

std::size_t DiscriminatorArch::flat_size() const {
    const std::size_t s1 = conv_out_extent(image_size, kKernel, kConvStride, kConvPadding);
    const std::size_t s2 = conv_out_extent(s1, kKernel, kConvStride, kConvPadding);
    return conv2_channels * s2 * s2;
}

DiscriminatorNet DiscriminatorNet::zeros(const DiscriminatorArch& arch) {
    DiscriminatorNet net{arch, {}};
    net.params.add("conv1.weight", Tensor({arch.conv1_channels, 1, kKernel, kKernel}));
    net.params.add("conv1.bias", Tensor({arch.conv1_channels}));
    net.params.add("conv2.weight", Tensor({arch.conv2_channels, arch.conv1_channels, kKernel, kKernel}));
    net.params.add("conv2.bias", Tensor({arch.conv2_channels}));
    net.params.add("fc1.weight", Tensor({arch.hidden, arch.flat_size()}));
    net.params.add("fc1.bias", Tensor({arch.hidden}));
    net.params.add("fc2.weight", Tensor({arch.classes, arch.hidden}));
    net.params.add("fc2.bias", Tensor({arch.classes}));
    return net;
}

DiscriminatorNet DiscriminatorNet::random(Rng& rng, const DiscriminatorArch& arch) {
    auto net = zeros(arch);
    init_uniform_fan_in(net.params, rng);
    return net;
}

GeneratorNet GeneratorNet::zeros(const GeneratorArch& arch) {
    if (arch.image_size % 4 != 0) throw UsageError("generator image size must be a multiple of 4");
    const std::size_t base = arch.base_extent();
    GeneratorNet net{arch, {}};
    net.params.add("fc.weight", Tensor({arch.base_channels * base * base, arch.noise_dim}));
    net.params.add("fc.bias", Tensor({arch.base_channels * base * base}));
    net.params.add("deconv1.weight", Tensor({arch.base_channels, arch.deconv1_channels, kKernel, kKernel}));
    net.params.add("deconv1.bias", Tensor({arch.deconv1_channels}));
    net.params.add("deconv2.weight", Tensor({arch.deconv1_channels, arch.deconv2_channels, kKernel, kKernel}));
    net.params.add("deconv2.bias", Tensor({arch.deconv2_channels}));
    net.params.add("deconv3.weight", Tensor({arch.deconv2_channels, 1, kKernel, kKernel}));
    net.params.add("deconv3.bias", Tensor({1}));
    return net;
}

GeneratorNet GeneratorNet::random(Rng& rng, const GeneratorArch& arch) {
    auto net = zeros(arch);
    init_uniform_fan_in(net.params, rng);
    return net;
}

void init_uniform_fan_in(ParamSet& params, Rng& rng) {
    // Each bias shares the fan-in of the weight tensor before it.
    std::size_t fan_in = 1;
    for (auto& e : params.entries()) {
        const auto& shape = e.tensor.shape();
        if (shape.size() >= 2) {
            fan_in = 1;
            for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
            // Transposed-conv kernels are [C_in, C_out, k, k]; their fan-in is C_in*k*k.
            if (shape.size() == 4 && e.name.rfind("deconv", 0) == 0) fan_in = shape[0] * shape[2] * shape[3];
        }
        const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
        for (auto& v : e.tensor.values()) v = rng.uniform(-bound, bound);
    }
}

// ---- discriminator ----

namespace {

void check_discriminator_input(const DiscriminatorNet& net, const Tensor& image) {
    const Shape expected{1, net.arch.image_size, net.arch.image_size};
    if (image.shape() != expected) {
        throw DimensionError("discriminator expects input " + shape_str(expected) + ", got " +
                             shape_str(image.shape()));
    }
}

}  // namespace

DiscriminatorPass discriminator_forward(const DiscriminatorNet& net, const Tensor& image) {
    check_discriminator_input(net, image);
    const auto& p = net.params;
    DiscriminatorPass out;
    auto& tape = out.tape;
    tape.input = image;
    tape.conv1_pre = conv2d(image, p.at("conv1.weight"), p.at("conv1.bias"), kConvStride, kConvPadding);
    tape.conv1_act = relu(tape.conv1_pre);
    tape.conv2_pre = conv2d(tape.conv1_act, p.at("conv2.weight"), p.at("conv2.bias"), kConvStride, kConvPadding);
    tape.conv2_act = relu(tape.conv2_pre);
    tape.fc1_pre = linear(tape.conv2_act, p.at("fc1.weight"), p.at("fc1.bias"));
    tape.fc1_act = relu(tape.fc1_pre);
    out.logits = linear(tape.fc1_act, p.at("fc2.weight"), p.at("fc2.bias"));
    return out;
}

Tensor discriminator_logits(const DiscriminatorNet& net, const Tensor& image) {
    return discriminator_forward(net, image).logits;
}

NetGrads discriminator_backward(const DiscriminatorNet& net, DiscriminatorTape&& tape, const Tensor& grad_logits,
                                GradRequest request) {
    const auto& p = net.params;
    const GradRequest inner{.input = true, .params = request.params};

    auto fc2 = linear_backward(grad_logits, tape.fc1_act, p.at("fc2.weight"), inner);
    auto fc1 = linear_backward(relu_backward(fc2.input, tape.fc1_pre), tape.conv2_act, p.at("fc1.weight"), inner);
    Tensor g_conv2 = relu_backward(fc1.input.reshaped(tape.conv2_pre.shape()), tape.conv2_pre);
    auto conv2 = conv2d_backward(g_conv2, tape.conv1_act, p.at("conv2.weight"), kConvStride, kConvPadding, inner);
    Tensor g_conv1 = relu_backward(conv2.input, tape.conv1_pre);
    auto conv1 = conv2d_backward(g_conv1, tape.input, p.at("conv1.weight"), kConvStride, kConvPadding,
                                 {.input = request.input, .params = request.params});
    tape = {};

    NetGrads grads;
    if (request.params) {
        grads.params.add("conv1.weight", std::move(conv1.weight));
        grads.params.add("conv1.bias", std::move(conv1.bias));
        grads.params.add("conv2.weight", std::move(conv2.weight));
        grads.params.add("conv2.bias", std::move(conv2.bias));
        grads.params.add("fc1.weight", std::move(fc1.weight));
        grads.params.add("fc1.bias", std::move(fc1.bias));
        grads.params.add("fc2.weight", std::move(fc2.weight));
        grads.params.add("fc2.bias", std::move(fc2.bias));
    }
    if (request.input) grads.input = std::move(conv1.input);
    return grads;
}

// ---- generator ----

GeneratorPass generator_forward(const GeneratorNet& net, const Tensor& noise) {
    if (noise.size() != net.arch.noise_dim || noise.rank() != 1) {
        throw DimensionError("generator expects noise [" + std::to_string(net.arch.noise_dim) + "], got " +
                             shape_str(noise.shape()));
    }
    const auto& p = net.params;
    const std::size_t base = net.arch.base_extent();
    GeneratorPass out;
    auto& tape = out.tape;
    tape.noise = noise;
    tape.fc_pre = linear(noise, p.at("fc.weight"), p.at("fc.bias"));
    tape.base = relu(tape.fc_pre).reshaped({net.arch.base_channels, base, base});
    tape.deconv1_pre = conv_transpose2d(tape.base, p.at("deconv1.weight"), p.at("deconv1.bias"), 2, 1, 1);
    tape.deconv1_act = relu(tape.deconv1_pre);
    tape.deconv2_pre = conv_transpose2d(tape.deconv1_act, p.at("deconv2.weight"), p.at("deconv2.bias"), 2, 1, 1);
    tape.deconv2_act = relu(tape.deconv2_pre);
    tape.image = tanh_forward(conv_transpose2d(tape.deconv2_act, p.at("deconv3.weight"), p.at("deconv3.bias"), 1, 1, 0));
    out.image = tape.image;
    return out;
}

NetGrads generator_backward(const GeneratorNet& net, GeneratorTape&& tape, const Tensor& grad_image,
                            GradRequest request) {
    require_same_shape(grad_image, tape.image, "generator_backward");
    const auto& p = net.params;
    const GradRequest inner{.input = true, .params = request.params};

    Tensor g3 = tanh_backward(grad_image, tape.image);
    auto d3 = conv_transpose2d_backward(g3, tape.deconv2_act, p.at("deconv3.weight"), 1, 1, 0, inner);
    auto d2 = conv_transpose2d_backward(relu_backward(d3.input, tape.deconv2_pre), tape.deconv1_act,
                                        p.at("deconv2.weight"), 2, 1, 1, inner);
    auto d1 = conv_transpose2d_backward(relu_backward(d2.input, tape.deconv1_pre), tape.base, p.at("deconv1.weight"), 2,
                                        1, 1, inner);
    Tensor g_fc = relu_backward(d1.input.reshaped(tape.fc_pre.shape()), tape.fc_pre);
    auto fc = linear_backward(g_fc, tape.noise, p.at("fc.weight"), request);
    tape = {};

    NetGrads grads;
    if (request.params) {
        grads.params.add("fc.weight", std::move(fc.weight));
        grads.params.add("fc.bias", std::move(fc.bias));
        grads.params.add("deconv1.weight", std::move(d1.weight));
        grads.params.add("deconv1.bias", std::move(d1.bias));
        grads.params.add("deconv2.weight", std::move(d2.weight));
        grads.params.add("deconv2.bias", std::move(d2.bias));
        grads.params.add("deconv3.weight", std::move(d3.weight));
        grads.params.add("deconv3.bias", std::move(d3.bias));
    }
    if (request.input) grads.input = std::move(fc.input);
    return grads;
}

// ---- optimisation ----

ParamOptimizer::ParamOptimizer(const ParamSet& layout, const AdamHyper& hyper) : hyper_(hyper) {
    states_.reserve(layout.size());
    for (const auto& e : layout.entries()) states_.push_back(make_adam_state(e.tensor, hyper));
}

void ParamOptimizer::step(ParamSet& params, const ParamSet& grads) {
    if (params.size() != states_.size()) throw DimensionError("optimizer was built for a different parameter set");
    if (!params.same_layout(grads)) throw DimensionError("optimizer step: gradient layout differs from parameters");
    for (std::size_t i = 0; i < states_.size(); ++i) {
        adam_step(params.entries()[i].tensor, grads.entries()[i].tensor, states_[i]);
    }
    ++steps_;
}

float train_batch(DiscriminatorNet& net, std::span<const LabeledImage> batch, ParamOptimizer& optimizer) {
    if (batch.empty()) throw UsageError("train_batch: empty batch");
    const auto classes = static_cast<int>(net.arch.classes);
    ParamSet sum = net.params.zeros_like();
    float total_loss = 0.0f;
    for (const auto& example : batch) {
        if (example.label < 0 || example.label >= classes) {
            throw IndexError("train_batch: label " + std::to_string(example.label) + " outside [0," +
                             std::to_string(classes) + ")");
        }
        auto pass = discriminator_forward(net, example.pixels);
        auto loss = softmax_cross_entropy(pass.logits, example.label);
        total_loss += loss.loss;
        auto grads = discriminator_backward(net, std::move(pass.tape), loss.grad, {.input = false, .params = true});
        sum.add_scaled(grads.params, 1.0f);
    }
    const float inv = 1.0f / static_cast<float>(batch.size());
    sum.scale(inv);
    optimizer.step(net.params, sum);
    return total_loss * inv;
}

}  // namespace fedleak
