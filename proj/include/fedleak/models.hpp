#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedleak/adam.hpp"
#include "fedleak/layers.hpp"
#include "fedleak/rng.hpp"
#include "fedleak/tensor.hpp"

namespace fedleak {

inline constexpr int kRealClasses = 10;
inline constexpr int kFakeClass = 10;  // the 11th logit
inline constexpr int kOutputClasses = 11;

struct ParamEntry {
    std::string name;
    Tensor tensor;

    friend bool operator==(const ParamEntry&, const ParamEntry&) = default;
};

/// Named, ordered parameter tensors. This is what clients and the server exchange.
class ParamSet {
public:
    void add(std::string name, Tensor tensor);

    Tensor& at(std::string_view name);
    const Tensor& at(std::string_view name) const;
    bool contains(std::string_view name) const;

    std::vector<ParamEntry>& entries() noexcept { return entries_; }
    const std::vector<ParamEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t parameter_count() const;

    /// Same names in the same order with the same shapes.
    bool same_layout(const ParamSet& other) const;
    ParamSet zeros_like() const;

    /// this += other (layouts must match)
    void add_scaled(const ParamSet& other, float scale);
    void scale(float factor);

    friend bool operator==(const ParamSet&, const ParamSet&) = default;

private:
    std::vector<ParamEntry> entries_;
};

struct LabeledImage {
    Tensor pixels;  // [1,S,S], values in [-1,1]
    int label = 0;
};

struct DiscriminatorArch {
    std::size_t image_size = 28;
    std::size_t conv1_channels = 32;
    std::size_t conv2_channels = 64;
    std::size_t hidden = 200;
    std::size_t classes = kOutputClasses;

    std::size_t flat_size() const;
    friend bool operator==(const DiscriminatorArch&, const DiscriminatorArch&) = default;
};

struct GeneratorArch {
    std::size_t noise_dim = 100;
    std::size_t image_size = 28;
    std::size_t base_channels = 32;
    std::size_t deconv1_channels = 32;
    std::size_t deconv2_channels = 16;

    std::size_t base_extent() const { return image_size / 4; }
    friend bool operator==(const GeneratorArch&, const GeneratorArch&) = default;
};

/// Two stride-2 convolutions, then two linear layers. Logit 10 is the fake class.
struct DiscriminatorNet {
    DiscriminatorArch arch;
    ParamSet params;

    static DiscriminatorNet zeros(const DiscriminatorArch& arch = {});
    static DiscriminatorNet random(Rng& rng, const DiscriminatorArch& arch = {});
};

/// Noise -> linear -> three transposed convolutions -> tanh image.
struct GeneratorNet {
    GeneratorArch arch;
    ParamSet params;

    static GeneratorNet zeros(const GeneratorArch& arch = {});
    static GeneratorNet random(Rng& rng, const GeneratorArch& arch = {});
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) on every weight and bias.
void init_uniform_fan_in(ParamSet& params, Rng& rng);

// Activations saved by a forward pass; a backward pass consumes them once.
struct DiscriminatorTape {
    Tensor input;
    Tensor conv1_pre, conv1_act;
    Tensor conv2_pre, conv2_act;
    Tensor fc1_pre, fc1_act;
};

struct GeneratorTape {
    Tensor noise;
    Tensor fc_pre, base;  // base is relu(fc_pre) reshaped to [C,S/4,S/4]
    Tensor deconv1_pre, deconv1_act;
    Tensor deconv2_pre, deconv2_act;
    Tensor image;
};

struct DiscriminatorPass {
    Tensor logits;
    DiscriminatorTape tape;
};

struct GeneratorPass {
    Tensor image;
    GeneratorTape tape;
};

struct NetGrads {
    ParamSet params;  // empty unless requested
    Tensor input;     // empty unless requested
};

DiscriminatorPass discriminator_forward(const DiscriminatorNet& net, const Tensor& image);
/// Logits only; nothing is kept for a backward pass.
Tensor discriminator_logits(const DiscriminatorNet& net, const Tensor& image);
NetGrads discriminator_backward(const DiscriminatorNet& net, DiscriminatorTape&& tape, const Tensor& grad_logits,
                                GradRequest request = {});

GeneratorPass generator_forward(const GeneratorNet& net, const Tensor& noise);
NetGrads generator_backward(const GeneratorNet& net, GeneratorTape&& tape, const Tensor& grad_image,
                            GradRequest request = {.input = false, .params = true});

/// One Adam state per tensor of a ParamSet.
class ParamOptimizer {
public:
    ParamOptimizer() = default;
    ParamOptimizer(const ParamSet& layout, const AdamHyper& hyper);

    void step(ParamSet& params, const ParamSet& grads);
    const AdamHyper& hyper() const noexcept { return hyper_; }
    std::int64_t steps() const noexcept { return steps_; }
    const std::vector<AdamState>& states() const noexcept { return states_; }

private:
    AdamHyper hyper_;
    std::vector<AdamState> states_;
    std::int64_t steps_ = 0;
};

/// Batch-averaged cross-entropy gradient, one optimizer step. Returns the mean loss.
float train_batch(DiscriminatorNet& net, std::span<const LabeledImage> batch, ParamOptimizer& optimizer);

}  // namespace fedleak
