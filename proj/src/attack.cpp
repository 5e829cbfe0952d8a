#include "fedleak/attack.hpp"

#include <algorithm>

#include "fedleak/errors.hpp"

namespace fedleak {

std::string to_string(NoiseKind kind) { return kind == NoiseKind::uniform ? "uniform" : "gaussian"; }

NoiseKind noise_from_string(const std::string& name) {
    if (name == "uniform") return NoiseKind::uniform;
    if (name == "gaussian") return NoiseKind::gaussian;
    throw UsageError("unknown noise '" + name + "' (expected uniform or gaussian)");
}

std::vector<Tensor> sample_noise(Rng& rng, std::size_t n, std::size_t dim, NoiseKind kind) {
    std::vector<Tensor> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Tensor z({dim});
        for (auto& v : z.values()) v = kind == NoiseKind::uniform ? rng.uniform(-1.0f, 1.0f) : rng.normal();
        out.push_back(std::move(z));
    }
    return out;
}

AdversaryState::AdversaryState(const AttackConfig& cfg, GeneratorNet gen, const DiscriminatorArch& arch,
                               std::uint64_t noise_seed)
    : config(cfg),
      generator(std::move(gen)),
      generator_optimizer(generator.params, cfg.generator_optimizer),
      local(DiscriminatorNet::zeros(arch)),
      local_optimizer(local.params, cfg.discriminator_optimizer),
      noise_rng(noise_seed) {
    if (cfg.target_class < 0 || cfg.target_class >= kRealClasses) {
        throw UsageError("target class " + std::to_string(cfg.target_class) + " outside [0,10)");
    }
    if (cfg.batch_size == 0) throw UsageError("attack batch_size must be >= 1");
    if (generator.arch.image_size != arch.image_size) {
        throw DimensionError("generator image size does not match the discriminator input");
    }
}

float train_generator(AdversaryState& adv, const DiscriminatorNet& frozen, std::size_t epochs,
                      std::size_t batch_size) {
    if (epochs == 0) throw UsageError("train_generator: epochs must be >= 1");
    if (batch_size == 0) throw UsageError("train_generator: batch_size must be >= 1");
    if (frozen.params.size() == 0) throw DimensionError("train_generator: empty discriminator");

    const float inv = 1.0f / static_cast<float>(batch_size);
    float last_loss = 0.0f;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        const auto noise = sample_noise(adv.noise_rng, batch_size, adv.generator.arch.noise_dim, adv.config.noise);
        ParamSet sum = adv.generator.params.zeros_like();
        float loss_sum = 0.0f;
        for (const auto& z : noise) {
            auto gen = generator_forward(adv.generator, z);
            auto disc = discriminator_forward(frozen, gen.image);
            auto loss = softmax_cross_entropy(disc.logits, adv.config.target_class);
            loss_sum += loss.loss;
            auto d_grads = discriminator_backward(frozen, std::move(disc.tape), loss.grad, {.input = true, .params = false});
            auto g_grads = generator_backward(adv.generator, std::move(gen.tape), d_grads.input);
            sum.add_scaled(g_grads.params, 1.0f);
        }
        sum.scale(inv);
        adv.generator_optimizer.step(adv.generator.params, sum);
        last_loss = loss_sum * inv;
    }
    return last_loss;
}

ParamSet adversary_local_update(AdversaryState& adv, const ParamSet& global_params, std::size_t n_samples) {
    if (!global_params.same_layout(adv.local.params)) {
        throw DimensionError("adversary: global parameters do not match architecture");
    }
    adv.local.params = global_params;
    if (adv.config.gan_epochs > 0) {
        adv.last_generator_loss = train_generator(adv, adv.local, adv.config.gan_epochs, adv.config.batch_size);
    }
    if (n_samples == 0) return global_params;

    std::vector<LabeledImage> fakes;
    fakes.reserve(n_samples);
    for (const auto& z : sample_noise(adv.noise_rng, n_samples, adv.generator.arch.noise_dim, adv.config.noise)) {
        fakes.push_back({generator_forward(adv.generator, z).image, kFakeClass});
    }
    for (std::size_t epoch = 0; epoch < adv.config.local_epochs; ++epoch) {
        for (std::size_t start = 0; start < fakes.size(); start += adv.config.batch_size) {
            const std::size_t end = std::min(fakes.size(), start + adv.config.batch_size);
            train_batch(adv.local, std::span<const LabeledImage>(fakes).subspan(start, end - start),
                        adv.local_optimizer);
        }
    }
    return adv.local.params;
}

std::vector<Tensor> snapshot_reconstruction(const AdversaryState& adv, std::size_t n, Rng& rng) {
    std::vector<Tensor> images;
    images.reserve(n);
    for (const auto& z : sample_noise(rng, n, adv.generator.arch.noise_dim, adv.config.noise)) {
        images.push_back(generator_forward(adv.generator, z).image);
    }
    return images;
}

ParamSet Adversary::local_update(const ParamSet& global_params, const RoundContext& ctx) {
    if (!ctx.attack_active) return global_params;
    return adversary_local_update(state_, global_params, state_.config.adversary_samples);
}

}  // namespace fedleak
