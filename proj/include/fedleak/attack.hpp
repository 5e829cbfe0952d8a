#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedleak/federation.hpp"
#include "fedleak/models.hpp"
#include "fedleak/rng.hpp"

namespace fedleak {

enum class NoiseKind { uniform, gaussian };

std::string to_string(NoiseKind kind);
NoiseKind noise_from_string(const std::string& name);

/// n noise vectors of length `dim`: i.i.d. U[-1,1] or N(0,1).
std::vector<Tensor> sample_noise(Rng& rng, std::size_t n, std::size_t dim = 100,
                                 NoiseKind kind = NoiseKind::uniform);

struct AttackConfig {
    int target_class = 1;
    AdamHyper generator_optimizer{.lr = 0.001f};
    AdamHyper discriminator_optimizer{.lr = 0.005f};
    std::size_t gan_epochs = 500;
    std::size_t batch_size = 16;
    std::size_t adversary_samples = 5000;
    std::size_t local_epochs = 1;
    NoiseKind noise = NoiseKind::uniform;
};

/// Everything the attacker keeps between rounds. The generator and its
/// optimizer persist for the whole experiment.
struct AdversaryState {
    AttackConfig config;
    GeneratorNet generator;
    ParamOptimizer generator_optimizer;
    DiscriminatorNet local;
    ParamOptimizer local_optimizer;
    Rng noise_rng;
    float last_generator_loss = 0.0f;

    AdversaryState(const AttackConfig& config, GeneratorNet generator, const DiscriminatorArch& arch,
                   std::uint64_t noise_seed);
};

/// Trains the generator so that `frozen` classifies G(z) as the target class.
/// Each epoch is one batch of fresh noise; only the generator is updated.
/// Returns the mean loss of the last epoch.
float train_generator(AdversaryState& adv, const DiscriminatorNet& frozen, std::size_t epochs,
                      std::size_t batch_size);

/// Loads the global model, trains the generator against it, labels
/// `n_samples` generated images with the fake class and trains the local copy
/// on them. With no samples the global model is returned as is.
ParamSet adversary_local_update(AdversaryState& adv, const ParamSet& global_params, std::size_t n_samples);

/// Fresh generator samples; touches no training state.
std::vector<Tensor> snapshot_reconstruction(const AdversaryState& adv, std::size_t n, Rng& rng);

/// The attacker as a federation member. Before the attack starts it has no
/// data and uploads what it downloaded.
class Adversary final : public Participant {
public:
    Adversary(int id, AdversaryState state) : id_(id), state_(std::move(state)) {}

    int id() const override { return id_; }
    Role role() const override { return Role::adversary; }
    ParamSet local_update(const ParamSet& global_params, const RoundContext& ctx) override;

    AdversaryState& state() noexcept { return state_; }
    const AdversaryState& state() const noexcept { return state_; }

private:
    int id_;
    AdversaryState state_;
};

}  // namespace fedleak
