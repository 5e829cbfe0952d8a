#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fedleak/data.hpp"
#include "fedleak/metrics.hpp"
#include "fedleak/models.hpp"

namespace fedleak {

struct ParameterServer {
    ParamSet global_params;
    int round = 0;
};

enum class Role { benign, adversary };

struct RoundContext {
    int round = 0;
    bool attack_active = false;
};

/// A federation member: downloads the global model, returns its upload.
class Participant {
public:
    virtual ~Participant() = default;
    virtual int id() const = 0;
    virtual Role role() const = 0;
    virtual ParamSet local_update(const ParamSet& global_params, const RoundContext& ctx) = 0;
};

struct LocalTrainingConfig {
    AdamHyper optimizer{.lr = 0.005f};
    std::size_t batch_size = 16;
    std::size_t images_per_round = 50;
    std::size_t local_epochs = 1;
};

/// Honest client holding one class. Its partition never leaves this object.
class BenignClient final : public Participant {
public:
    BenignClient(int id, Partition partition, const DiscriminatorArch& arch, const LocalTrainingConfig& config,
                 std::uint64_t seed);

    int id() const override { return id_; }
    Role role() const override { return Role::benign; }
    ParamSet local_update(const ParamSet& global_params, const RoundContext& ctx) override;

    int owner_class() const noexcept { return partition_.owner_class; }
    const ParamSet& local_params() const noexcept { return local_.params; }

private:
    friend ParamSet benign_local_update(BenignClient& client, const ParamSet& global_params, int round);

    int id_;
    Partition partition_;
    DiscriminatorNet local_;
    ParamOptimizer optimizer_;
    LocalTrainingConfig config_;
    std::uint64_t seed_;
};

/// Loads the global model, then one pass (per local epoch) over
/// `images_per_round` images drawn without replacement from the partition,
/// in batches of `batch_size`. Sampling is seeded by (client seed, round).
ParamSet benign_local_update(BenignClient& client, const ParamSet& global_params, int round);

/// Elementwise mean. `client_ids`, when given, name offenders in errors.
ParamSet aggregate(std::span<const ParamSet> uploads, std::span<const int> client_ids = {});

/// accuracy > threshold (strictly).
bool attack_gate(double validation_accuracy, double threshold);

/// attack_gate that stays open once it has opened.
class AttackGate {
public:
    explicit AttackGate(double threshold = 0.90) : threshold_(threshold) {}

    /// Feeds one round's accuracy; returns whether the gate is open afterwards.
    bool update(double validation_accuracy, int round);
    bool latched() const noexcept { return latched_round_ >= 0; }
    int latched_round() const noexcept { return latched_round_; }
    double threshold() const noexcept { return threshold_; }

private:
    double threshold_;
    int latched_round_ = -1;
};

struct Evaluation {
    MacroScores scores;
    std::vector<RocCurve> roc;  // one-vs-rest per real class
    std::vector<int> predictions;
};

/// Argmax over all logits (fake-class predictions count as errors), macro
/// scores over the real classes, ROC per real class from softmax scores.
Evaluation evaluate(const DiscriminatorNet& net, std::span<const LabeledImage> testset);

struct RoundOptions {
    std::size_t clients_per_round = 0;  // 0 = everyone
    std::uint64_t selection_seed = 0;
    bool attack_active = false;
};

struct RoundResult {
    RoundRecord record;
    Evaluation evaluation;
    std::vector<int> participants;  // ids that uploaded
};

/// download -> local updates -> aggregate -> validate; increments server.round.
RoundResult run_round(ParameterServer& server, std::span<const std::unique_ptr<Participant>> participants,
                      const DiscriminatorArch& arch, std::span<const LabeledImage> testset,
                      const RoundOptions& options);

}  // namespace fedleak
