#include "fedleak/federation.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "fedleak/errors.hpp"

namespace fedleak {

BenignClient::BenignClient(int id, Partition partition, const DiscriminatorArch& arch,
                           const LocalTrainingConfig& config, std::uint64_t seed)
    : id_(id),
      partition_(std::move(partition)),
      local_(DiscriminatorNet::zeros(arch)),
      optimizer_(local_.params, config.optimizer),
      config_(config),
      seed_(seed) {
    if (config_.batch_size == 0) throw UsageError("batch_size must be >= 1");
}

ParamSet BenignClient::local_update(const ParamSet& global_params, const RoundContext& ctx) {
    return benign_local_update(*this, global_params, ctx.round);
}

ParamSet benign_local_update(BenignClient& client, const ParamSet& global_params, int round) {
    const auto& samples = client.partition_.samples;
    if (samples.empty()) {
        throw DataError("client " + std::to_string(client.id_) + " has an empty partition");
    }
    if (!global_params.same_layout(client.local_.params)) {
        throw DimensionError("client " + std::to_string(client.id_) + ": global parameters do not match architecture");
    }
    client.local_.params = global_params;

    Rng rng(derive_seed(client.seed_, {static_cast<std::uint64_t>(round)}));
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(client.config_.images_per_round, samples.size());
    // Partial Fisher-Yates: the first `take` slots become a uniform draw without replacement.
    for (std::size_t i = 0; i < take; ++i) std::swap(order[i], order[i + rng.below(order.size() - i)]);

    std::vector<LabeledImage> batch;
    for (std::size_t epoch = 0; epoch < client.config_.local_epochs; ++epoch) {
        for (std::size_t start = 0; start < take; start += client.config_.batch_size) {
            const std::size_t end = std::min(take, start + client.config_.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);
            train_batch(client.local_, batch, client.optimizer_);
        }
    }
    return client.local_.params;
}

ParamSet aggregate(std::span<const ParamSet> uploads, std::span<const int> client_ids) {
    if (uploads.empty()) throw AggregationError("aggregate: no uploads");
    const ParamSet& reference = uploads.front();
    auto who = [&](std::size_t i) {
        return i < client_ids.size() ? "client " + std::to_string(client_ids[i]) : "upload #" + std::to_string(i);
    };
    for (std::size_t i = 1; i < uploads.size(); ++i) {
        if (!uploads[i].same_layout(reference)) {
            throw AggregationError("aggregate: parameters from " + who(i) + " do not match the layout of " + who(0));
        }
    }

    // Double accumulation makes the mean of identical uploads exact.
    ParamSet mean = reference.zeros_like();
    const auto count = static_cast<double>(uploads.size());
    std::vector<double> acc;
    for (std::size_t t = 0; t < mean.size(); ++t) {
        const std::size_t n = mean.entries()[t].tensor.size();
        acc.assign(n, 0.0);
        for (const auto& upload : uploads) {
            const float* src = upload.entries()[t].tensor.data();
            for (std::size_t k = 0; k < n; ++k) acc[k] += src[k];
        }
        float* dst = mean.entries()[t].tensor.data();
        for (std::size_t k = 0; k < n; ++k) dst[k] = static_cast<float>(acc[k] / count);
    }
    return mean;
}

bool attack_gate(double validation_accuracy, double threshold) { return validation_accuracy > threshold; }

bool AttackGate::update(double validation_accuracy, int round) {
    if (!latched() && attack_gate(validation_accuracy, threshold_)) latched_round_ = round;
    return latched();
}

Evaluation evaluate(const DiscriminatorNet& net, std::span<const LabeledImage> testset) {
    Evaluation eval;
    if (testset.empty()) return eval;

    std::vector<int> truth;
    truth.reserve(testset.size());
    std::vector<std::vector<double>> class_scores(kRealClasses, std::vector<double>(testset.size()));
    eval.predictions.reserve(testset.size());
    for (std::size_t i = 0; i < testset.size(); ++i) {
        const Tensor logits = discriminator_logits(net, testset[i].pixels);
        const auto best = std::max_element(logits.values().begin(), logits.values().end());
        eval.predictions.push_back(static_cast<int>(best - logits.values().begin()));
        truth.push_back(testset[i].label);
        const Tensor probs = softmax(logits);
        for (int c = 0; c < kRealClasses; ++c) class_scores[static_cast<std::size_t>(c)][i] = probs[static_cast<std::size_t>(c)];
    }
    eval.scores = macro_scores(confusion(truth, eval.predictions, kRealClasses));

    for (int c = 0; c < kRealClasses; ++c) {
        std::vector<bool> positives(truth.size());
        for (std::size_t i = 0; i < truth.size(); ++i) positives[i] = truth[i] == c;
        try {
            eval.roc.push_back(roc_auc(class_scores[static_cast<std::size_t>(c)], positives));
        } catch (const MetricError&) {
            eval.roc.push_back({{}, std::numeric_limits<double>::quiet_NaN()});
        }
    }
    return eval;
}

RoundResult run_round(ParameterServer& server, std::span<const std::unique_ptr<Participant>> participants,
                      const DiscriminatorArch& arch, std::span<const LabeledImage> testset,
                      const RoundOptions& options) {
    if (participants.empty()) throw UsageError("run_round: no participants");
    const int round = server.round + 1;

    std::vector<std::size_t> chosen(participants.size());
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
    if (options.clients_per_round > 0 && options.clients_per_round < participants.size()) {
        Rng rng(derive_seed(options.selection_seed, {kSelectionStream, static_cast<std::uint64_t>(round)}));
        rng.shuffle(chosen);
        chosen.resize(options.clients_per_round);
        std::sort(chosen.begin(), chosen.end());
    }

    RoundResult result;
    std::vector<ParamSet> uploads;
    uploads.reserve(chosen.size());
    const RoundContext ctx{round, options.attack_active};
    for (auto index : chosen) {
        Participant& p = *participants[index];
        uploads.push_back(p.local_update(server.global_params, ctx));
        result.participants.push_back(p.id());
    }
    server.global_params = aggregate(uploads, result.participants);
    server.round = round;

    DiscriminatorNet global{arch, server.global_params};
    result.evaluation = evaluate(global, testset);
    auto& rec = result.record;
    rec.round = round;
    rec.accuracy = result.evaluation.scores.accuracy;
    rec.macro_precision = result.evaluation.scores.precision;
    rec.macro_recall = result.evaluation.scores.recall;
    rec.f1 = result.evaluation.scores.f1;
    for (const auto& curve : result.evaluation.roc) rec.per_class_auc.push_back(curve.auc);
    return result;
}

}  // namespace fedleak
