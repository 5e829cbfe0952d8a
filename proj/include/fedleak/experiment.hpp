#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fedleak/attack.hpp"
#include "fedleak/config.hpp"
#include "fedleak/federation.hpp"

namespace fedleak {

/// A ready-to-run federation: server, clients, adversary, validation data.
struct Experiment {
    ExperimentConfig config;
    DiscriminatorArch arch;
    GeneratorArch generator_arch;
    ParameterServer server;
    std::vector<std::unique_ptr<Participant>> participants;
    Adversary* adversary = nullptr;  // owned by participants
    std::vector<LabeledImage> testset;
    std::vector<LabeledImage> target_samples;  // the victim's partition, for the distance metric
};

/// eleven_user: benign clients 0..9 own classes 0..9, adversary is id 10.
/// two_user: client 0 owns the target class, adversary is id 1.
Experiment build_experiment(const ExperimentConfig& config, const DatasetSplit& data);
/// Loads the configured dataset first.
Experiment build_experiment(const ExperimentConfig& config);

struct ExperimentResult {
    std::vector<RoundRecord> records;
    int gate_round = -1;
    std::filesystem::path out_dir;
};

using RoundCallback = std::function<void(const RoundRecord& record, bool attack_active)>;

/// Round loop with attack gating. Writes into config.out_dir:
///   manifest.txt, metrics.csv, roc_round<g>.csv (gate and final round),
///   recon_r<k>.pgm (gate round onward), global_final.flgm, generator_final.flgm
ExperimentResult run_experiment(Experiment& experiment, const RoundCallback& on_round = {});
ExperimentResult run_experiment(const ExperimentConfig& config, const RoundCallback& on_round = {});

std::string metrics_csv_header();
std::string metrics_csv_row(const RoundRecord& record);
void write_roc_csv(const std::vector<RocCurve>& curves, const std::filesystem::path& path);

}  // namespace fedleak
