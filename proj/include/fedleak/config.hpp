#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fedleak/attack.hpp"
#include "fedleak/data.hpp"

namespace fedleak {

enum class Scenario { two_user, eleven_user };

std::string to_string(Scenario scenario);

struct ExperimentConfig {
    Scenario scenario = Scenario::eleven_user;
    DatasetKind dataset = DatasetKind::mnist;
    int target_class = 1;
    int rounds = 100;
    double attack_threshold = 0.90;
    double lr_discriminator = 0.005;
    double lr_generator = 0.001;
    std::size_t batch_size = 16;
    std::size_t local_epochs = 1;
    std::size_t gan_epochs = 500;
    std::size_t images_per_round = 50;
    std::size_t adversary_samples = 5000;
    std::size_t samples_per_class = 5000;
    NoiseKind noise = NoiseKind::uniform;
    std::uint64_t master_seed = 1;
    std::string data_dir;  // empty: FEDLEAK_DATA_DIR
    std::string out_dir = "run";

    // Run controls; the defaults change nothing.
    std::size_t clients_per_round = 0;  // 0 = all clients every round
    int stop_after_gate = 0;            // >0: end the run this many rounds after the gate opens
    std::size_t recon_samples = 64;     // generated images per reconstruction-distance estimate
    std::size_t eval_samples = 0;       // 0 = whole test set

    /// Flag overrides applied on top of the file, in order, as key=value.
    std::vector<std::string> overrides;
};

/// Names of every accepted key, in manifest order.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines ('#' starts a comment). Unknown keys and
/// out-of-range values raise ConfigError naming the key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one `key=value` override and records it.
void apply_override(ExperimentConfig& config, const std::string& assignment);

/// Throws ConfigError on invalid values; returns warnings (e.g. unusual
/// scenario/dataset pairings).
std::vector<std::string> validate(const ExperimentConfig& config);

/// data_dir, or FEDLEAK_DATA_DIR when data_dir is empty. Throws ConfigError if neither is set.
std::filesystem::path resolve_data_dir(const ExperimentConfig& config);

/// Every resolved value as `key = value` lines, loadable with parse_config.
std::string to_manifest(const ExperimentConfig& config);

}  // namespace fedleak
