// Command-line front end: run experiments, inspect checkpoints, export reconstructions.

#include <cmath>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "fedleak/attack.hpp"
#include "fedleak/checkpoint.hpp"
#include "fedleak/errors.hpp"
#include "fedleak/experiment.hpp"
#include "fedleak/pgm.hpp"

using namespace fedleak;

namespace {

int run_command(const std::string& config_path, const std::vector<std::string>& overrides, bool quiet) {
    ExperimentConfig config = config_path.empty() ? parse_config("") : load_config(config_path);
    for (const auto& o : overrides) apply_override(config, o);
    for (const auto& w : validate(config)) std::cerr << "warning: " << w << '\n';
    config.data_dir = resolve_data_dir(config).string();

    auto result = run_experiment(config, [quiet](const RoundRecord& r, bool attacking) {
        if (quiet) return;
        std::printf("round %4d  acc %.4f  P %.4f  R %.4f  F1 %.4f", r.round, r.accuracy, r.macro_precision,
                    r.macro_recall, r.f1);
        if (r.reconstruction_distance) std::printf("  dist %.4f", *r.reconstruction_distance);
        std::printf("%s\n", attacking ? "  [attack]" : "");
        std::fflush(stdout);
    });
    if (result.gate_round > 0) {
        std::printf("attack gate opened at round %d\n", result.gate_round);
    } else {
        std::printf("attack gate never opened\n");
    }
    std::printf("artifacts in %s\n", result.out_dir.string().c_str());
    return 0;
}

int inspect_command(const std::string& path) {
    const ParamSet params = load_checkpoint(path);
    std::printf("%s: %zu tensors, %zu parameters\n", path.c_str(), params.size(), params.parameter_count());
    for (const auto& e : params.entries()) {
        double sum = 0.0, sq = 0.0;
        for (float v : e.tensor.values()) {
            sum += v;
            sq += static_cast<double>(v) * v;
        }
        const auto n = static_cast<double>(e.tensor.size());
        std::printf("  %-16s %-18s mean % .6f  rms %.6f\n", e.name.c_str(), shape_str(e.tensor.shape()).c_str(),
                    sum / n, std::sqrt(sq / n));
    }
    return 0;
}

int export_command(const std::string& path, int target, std::size_t count, const std::string& out_dir,
                   std::uint64_t seed, std::size_t gan_epochs) {
    if (target < 0 || target >= kRealClasses) throw UsageError("--target must be in [0,10)");
    const ParamSet params = load_checkpoint(path);
    const GeneratorArch gen_arch;
    const DiscriminatorArch disc_arch;

    AttackConfig attack;
    attack.target_class = target;
    Rng init_rng(derive_seed(seed, {kInitStream, 1}));
    AdversaryState adv(attack, GeneratorNet::random(init_rng, gen_arch), disc_arch, derive_seed(seed, {kNoiseStream}));

    if (params.same_layout(adv.generator.params)) {
        adv.generator.params = params;
    } else if (params.same_layout(adv.local.params)) {
        // A classifier checkpoint: invert it by training a fresh generator toward the target class.
        const DiscriminatorNet frozen{disc_arch, params};
        const float loss = train_generator(adv, frozen, gan_epochs, attack.batch_size);
        std::printf("trained generator for %zu epochs against %s, final loss %.4f\n", gan_epochs, path.c_str(), loss);
    } else {
        throw CheckpointError(path + " is neither a generator nor a classifier checkpoint");
    }

    std::filesystem::create_directories(out_dir);
    Rng rng(derive_seed(seed, {kSnapshotStream}));
    const auto images = snapshot_reconstruction(adv, count, rng);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto file = std::filesystem::path(out_dir) /
                          ("recon_c" + std::to_string(target) + "_" + std::to_string(i) + ".pgm");
        export_pgm(images[i], file);
    }
    std::printf("wrote %zu images to %s\n", images.size(), out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated learning simulator with a GAN reconstruction adversary"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run an experiment");
    run->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    run->add_option("--override", overrides, "key=value, applied after the file")->allow_extra_args(false);
    run->add_flag("-q,--quiet", quiet, "No per-round output");

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect-checkpoint", "Describe a checkpoint file");
    inspect->add_option("checkpoint", inspect_path)->required()->check(CLI::ExistingFile);

    std::string export_path, out_dir = "recon";
    int target = 1;
    std::size_t count = 16, gan_epochs = 500;
    std::uint64_t seed = 1;
    auto* exporter = app.add_subcommand("export-recon", "Write generated images as PGM files");
    exporter->add_option("checkpoint", export_path, "generator or classifier checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    exporter->add_option("--target", target, "Target class")->required();
    exporter->add_option("-n,--count", count, "Number of images")->required();
    exporter->add_option("--out", out_dir, "Output directory");
    exporter->add_option("--seed", seed, "Noise seed");
    exporter->add_option("--gan-epochs", gan_epochs, "Generator epochs when inverting a classifier checkpoint");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return run_command(config_path, overrides, quiet);
        if (*inspect) return inspect_command(inspect_path);
        if (*exporter) return export_command(export_path, target, count, out_dir, seed, gan_epochs);
    } catch (const fedleak::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
