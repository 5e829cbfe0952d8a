#include "fedleak/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fedleak/checkpoint.hpp"
#include "fedleak/errors.hpp"
#include "fedleak/pgm.hpp"

namespace fedleak {

namespace {

LocalTrainingConfig local_training(const ExperimentConfig& c) {
    LocalTrainingConfig t;
    t.optimizer.lr = static_cast<float>(c.lr_discriminator);
    t.batch_size = c.batch_size;
    t.images_per_round = c.images_per_round;
    t.local_epochs = c.local_epochs;
    return t;
}

AttackConfig attack_config(const ExperimentConfig& c) {
    AttackConfig a;
    a.target_class = c.target_class;
    a.generator_optimizer.lr = static_cast<float>(c.lr_generator);
    a.discriminator_optimizer.lr = static_cast<float>(c.lr_discriminator);
    a.gan_epochs = c.gan_epochs;
    a.batch_size = c.batch_size;
    a.adversary_samples = c.adversary_samples;
    a.local_epochs = c.local_epochs;
    a.noise = c.noise;
    return a;
}

std::string fixed(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& config, const DatasetSplit& data) {
    validate(config);
    Experiment ex;
    ex.config = config;

    Rng partition_rng(derive_seed(config.master_seed, {kPartitionStream}));
    auto partitions = partition_by_class(data.train, config.samples_per_class, partition_rng);
    ex.target_samples = partitions.at(config.target_class).samples;

    const auto training = local_training(config);
    if (config.scenario == Scenario::eleven_user) {
        for (int c = 0; c < kRealClasses; ++c) {
            ex.participants.push_back(std::make_unique<BenignClient>(
                c, std::move(partitions.at(c)), ex.arch, training,
                derive_seed(config.master_seed, {kClientStream, static_cast<std::uint64_t>(c)})));
        }
    } else {
        ex.participants.push_back(std::make_unique<BenignClient>(
            0, std::move(partitions.at(config.target_class)), ex.arch, training,
            derive_seed(config.master_seed, {kClientStream, 0})));
    }

    Rng init_rng(derive_seed(config.master_seed, {kInitStream, 0}));
    ex.server.global_params = DiscriminatorNet::random(init_rng, ex.arch).params;
    Rng gen_rng(derive_seed(config.master_seed, {kInitStream, 1}));
    AdversaryState state(attack_config(config), GeneratorNet::random(gen_rng, ex.generator_arch), ex.arch,
                         derive_seed(config.master_seed, {kNoiseStream}));
    auto adversary = std::make_unique<Adversary>(static_cast<int>(ex.participants.size()), std::move(state));
    ex.adversary = adversary.get();
    ex.participants.push_back(std::move(adversary));

    const std::size_t n_test =
        config.eval_samples == 0 ? data.test.size() : std::min(config.eval_samples, data.test.size());
    ex.testset.assign(data.test.begin(), data.test.begin() + static_cast<std::ptrdiff_t>(n_test));
    return ex;
}

Experiment build_experiment(const ExperimentConfig& config) {
    validate(config);
    return build_experiment(config, load_dataset(config.dataset, resolve_data_dir(config)));
}

std::string metrics_csv_header() {
    std::string h = "round,accuracy,macro_precision,macro_recall,f1";
    for (int c = 0; c < kRealClasses; ++c) h += ",auc_c" + std::to_string(c);
    return h + ",recon_distance";
}

std::string metrics_csv_row(const RoundRecord& r) {
    std::string row = std::to_string(r.round) + "," + fixed(r.accuracy) + "," + fixed(r.macro_precision) + "," +
                      fixed(r.macro_recall) + "," + fixed(r.f1);
    for (std::size_t c = 0; c < static_cast<std::size_t>(kRealClasses); ++c) {
        row += "," + (c < r.per_class_auc.size() ? fixed(r.per_class_auc[c]) : std::string("nan"));
    }
    row += ",";
    if (r.reconstruction_distance) row += fixed(*r.reconstruction_distance);
    return row;
}

void write_roc_csv(const std::vector<RocCurve>& curves, const std::filesystem::path& path) {
    std::string text = "class,point,fpr,tpr,auc\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        for (std::size_t i = 0; i < curves[c].points.size(); ++i) {
            const auto& p = curves[c].points[i];
            text += std::to_string(c) + "," + std::to_string(i) + "," + fixed(p.fpr) + "," + fixed(p.tpr) + "," +
                    fixed(curves[c].auc) + "\n";
        }
    }
    write_text(path, text);
}

ExperimentResult run_experiment(Experiment& ex, const RoundCallback& on_round) {
    const ExperimentConfig& config = ex.config;
    const std::filesystem::path out = config.out_dir;
    std::filesystem::create_directories(out);
    write_text(out / "manifest.txt", to_manifest(config));

    std::ofstream csv(out / "metrics.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw Error("cannot write " + (out / "metrics.csv").string());
    csv << metrics_csv_header() << '\n';

    ExperimentResult result;
    result.out_dir = out;
    AttackGate gate(config.attack_threshold);
    RoundOptions options;
    options.clients_per_round = config.clients_per_round;
    options.selection_seed = derive_seed(config.master_seed, {kSelectionStream});

    Evaluation last_eval;
    for (int r = 1; r <= config.rounds; ++r) {
        options.attack_active = gate.latched();
        RoundResult round;
        try {
            round = run_round(ex.server, ex.participants, ex.arch, ex.testset, options);
        } catch (const Error& e) {
            throw Error("round " + std::to_string(r) + ": " + e.what());
        }
        RoundRecord& rec = round.record;

        const bool opened_now = !gate.latched() && gate.update(rec.accuracy, r);
        if (opened_now) {
            result.gate_round = r;
            write_roc_csv(round.evaluation.roc, out / ("roc_round" + std::to_string(r) + ".csv"));
        }
        if (gate.latched()) {
            // Same noise every round so the frames show one sample evolving.
            Rng snapshot_rng(derive_seed(config.master_seed, {kSnapshotStream}));
            const auto fakes = snapshot_reconstruction(ex.adversary->state(), config.recon_samples, snapshot_rng);
            rec.reconstruction_distance = reconstruction_distance(fakes, ex.target_samples);
            export_pgm(fakes.front(), out / ("recon_r" + std::to_string(r) + ".pgm"));
        }

        csv << metrics_csv_row(rec) << '\n';
        csv.flush();
        if (on_round) on_round(rec, options.attack_active);
        result.records.push_back(rec);
        last_eval = std::move(round.evaluation);
        if (config.stop_after_gate > 0 && gate.latched() && r >= gate.latched_round() + config.stop_after_gate) break;
    }

    const int last_round = result.records.back().round;
    if (last_round != result.gate_round) {
        write_roc_csv(last_eval.roc, out / ("roc_round" + std::to_string(last_round) + ".csv"));
    }
    save_checkpoint(ex.server.global_params, out / "global_final.flgm");
    save_checkpoint(ex.adversary->state().generator.params, out / "generator_final.flgm");
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RoundCallback& on_round) {
    ExperimentConfig resolved = config;
    resolved.data_dir = resolve_data_dir(config).string();
    Experiment ex = build_experiment(resolved);
    return run_experiment(ex, on_round);
}

}  // namespace fedleak
