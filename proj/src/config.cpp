#include "fedleak/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fedleak/errors.hpp"

namespace fedleak {

std::string to_string(Scenario scenario) { return scenario == Scenario::two_user ? "two_user" : "eleven_user"; }

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "scenario",          "dataset",          "target_class",      "rounds",         "attack_threshold",
        "lr_discriminator",  "lr_generator",     "batch_size",        "local_epochs",   "gan_epochs",
        "images_per_round",  "adversary_samples", "samples_per_class", "noise",          "master_seed",
        "data_dir",          "out_dir",          "clients_per_round", "stop_after_gate", "recon_samples",
        "eval_samples",
    };
    return keys;
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
    Int out{};
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected an integer, got '" + value + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    char* end = nullptr;
    errno = 0;
    const double out = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
        throw ConfigError(key + ": expected a real number, got '" + value + "'");
    }
    return out;
}

void set_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
    try {
        if (key == "scenario") {
            if (value == "two_user") c.scenario = Scenario::two_user;
            else if (value == "eleven_user") c.scenario = Scenario::eleven_user;
            else throw ConfigError("scenario: expected two_user or eleven_user, got '" + value + "'");
        } else if (key == "dataset") {
            c.dataset = dataset_from_string(value);
        } else if (key == "target_class") {
            c.target_class = parse_int<int>(key, value);
        } else if (key == "rounds") {
            c.rounds = parse_int<int>(key, value);
        } else if (key == "attack_threshold") {
            c.attack_threshold = parse_real(key, value);
        } else if (key == "lr_discriminator") {
            c.lr_discriminator = parse_real(key, value);
        } else if (key == "lr_generator") {
            c.lr_generator = parse_real(key, value);
        } else if (key == "batch_size") {
            c.batch_size = parse_int<std::size_t>(key, value);
        } else if (key == "local_epochs") {
            c.local_epochs = parse_int<std::size_t>(key, value);
        } else if (key == "gan_epochs") {
            c.gan_epochs = parse_int<std::size_t>(key, value);
        } else if (key == "images_per_round") {
            c.images_per_round = parse_int<std::size_t>(key, value);
        } else if (key == "adversary_samples") {
            c.adversary_samples = parse_int<std::size_t>(key, value);
        } else if (key == "samples_per_class") {
            c.samples_per_class = parse_int<std::size_t>(key, value);
        } else if (key == "noise") {
            c.noise = noise_from_string(value);
        } else if (key == "master_seed") {
            c.master_seed = parse_int<std::uint64_t>(key, value);
        } else if (key == "data_dir") {
            c.data_dir = value;
        } else if (key == "out_dir") {
            c.out_dir = value;
        } else if (key == "clients_per_round") {
            c.clients_per_round = parse_int<std::size_t>(key, value);
        } else if (key == "stop_after_gate") {
            c.stop_after_gate = parse_int<int>(key, value);
        } else if (key == "recon_samples") {
            c.recon_samples = parse_int<std::size_t>(key, value);
        } else if (key == "eval_samples") {
            c.eval_samples = parse_int<std::size_t>(key, value);
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    } catch (const UsageError& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

void require(bool ok, const std::string& key, const std::string& constraint) {
    if (!ok) throw ConfigError(key + ": must satisfy " + constraint);
}

std::string real_str(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
        }
        set_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    validate(config);
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    ExperimentConfig updated = config;
    set_value(updated, key, value);
    validate(updated);
    updated.overrides.push_back(key + "=" + value);
    config = std::move(updated);
}

std::vector<std::string> validate(const ExperimentConfig& c) {
    require(c.target_class >= 0 && c.target_class < kRealClasses, "target_class", "0 <= target_class < 10");
    require(c.rounds >= 1, "rounds", "rounds >= 1");
    require(c.attack_threshold > 0.0 && c.attack_threshold < 1.0, "attack_threshold", "0 < threshold < 1");
    require(c.lr_discriminator >= 0.0, "lr_discriminator", "lr >= 0");
    require(c.lr_generator >= 0.0, "lr_generator", "lr >= 0");
    require(c.batch_size >= 1, "batch_size", "batch_size >= 1");
    require(c.images_per_round >= 1, "images_per_round", "images_per_round >= 1");
    require(c.samples_per_class >= 1, "samples_per_class", "samples_per_class >= 1");
    require(c.stop_after_gate >= 0, "stop_after_gate", "stop_after_gate >= 0");
    require(c.recon_samples >= 1, "recon_samples", "recon_samples >= 1");

    std::vector<std::string> warnings;
    const bool paired = (c.scenario == Scenario::two_user && c.dataset == DatasetKind::cifar10) ||
                        (c.scenario == Scenario::eleven_user && c.dataset != DatasetKind::cifar10);
    if (!paired) {
        warnings.push_back("scenario " + to_string(c.scenario) + " with dataset " + to_string(c.dataset) +
                           " is unusual (expected two_user/cifar10, eleven_user/mnist|fashion_mnist)");
    }
    return warnings;
}

std::filesystem::path resolve_data_dir(const ExperimentConfig& config) {
    if (!config.data_dir.empty()) return config.data_dir;
    if (const char* env = std::getenv("FEDLEAK_DATA_DIR"); env && *env) return env;
    throw ConfigError("data_dir: not set and FEDLEAK_DATA_DIR is empty");
}

std::string to_manifest(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "# resolved experiment configuration\n";
    for (const auto& o : c.overrides) os << "# override: " << o << '\n';
    os << "scenario = " << to_string(c.scenario) << '\n'
       << "dataset = " << to_string(c.dataset) << '\n'
       << "target_class = " << c.target_class << '\n'
       << "rounds = " << c.rounds << '\n'
       << "attack_threshold = " << real_str(c.attack_threshold) << '\n'
       << "lr_discriminator = " << real_str(c.lr_discriminator) << '\n'
       << "lr_generator = " << real_str(c.lr_generator) << '\n'
       << "batch_size = " << c.batch_size << '\n'
       << "local_epochs = " << c.local_epochs << '\n'
       << "gan_epochs = " << c.gan_epochs << '\n'
       << "images_per_round = " << c.images_per_round << '\n'
       << "adversary_samples = " << c.adversary_samples << '\n'
       << "samples_per_class = " << c.samples_per_class << '\n'
       << "noise = " << to_string(c.noise) << '\n'
       << "master_seed = " << c.master_seed << '\n'
       << "data_dir = " << c.data_dir << '\n'
       << "out_dir = " << c.out_dir << '\n'
       << "clients_per_round = " << c.clients_per_round << '\n'
       << "stop_after_gate = " << c.stop_after_gate << '\n'
       << "recon_samples = " << c.recon_samples << '\n'
       << "eval_samples = " << c.eval_samples << '\n';
    return os.str();
}

}  // namespace fedleak
