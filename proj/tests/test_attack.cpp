#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "fedleak/attack.hpp"
#include "fedleak/errors.hpp"
#include "fedleak/layers.hpp"
#include "oracles.hpp"

using namespace fedleak;

namespace {

// Small, but wide enough that the relu layers are not all dead at init.
const DiscriminatorArch kDisc{.image_size = 8, .conv1_channels = 4, .conv2_channels = 8, .hidden = 32, .classes = 11};
const GeneratorArch kGen{.noise_dim = 8, .image_size = 8, .base_channels = 4, .deconv1_channels = 4, .deconv2_channels = 4};

AdversaryState make_state(std::uint64_t seed, AttackConfig cfg = {}) {
    cfg.gan_epochs = cfg.gan_epochs == 500 ? 20 : cfg.gan_epochs;
    cfg.adversary_samples = 40;
    Rng rng(seed);
    return AdversaryState(cfg, GeneratorNet::random(rng, kGen), kDisc, seed + 100);
}

// A small classifier trained for a while on random images so it has opinions.
DiscriminatorNet pretrained_discriminator() {
    Rng rng(77);
    DiscriminatorNet net = DiscriminatorNet::random(rng, kDisc);
    ParamOptimizer opt(net.params, {.lr = 0.005f});
    std::vector<LabeledImage> data;
    for (int i = 0; i < 64; ++i) data.push_back({oracle::random_tensor(rng, {1, 8, 8}), i % 10});
    for (int epoch = 0; epoch < 20; ++epoch)
        for (std::size_t s = 0; s < data.size(); s += 16) train_batch(net, std::span(data).subspan(s, 16), opt);
    return net;
}

double mean_fake_probability(const DiscriminatorNet& net, const std::vector<Tensor>& images) {
    double p = 0.0;
    for (const auto& im : images) p += softmax(discriminator_logits(net, im))[kFakeClass];
    return p / static_cast<double>(images.size());
}

}  // namespace

TEST_CASE("sample_noise") {
    Rng a(1), b(1);
    const auto za = sample_noise(a, 100);
    const auto zb = sample_noise(b, 100);
    REQUIRE(za.size() == 100);
    double sum = 0.0;
    for (std::size_t i = 0; i < za.size(); ++i) {
        CHECK(za[i].shape() == Shape{100});
        CHECK(za[i] == zb[i]);
        for (float v : za[i].values()) {
            CHECK(v >= -1.0f);
            CHECK(v <= 1.0f);
            sum += v;
        }
    }
    CHECK(std::abs(sum / 10000.0) < 0.02);

    Rng g(2);
    double s1 = 0.0, s2 = 0.0;
    for (const auto& z : sample_noise(g, 200, 100, NoiseKind::gaussian))
        for (float v : z.values()) {
            s1 += v;
            s2 += static_cast<double>(v) * v;
        }
    CHECK(std::abs(s1 / 20000.0) < 0.03);
    CHECK(std::abs(s2 / 20000.0 - 1.0) < 0.05);

    CHECK(noise_from_string("gaussian") == NoiseKind::gaussian);
    CHECK(to_string(NoiseKind::uniform) == "uniform");
    CHECK_THROWS_AS(noise_from_string("laplace"), UsageError);
}

TEST_CASE("train_generator") {
    const DiscriminatorNet frozen = pretrained_discriminator();

    SUBCASE("discriminator is bitwise unchanged") {
        auto adv = make_state(1);
        const ParamSet before = frozen.params;
        train_generator(adv, frozen, 25, 16);
        CHECK(frozen.params == before);
    }
    SUBCASE("zero generator learning rate freezes the generator") {
        AttackConfig cfg;
        cfg.generator_optimizer.lr = 0.0f;
        auto adv = make_state(2, cfg);
        const ParamSet before = adv.generator.params;
        const Rng noise_start = adv.noise_rng;
        const float first = train_generator(adv, frozen, 10, 16);
        CHECK(adv.generator.params == before);
        adv.noise_rng = noise_start;
        CHECK(train_generator(adv, frozen, 10, 16) == first);
    }
    SUBCASE("loss falls over 500 epochs") {
        auto adv = make_state(3);
        const float first = train_generator(adv, frozen, 1, 16);
        const float last = train_generator(adv, frozen, 499, 16);
        INFO("first " << first << " last " << last);
        CHECK(last < first);
    }
    SUBCASE("argument errors") {
        auto adv = make_state(4);
        CHECK_THROWS_AS(train_generator(adv, frozen, 0, 16), UsageError);
        CHECK_THROWS_AS(train_generator(adv, frozen, 1, 0), UsageError);
    }
}

TEST_CASE("adversary_local_update") {
    Rng rng(5);
    const ParamSet global = DiscriminatorNet::random(rng, kDisc).params;

    SUBCASE("no samples returns the global model") {
        auto adv = make_state(6);
        CHECK(adversary_local_update(adv, global, 0) == global);
    }
    SUBCASE("non-degenerate update") {
        auto adv = make_state(7);
        const ParamSet up = adversary_local_update(adv, global, 40);
        bool moved = false;
        for (std::size_t t = 0; t < up.size(); ++t) {
            const Tensor& a = up.entries()[t].tensor;
            const Tensor& b = global.entries()[t].tensor;
            for (std::size_t i = 0; i < a.size(); ++i) moved |= std::abs(a[i] - b[i]) > 1e-6f;
        }
        CHECK(moved);
    }
    SUBCASE("generated samples are taught as the fake class") {
        auto adv = make_state(8);
        const ParamSet up = adversary_local_update(adv, global, 320);
        Rng probe(9);
        const auto images = snapshot_reconstruction(adv, 32, probe);
        const double before = mean_fake_probability(DiscriminatorNet{kDisc, global}, images);
        const double after = mean_fake_probability(DiscriminatorNet{kDisc, up}, images);
        INFO("fake probability " << before << " -> " << after);
        CHECK(after > before + 0.1);
    }
    SUBCASE("generator persists across rounds") {
        auto adv = make_state(10);
        const ParamSet init = adv.generator.params;
        adversary_local_update(adv, global, 16);
        const ParamSet after_one = adv.generator.params;
        adversary_local_update(adv, global, 16);
        CHECK_FALSE(after_one == init);
        CHECK_FALSE(adv.generator.params == after_one);
        CHECK_FALSE(adv.generator.params == init);
    }
    SUBCASE("foreign architecture") {
        auto adv = make_state(11);
        CHECK_THROWS_AS(adversary_local_update(adv, DiscriminatorNet::zeros().params, 4), DimensionError);
    }
}

TEST_CASE("snapshot_reconstruction") {
    auto adv = make_state(12);
    const ParamSet gen_before = adv.generator.params;
    const Rng noise_before = adv.noise_rng;
    Rng r1(3), r2(3);
    const auto a = snapshot_reconstruction(adv, 8, r1);
    const auto b = snapshot_reconstruction(adv, 8, r2);
    REQUIRE(a.size() == 8);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == b[i]);
        CHECK(a[i].shape() == Shape{1, 8, 8});
        for (float v : a[i].values()) CHECK((v >= -1.0f && v <= 1.0f));
    }
    CHECK(adv.generator.params == gen_before);
    CHECK(adv.noise_rng.next_u64() == Rng(noise_before).next_u64());
}

TEST_CASE("Adversary participant") {
    Rng rng(13);
    const ParamSet global = DiscriminatorNet::random(rng, kDisc).params;
    Adversary adv(10, make_state(14));
    CHECK(adv.role() == Role::adversary);
    CHECK(adv.local_update(global, {.round = 1, .attack_active = false}) == global);
    CHECK(adv.state().generator.params == make_state(14).generator.params);
    CHECK_FALSE(adv.local_update(global, {.round = 2, .attack_active = true}) == global);
}

TEST_CASE("adversary state validation") {
    AttackConfig cfg;
    cfg.target_class = 10;
    Rng rng(1);
    CHECK_THROWS_AS(AdversaryState(cfg, GeneratorNet::random(rng, kGen), kDisc, 1), UsageError);
    CHECK_THROWS_AS(AdversaryState(AttackConfig{}, GeneratorNet::random(rng, kGen), DiscriminatorArch{}, 1),
                    DimensionError);
}
