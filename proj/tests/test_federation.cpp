#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "data_dir.hpp"
#include "fedleak/errors.hpp"
#include "fedleak/federation.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace fedleak;

namespace {

ParamSet single(std::vector<float> values) {
    const std::size_t n = values.size();
    ParamSet p;
    p.add("w", Tensor({n}, std::move(values)));
    return p;
}

// Uploads a fixed ParamSet regardless of the global model.
class StubClient final : public Participant {
public:
    StubClient(int id, ParamSet upload) : id_(id), upload_(std::move(upload)) {}
    int id() const override { return id_; }
    Role role() const override { return Role::benign; }
    ParamSet local_update(const ParamSet&, const RoundContext& ctx) override {
        seen_rounds.push_back(ctx.round);
        return upload_;
    }
    std::vector<int> seen_rounds;

private:
    int id_;
    ParamSet upload_;
};

class EchoClient final : public Participant {
public:
    explicit EchoClient(int id) : id_(id) {}
    int id() const override { return id_; }
    Role role() const override { return Role::benign; }
    ParamSet local_update(const ParamSet& global, const RoundContext&) override { return global; }

private:
    int id_;
};

// Two easily separated synthetic classes: bright left half versus bright right half.
LabeledImage half_image(Rng& rng, int label) {
    Tensor t({1, 28, 28});
    for (std::size_t y = 0; y < 28; ++y)
        for (std::size_t x = 0; x < 28; ++x) {
            const bool lit = (x < 14) == (label == 0);
            t.at(0, y, x) = (lit ? 0.6f : -0.6f) + rng.uniform(-0.4f, 0.4f);
        }
    return {t, label};
}

Partition synthetic_partition(Rng& rng, int cls, std::size_t n) {
    Partition p{cls, {}};
    for (std::size_t i = 0; i < n; ++i) p.samples.push_back(half_image(rng, cls));
    return p;
}

}  // namespace

TEST_CASE("aggregate") {
    SUBCASE("two-point mean") {
        const std::vector<ParamSet> ups{single({1, 3}), single({3, 5})};
        CHECK(aggregate(ups).at("w") == Tensor({2}, std::vector<float>{2, 4}));
    }
    SUBCASE("single upload is returned unchanged") {
        const std::vector<ParamSet> ups{single({0.1f, -7.25f, 3e-8f})};
        CHECK(aggregate(ups) == ups[0]);
    }
    SUBCASE("mean of identical copies is exact") {
        Rng rng(4);
        const auto net = DiscriminatorNet::random(rng, gradcheck::tiny_discriminator());
        for (std::size_t k : {2u, 3u, 7u, 11u}) {
            const std::vector<ParamSet> ups(k, net.params);
            CHECK(aggregate(ups) == net.params);
        }
    }
    SUBCASE("stays within the elementwise range of the uploads") {
        Rng rng(6);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<ParamSet> ups;
            const std::size_t k = 1 + rng.below(11);
            for (std::size_t i = 0; i < k; ++i) {
                ParamSet p;
                p.add("a", oracle::random_tensor(rng, {5, 3}, -100.0f, 100.0f));
                p.add("b", oracle::random_tensor(rng, {4}));
                ups.push_back(std::move(p));
            }
            const ParamSet mean = aggregate(ups);
            for (std::size_t t = 0; t < mean.size(); ++t) {
                const Tensor& m = mean.entries()[t].tensor;
                for (std::size_t j = 0; j < m.size(); ++j) {
                    float lo = ups[0].entries()[t].tensor[j], hi = lo;
                    for (const auto& u : ups) {
                        lo = std::min(lo, u.entries()[t].tensor[j]);
                        hi = std::max(hi, u.entries()[t].tensor[j]);
                    }
                    CHECK(m[j] >= lo);
                    CHECK(m[j] <= hi);
                }
            }
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(aggregate({}), AggregationError);
        const std::vector<ParamSet> ups{single({1, 2}), single({1, 2}), single({1, 2, 3})};
        const std::vector<int> ids{4, 8, 9};
        try {
            aggregate(ups, ids);
            FAIL("expected an aggregation error");
        } catch (const AggregationError& e) {
            CHECK(std::string(e.what()).find("client 9") != std::string::npos);
        }
    }
}

TEST_CASE("attack gate") {
    CHECK(attack_gate(0.91, 0.90));
    CHECK_FALSE(attack_gate(0.90, 0.90));

    AttackGate gate(0.90);
    CHECK_FALSE(gate.update(0.5, 1));
    CHECK_FALSE(gate.update(0.90, 2));
    CHECK(gate.update(0.91, 3));
    CHECK(gate.update(0.5, 4));
    CHECK(gate.update(0.95, 5));
    CHECK(gate.latched_round() == 3);
}

TEST_CASE("benign_local_update") {
    const auto arch = gradcheck::tiny_discriminator();
    Rng data_rng(1);
    Partition part{2, {}};
    for (int i = 0; i < 60; ++i) part.samples.push_back({oracle::random_tensor(data_rng, {1, 8, 8}), 2});
    Rng init(2);
    const ParamSet global = DiscriminatorNet::random(init, arch).params;

    SUBCASE("zero learning rate is a no-op") {
        LocalTrainingConfig cfg;
        cfg.optimizer.lr = 0.0f;
        BenignClient client(0, part, arch, cfg, 5);
        CHECK(benign_local_update(client, global, 1) == global);
    }
    SUBCASE("deterministic for equal seeds, varies with the round") {
        BenignClient a(0, part, arch, {}, 5), b(0, part, arch, {}, 5), c(0, part, arch, {}, 5);
        const ParamSet ua = benign_local_update(a, global, 1);
        CHECK(ua == benign_local_update(b, global, 1));
        CHECK_FALSE(ua == global);
        CHECK_FALSE(ua == benign_local_update(c, global, 2));
    }
    SUBCASE("empty partition") {
        BenignClient client(3, Partition{3, {}}, arch, {}, 5);
        CHECK_THROWS_AS(benign_local_update(client, global, 1), DataError);
    }
    SUBCASE("foreign architecture") {
        BenignClient client(0, part, arch, {}, 5);
        CHECK_THROWS_AS(benign_local_update(client, DiscriminatorNet::zeros().params, 1), DimensionError);
    }
}

TEST_CASE("run_round") {
    const auto arch = gradcheck::tiny_discriminator();
    Rng rng(3);
    const ParamSet start = DiscriminatorNet::random(rng, arch).params;
    std::vector<LabeledImage> testset;
    for (int i = 0; i < 20; ++i) testset.push_back({oracle::random_tensor(rng, {1, 8, 8}), i % 10});

    SUBCASE("clients echoing the global model leave it unchanged") {
        ParameterServer server{start, 0};
        std::vector<std::unique_ptr<Participant>> ps;
        for (int i = 0; i < 3; ++i) ps.push_back(std::make_unique<EchoClient>(i));
        const auto r1 = run_round(server, ps, arch, testset, {});
        CHECK(server.round == 1);
        CHECK(server.global_params == start);
        run_round(server, ps, arch, testset, {});
        CHECK(server.round == 2);
        CHECK(server.global_params == start);
        CHECK(r1.record.round == 1);
        CHECK(r1.participants == std::vector<int>{0, 1, 2});
    }
    SUBCASE("stub uploads average to their hand-computed mean") {
        auto with_value = [&](float v) {
            ParamSet p = start.zeros_like();
            for (auto& e : p.entries()) e.tensor.fill(v);
            return p;
        };
        ParameterServer server{start, 0};
        std::vector<std::unique_ptr<Participant>> ps;
        ps.push_back(std::make_unique<StubClient>(0, with_value(1.0f)));
        ps.push_back(std::make_unique<StubClient>(1, with_value(2.0f)));
        ps.push_back(std::make_unique<StubClient>(2, with_value(6.0f)));
        run_round(server, ps, arch, testset, {});
        CHECK(server.global_params == with_value(3.0f));
        CHECK(static_cast<StubClient&>(*ps[0]).seen_rounds == std::vector<int>{1});
    }
    SUBCASE("subset selection is seeded and sized") {
        std::vector<std::unique_ptr<Participant>> ps;
        for (int i = 0; i < 6; ++i) ps.push_back(std::make_unique<EchoClient>(i));
        ParameterServer s1{start, 0}, s2{start, 0};
        RoundOptions opt{.clients_per_round = 3, .selection_seed = 99};
        const auto a = run_round(s1, ps, arch, testset, opt);
        const auto b = run_round(s2, ps, arch, testset, opt);
        CHECK(a.participants.size() == 3);
        CHECK(a.participants == b.participants);
    }
    SUBCASE("untrained model sits near chance on the 11-way argmax") {
        ParameterServer server{start, 0};
        std::vector<std::unique_ptr<Participant>> ps;
        ps.push_back(std::make_unique<EchoClient>(0));
        const auto r = run_round(server, ps, arch, testset, {});
        CHECK(r.record.accuracy <= 0.5);
        CHECK(r.record.per_class_auc.size() == 10);
    }
}

TEST_CASE("two single-class clients learn their classes") {
    Rng data_rng(7);
    const DiscriminatorArch arch;
    std::vector<std::unique_ptr<Participant>> ps;
    for (int c = 0; c < 2; ++c) {
        ps.push_back(std::make_unique<BenignClient>(c, synthetic_partition(data_rng, c, 200), arch,
                                                    LocalTrainingConfig{}, derive_seed(1, {kClientStream, std::uint64_t(c)})));
    }
    std::vector<LabeledImage> testset;
    for (int i = 0; i < 100; ++i) testset.push_back(half_image(data_rng, i % 2));

    Rng init(derive_seed(1, {kInitStream}));
    ParameterServer server{DiscriminatorNet::random(init, arch).params, 0};
    double acc = 0.0;
    for (int r = 0; r < 30; ++r) acc = run_round(server, ps, arch, testset, {}).record.accuracy;
    CHECK(acc > 0.9);
}

TEST_CASE("two MNIST clients learn digits 0 and 1") {
    const auto dir = mnist_dir();
    if (!dir) {
        MESSAGE("MNIST not available; set FEDLEAK_DATA_DIR to run this case");
        return;
    }
    const auto split = load_dataset(DatasetKind::mnist, *dir);
    Rng part_rng(3);
    auto parts = partition_by_class(split.train, 200, part_rng);
    const DiscriminatorArch arch;
    std::vector<std::unique_ptr<Participant>> ps;
    for (int c = 0; c < 2; ++c)
        ps.push_back(std::make_unique<BenignClient>(c, std::move(parts.at(c)), arch, LocalTrainingConfig{},
                                                    derive_seed(3, {kClientStream, std::uint64_t(c)})));
    std::vector<LabeledImage> testset;
    for (const auto& s : split.test)
        if (s.label < 2 && testset.size() < 400) testset.push_back(s);

    Rng init(derive_seed(3, {kInitStream}));
    ParameterServer server{DiscriminatorNet::random(init, arch).params, 0};
    double acc = 0.0;
    for (int r = 0; r < 30; ++r) acc = run_round(server, ps, arch, testset, {}).record.accuracy;
    CHECK(acc > 0.9);
}
