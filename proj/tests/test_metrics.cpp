#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fedleak/errors.hpp"
#include "fedleak/metrics.hpp"
#include "oracles.hpp"

using namespace fedleak;

TEST_CASE("confusion counts") {
    SUBCASE("hand tally") {
        const std::vector<int> t{0, 0, 1, 1, 2, 2}, p{0, 1, 1, 1, 2, 0};
        const auto c = confusion(t, p, 3);
        CHECK(c.total == 6);
        const auto& k0 = c.per_class[0];
        const auto& k1 = c.per_class[1];
        const auto& k2 = c.per_class[2];
        CHECK((k0.tp == 1 && k0.fp == 1 && k0.fn == 1 && k0.tn == 3));
        CHECK((k1.tp == 2 && k1.fp == 1 && k1.fn == 0 && k1.tn == 3));
        CHECK((k2.tp == 1 && k2.fp == 0 && k2.fn == 1 && k2.tn == 4));
    }
    SUBCASE("perfect") {
        const std::vector<int> y{0, 1, 2};
        for (const auto& k : confusion(y, y, 3).per_class) CHECK((k.tp == 1 && k.fp == 0 && k.fn == 0));
    }
    SUBCASE("fake-class predictions are misses and nobody's false positive") {
        const std::vector<int> t{0, 1, 1}, p{10, 10, 1};
        const auto c = confusion(t, p, 10);
        CHECK(c.per_class[0].fn == 1);
        CHECK(c.per_class[1].fn == 1);
        CHECK(c.per_class[1].tp == 1);
        for (const auto& k : c.per_class) {
            CHECK(k.fp == 0);
            CHECK(k.tp + k.fp + k.tn + k.fn == 3);
        }
    }
    SUBCASE("empty") {
        const auto c = confusion({}, {}, 10);
        CHECK(c.total == 0);
        for (const auto& k : c.per_class) CHECK((k.tp == 0 && k.fp == 0 && k.tn == 0 && k.fn == 0));
    }
    SUBCASE("length mismatch") {
        const std::vector<int> t{0, 1}, p{0};
        CHECK_THROWS_AS(confusion(t, p, 10), UsageError);
    }
}

TEST_CASE("macro_scores") {
    SUBCASE("hand tally") {
        const std::vector<int> t{0, 0, 1, 1, 2, 2}, p{0, 1, 1, 1, 2, 0};
        const auto s = macro_scores(confusion(t, p, 3));
        CHECK(std::abs(s.precision - 0.7222) < 1e-4);
        CHECK(std::abs(s.recall - 0.6667) < 1e-4);
        CHECK(std::abs(s.f1 - 0.6933) < 1e-4);
        CHECK(std::abs(s.accuracy - 0.6667) < 1e-4);
    }
    SUBCASE("perfect") {
        std::vector<int> y;
        for (int i = 0; i < 40; ++i) y.push_back(i % 10);
        const auto s = macro_scores(confusion(y, y, 10));
        CHECK(s.accuracy == 1.0);
        CHECK(s.precision == 1.0);
        CHECK(s.recall == 1.0);
        CHECK(s.f1 == 1.0);
    }
    SUBCASE("everything predicted fake") {
        std::vector<int> y, fake;
        for (int i = 0; i < 40; ++i) {
            y.push_back(i % 10);
            fake.push_back(10);
        }
        const auto s = macro_scores(confusion(y, fake, 10));
        CHECK(s.accuracy == 0.0);
        CHECK(s.precision == 0.0);
        CHECK(s.recall == 0.0);
        CHECK(s.f1 == 0.0);
    }
    SUBCASE("invariant to sample order, values in range, f1 from macro P and R") {
        Rng rng(17);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<int> t(60), p(60);
            for (auto& v : t) v = static_cast<int>(rng.below(10));
            for (auto& v : p) v = static_cast<int>(rng.below(11));
            const auto a = macro_scores(confusion(t, p, 10));
            std::vector<std::size_t> order(t.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            rng.shuffle(order);
            std::vector<int> t2, p2;
            for (auto i : order) {
                t2.push_back(t[i]);
                p2.push_back(p[i]);
            }
            const auto b = macro_scores(confusion(t2, p2, 10));
            CHECK(a.precision == b.precision);
            CHECK(a.recall == b.recall);
            CHECK(a.accuracy == b.accuracy);
            for (double v : {a.accuracy, a.precision, a.recall, a.f1}) CHECK((v >= 0.0 && v <= 1.0));
            const double pr = a.precision + a.recall;
            CHECK(a.f1 == doctest::Approx(pr == 0.0 ? 0.0 : 2 * a.precision * a.recall / pr).epsilon(1e-12));
        }
    }
}

TEST_CASE("roc_auc") {
    SUBCASE("perfect separation") {
        const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
        const auto r = roc_auc(s, {true, true, false, false});
        CHECK(r.auc == 1.0);
        CHECK(r.points.front().fpr == 0.0);
        CHECK(r.points.front().tpr == 0.0);
        CHECK(r.points.back().fpr == 1.0);
        CHECK(r.points.back().tpr == 1.0);
    }
    SUBCASE("hand example") {
        const std::vector<double> s{0.9, 0.4, 0.7, 0.1};
        CHECK(roc_auc(s, {true, true, false, false}).auc == doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("all tied scores give the diagonal") {
        const std::vector<double> s(6, 0.5);
        const auto r = roc_auc(s, {true, false, true, false, false, true});
        CHECK(r.auc == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(r.points.size() == 2);
    }
    SUBCASE("single class") {
        const std::vector<double> s{0.1, 0.2};
        CHECK_THROWS_AS(roc_auc(s, {true, true}), MetricError);
        CHECK_THROWS_AS(roc_auc(s, {false, false}), MetricError);
    }
    SUBCASE("matches Mann-Whitney pair counting and complement symmetry") {
        Rng rng(2024);
        int cases = 0;
        while (cases < 1000) {
            const std::size_t n = 2 + rng.below(49);
            std::vector<double> s(n);
            std::vector<bool> pos(n), neg(n);
            // Coarse grid so ties are common.
            for (auto& v : s) v = static_cast<double>(rng.below(8)) / 8.0;
            for (std::size_t i = 0; i < n; ++i) {
                pos[i] = rng.below(2) == 1;
                neg[i] = !pos[i];
            }
            if (std::count(pos.begin(), pos.end(), true) == 0 || std::count(neg.begin(), neg.end(), true) == 0) continue;
            ++cases;
            const double auc = roc_auc(s, pos).auc;
            CHECK(std::abs(auc - oracle::mann_whitney_auc(s, pos)) <= 1e-9);
            CHECK(std::abs(auc + roc_auc(s, neg).auc - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("reconstruction_distance") {
    SUBCASE("fakes equal to the class mean") {
        Rng rng(3);
        std::vector<LabeledImage> target;
        for (int i = 0; i < 4; ++i) target.push_back({oracle::random_tensor(rng, {1, 28, 28}), 1});
        const Tensor mean = class_mean_image(target);
        const std::vector<Tensor> fakes{mean, mean};
        CHECK(reconstruction_distance(fakes, target) == 0.0);
    }
    SUBCASE("two-pixel image") {
        const std::vector<Tensor> fakes{Tensor({2}, std::vector<float>{1.0f, 0.0f})};
        const std::vector<LabeledImage> target{{Tensor({2}), 1}};
        CHECK(reconstruction_distance(fakes, target) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    }
    SUBCASE("averages per-sample RMS over fakes") {
        const std::vector<Tensor> fakes{Tensor({4}, 1.0f), Tensor({4}, -0.5f)};
        const std::vector<LabeledImage> target{{Tensor({4}, 0.25f), 1}, {Tensor({4}, -0.25f), 1}};
        CHECK(reconstruction_distance(fakes, target) == doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("translation consistent") {
        // Dyadic values keep every shift exact in 32-bit.
        Rng rng(11);
        auto dyadic = [&] {
            Tensor t({1, 28, 28});
            for (auto& v : t.values()) v = static_cast<float>(static_cast<int>(rng.below(17)) - 8) / 16.0f;
            return t;
        };
        std::vector<Tensor> fakes;
        std::vector<LabeledImage> target;
        for (int i = 0; i < 3; ++i) fakes.push_back(dyadic());
        for (int i = 0; i < 4; ++i) target.push_back({dyadic(), 1});
        const double base = reconstruction_distance(fakes, target);
        for (float c : {0.25f, -0.5f}) {
            auto shifted_fakes = fakes;
            auto shifted_target = target;
            for (auto& f : shifted_fakes)
                for (auto& v : f.values()) v += c;
            for (auto& s : shifted_target)
                for (auto& v : s.pixels.values()) v += c;
            CHECK(reconstruction_distance(shifted_fakes, shifted_target) == base);
        }
        CHECK(base > 0.0);
    }
    SUBCASE("errors") {
        const std::vector<Tensor> fakes{Tensor({2})};
        const std::vector<LabeledImage> target{{Tensor({3}), 1}};
        CHECK_THROWS_AS(reconstruction_distance({}, target), UsageError);
        CHECK_THROWS_AS(reconstruction_distance(fakes, {}), UsageError);
        CHECK_THROWS_AS(reconstruction_distance(fakes, target), DimensionError);
    }
}
