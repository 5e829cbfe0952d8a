#include "fedleak/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedleak/errors.hpp"

namespace fedleak {

ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred, int num_classes) {
    if (y_true.size() != y_pred.size()) {
        throw UsageError("confusion: " + std::to_string(y_true.size()) + " labels but " +
                         std::to_string(y_pred.size()) + " predictions");
    }
    if (num_classes < 1) throw UsageError("confusion: num_classes must be >= 1");
    ConfusionCounts counts;
    counts.num_classes = num_classes;
    counts.total = static_cast<std::int64_t>(y_true.size());
    counts.per_class.assign(static_cast<std::size_t>(num_classes), {});

    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i], p = y_pred[i];
        if (t < 0 || t >= num_classes) throw UsageError("confusion: true label " + std::to_string(t) + " out of range");
        if (p < 0) throw UsageError("confusion: negative prediction");
        if (p == t) {
            counts.per_class[static_cast<std::size_t>(t)].tp++;
        } else {
            counts.per_class[static_cast<std::size_t>(t)].fn++;
            if (p < num_classes) counts.per_class[static_cast<std::size_t>(p)].fp++;
        }
    }
    for (auto& c : counts.per_class) c.tn = counts.total - c.tp - c.fp - c.fn;
    return counts;
}

double safe_ratio(std::int64_t num, std::int64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

MacroScores macro_scores(const ConfusionCounts& counts) {
    MacroScores s;
    if (counts.per_class.empty()) return s;
    std::int64_t correct = 0;
    for (const auto& c : counts.per_class) {
        s.precision += safe_ratio(c.tp, c.tp + c.fp);
        s.recall += safe_ratio(c.tp, c.tp + c.fn);
        correct += c.tp;
    }
    const auto k = static_cast<double>(counts.per_class.size());
    s.precision /= k;
    s.recall /= k;
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    s.accuracy = safe_ratio(correct, counts.total);
    return s;
}

RocCurve roc_auc(std::span<const double> scores, const std::vector<bool>& positives) {
    if (scores.size() != positives.size()) throw UsageError("roc_auc: scores and labels differ in length");
    const auto n_pos = static_cast<std::int64_t>(std::count(positives.begin(), positives.end(), true));
    const auto n_neg = static_cast<std::int64_t>(positives.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw MetricError("roc_auc: need at least one positive and one negative sample");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    std::int64_t tp = 0, fp = 0;
    double area = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        while (i < order.size() && scores[order[i]] == threshold) {
            if (positives[order[i]]) ++tp; else ++fp;
            ++i;
        }
        const RocPoint next{safe_ratio(fp, n_neg), safe_ratio(tp, n_pos)};
        const RocPoint& prev = curve.points.back();
        area += (next.fpr - prev.fpr) * (next.tpr + prev.tpr) * 0.5;
        curve.points.push_back(next);
    }
    curve.auc = area;
    return curve;
}

Tensor class_mean_image(std::span<const LabeledImage> samples) {
    if (samples.empty()) throw UsageError("class_mean_image: no samples");
    const Shape& shape = samples.front().pixels.shape();
    std::vector<double> acc(shape_numel(shape), 0.0);
    for (const auto& s : samples) {
        require_same_shape(s.pixels, samples.front().pixels, "class_mean_image");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s.pixels[i];
    }
    Tensor mean(shape);
    for (std::size_t i = 0; i < acc.size(); ++i) mean[i] = static_cast<float>(acc[i] / static_cast<double>(samples.size()));
    return mean;
}

double reconstruction_distance(std::span<const Tensor> fakes, std::span<const LabeledImage> target) {
    if (fakes.empty()) throw UsageError("reconstruction_distance: no generated samples");
    if (target.empty()) throw UsageError("reconstruction_distance: empty target partition");

    const Tensor mean = class_mean_image(target);
    const std::size_t n = mean.size();

    double total = 0.0;
    for (const auto& fake : fakes) {
        if (fake.size() != n) {
            throw DimensionError("reconstruction_distance: fake " + shape_str(fake.shape()) + " vs target of " +
                                 std::to_string(n) + " pixels");
        }
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = static_cast<double>(fake[i]) - mean[i];
            sq += d * d;
        }
        total += std::sqrt(sq / static_cast<double>(n));
    }
    return total / static_cast<double>(fakes.size());
}

}  // namespace fedleak
