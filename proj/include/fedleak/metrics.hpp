#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedleak/models.hpp"
#include "fedleak/tensor.hpp"

namespace fedleak {

struct ClassCounts {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// One-vs-rest counts. For every class tp+fp+tn+fn == total.
struct ConfusionCounts {
    int num_classes = 0;
    std::int64_t total = 0;
    std::vector<ClassCounts> per_class;
};

/// Predictions outside [0,num_classes) (the fake class) are wrong for their
/// true class and are nobody's false positive.
ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred, int num_classes);

struct MacroScores {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Per-class precision/recall (0 when the denominator is 0), averaged over
/// classes; f1 is taken from the macro precision and recall.
MacroScores macro_scores(const ConfusionCounts& counts);

// Shared by recall and true-positive rate.
double safe_ratio(std::int64_t num, std::int64_t den);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // starts at (0,0), ends at (1,1)
    double auc = 0.0;
};

/// Threshold sweep over distinct scores, highest first; tied scores form one step.
/// Throws MetricError unless both classes are present.
RocCurve roc_auc(std::span<const double> scores, const std::vector<bool>& positives);

struct RoundRecord {
    int round = 0;
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double f1 = 0.0;
    std::vector<double> per_class_auc;
    std::optional<double> reconstruction_distance;
};

Tensor class_mean_image(std::span<const LabeledImage> samples);

/// Mean over fakes of the per-pixel RMS distance to the pixelwise mean of the
/// target samples.
double reconstruction_distance(std::span<const Tensor> fakes, std::span<const LabeledImage> target);

}  // namespace fedleak
