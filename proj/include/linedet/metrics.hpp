#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "linedet/annotations.hpp"
#include "linedet/grid.hpp"

namespace linedet {

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    bool relaxed = false;
};

struct MetricReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double correctness = 0.0;
    double completeness = 0.0;
    double quality = 0.0;
    ConfusionCounts exact;
    ConfusionCounts relaxed;
};

/// Radius-1 Chebyshev dilation (8-neighborhood); the CCQ error tolerance.
BinaryMask dilate8(const BinaryMask& mask);

struct PrfResult {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    ConfusionCounts counts;
};

/// Pixel-exact precision/recall/F1. Cells flagged in ignore are removed from
/// every count. Empty-set conventions: with no predicted foreground,
/// precision is 1 if the ground truth is also empty and 0 otherwise; recall
/// is symmetric; f1 is 0 when precision + recall == 0.
PrfResult pixel_prf(const BinaryMask& pred, const BinaryMask& gt,
                    const BinaryMask* ignore = nullptr);

struct CcqResult {
    double correctness = 0.0;
    double completeness = 0.0;
    double quality = 0.0;
    ConfusionCounts counts;
};

/// Relaxed correctness/completeness/quality with 1-pixel tolerance:
/// TP = |pred & dilate8(gt)|, FP = |pred| - TP, FN = |gt \ dilate8(pred)|.
/// Ignore cells are deleted from both masks before dilation so tolerance
/// cannot leak across an exclusion boundary.
CcqResult ccq(const BinaryMask& pred, const BinaryMask& gt,
              const BinaryMask* ignore = nullptr);

/// Binarizes both distance masks at the threshold and runs pixel_prf + ccq.
MetricReport evaluate_image(const DistanceMask& pred, const DistanceMask& gt,
                            double threshold_px, const BinaryMask* exclusions = nullptr);

enum class Pooling { micro, macro };

struct MetricStats {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation across folds
};

struct AggregateReport {
    MetricStats precision, recall, f1, correctness, completeness, quality;
    std::vector<MetricReport> per_fold;
};

/// Reduces per-image reports grouped by fold to per-fold values (micro:
/// metrics recomputed from pooled counts; macro: plain mean of per-image
/// metrics) and then to mean/stddev across folds.
AggregateReport aggregate(const std::vector<std::vector<MetricReport>>& folds,
                          Pooling pooling = Pooling::micro);

/// Recomputes the six metrics from pooled confusion counts.
MetricReport report_from_counts(const ConfusionCounts& exact, const ConfusionCounts& relaxed);

struct FoldAssignment {
    std::map<std::string, int> fold_of_image;
    int k = 0;
};

/// Recording-level k-fold split: recordings are atomic, recordings sharing a
/// location group land in the same fold, and location groups are assigned
/// largest-first to the currently smallest fold. Deterministic given seed.
FoldAssignment fold_split(const Dataset& ds, int k = 5, std::uint64_t seed = 0);

}  // namespace linedet
