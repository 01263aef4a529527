#pragma once

#include <cstdint>
#include <vector>

#include "linedet/grid.hpp"

namespace linedet {

/// Occurrence counts of integer distance bins 0..d_max over a ground-truth
/// mask; bin of a cell is round(value * d_max).
struct FrequencyTable {
    std::vector<std::int64_t> counts;
    std::int64_t total = 0;
    int d_max = 128;

    double frequency(int bin) const {
        return total > 0 ? static_cast<double>(counts[bin]) / static_cast<double>(total)
                         : 0.0;
    }
};

struct LossConfig {
    double epsilon = 0.02;   // weight cap: w <= 1/log(1 + epsilon)
    double lambda = 0.2;     // connectivity term weight
    int d_max = 128;
    int malis_window = 16;   // window edge in coarse cells
    bool use_lif_weights = true;
    bool use_malis = true;
};

/// Composite loss output: total scalar plus per-class gradient grids and the
/// per-term breakdown.
struct LossValue {
    double scalar = 0.0;
    Grid<double> grad_cables;
    Grid<double> grad_pylons;
    double ldat_cables = 0.0;
    double ldat_pylons = 0.0;
    double malis = 0.0;
};

FrequencyTable frequency(const DistanceMask& gt);

/// Log-scaled inverse-frequency weight 1 / log(1 + epsilon + f); monotone
/// nonincreasing in f.
double lif_weight(double f, double epsilon);

struct SingleLoss {
    double scalar = 0.0;
    Grid<double> grad;
};

/// Frequency-weighted squared-difference data term, summed over cells:
/// sum_i w(gt_i) (pred_i - gt_i)^2, with gradient 2 w(gt_i) (pred_i - gt_i).
/// With use_lif_weights off, w == 1 (plain MSD sum).
SingleLoss ldat(const DistanceMask& pred, const DistanceMask& gt, const LossConfig& cfg);

/// 4-connected component labels over cells with gt value > 0; cells on the
/// ground-truth object (value == 0) receive label 0 and join no pair.
Grid<int> gt_background_components(const Grid<double>& gt_window);

/// One union-find merge during the maximin sweep: the bottleneck affinity
/// and how many background pairs with equal/different ground-truth labels it
/// connected.
struct MergeRecord {
    double affinity = 0.0;
    std::int64_t same_pairs = 0;
    std::int64_t diff_pairs = 0;
};

struct WindowLoss {
    double loss = 0.0;
    Grid<double> grad;
    std::int64_t pair_count = 0;  // all background pairs in the window
    std::vector<MergeRecord> merges;
};

/// Connectivity loss over one window. Nodes are background cells scored by
/// the predicted value; edge affinity is the min of its endpoints; the
/// maximin affinity m(p, q) is the best achievable worst node score over
/// paths (endpoints included), 0 if no path exists. The window loss averages
/// m^2 over pairs with different ground-truth labels and (1 - m)^2 over
/// pairs with equal labels. Computed by a descending Kruskal sweep; each
/// merge routes its subgradient to the node(s) attaining the bottleneck
/// minimum, split equally on ties.
WindowLoss malis_window_loss(const Grid<double>& pred_window,
                             const Grid<double>& gt_window);

/// Tiles the masks into non-overlapping malis_window-sized windows (smaller
/// remainder windows kept) and averages window losses over windows that
/// contain at least one background pair.
SingleLoss malis_loss(const DistanceMask& pred, const DistanceMask& gt,
                      const LossConfig& cfg);

/// ldat(cables) + ldat(pylons) + lambda * malis(cables), with matching
/// per-class gradients. The lambda term is omitted when use_malis is off.
LossValue composite_loss(const DistanceMask& pred_cables, const DistanceMask& pred_pylons,
                         const DistanceMask& gt_cables, const DistanceMask& gt_pylons,
                         const LossConfig& cfg);

}  // namespace linedet
