#pragma once

#include <cstdint>
#include <limits>

#include "linedet/annotations.hpp"
#include "linedet/grid.hpp"

namespace linedet {

/// Sentinel for "no foreground cell exists" in squared-distance grids.
inline constexpr std::int64_t kNoForeground = std::numeric_limits<std::int64_t>::max();

/// Exact squared Euclidean distance (on the integer cell grid) to the
/// nearest foreground cell; 0 on foreground, kNoForeground everywhere if the
/// mask is empty. Two-pass separable transform, linear in the cell count.
Grid<std::int64_t> edt_squared(const BinaryMask& mask);

/// Euclidean distance in pixel units; +infinity where edt_squared reports
/// kNoForeground.
Grid<double> edt(const BinaryMask& mask);

/// value = min(dist, d_max) / d_max; the +infinity sentinel maps to 1.
DistanceMask clamp_normalize(const Grid<double>& dist, int d_max = 128);

/// Each coarse cell takes the minimum over its factor x factor block.
/// Dimensions must be divisible by factor; see minpool_padded otherwise.
DistanceMask minpool(const DistanceMask& dm, int factor = 16);

/// Pads right/bottom with 1.0 to a factor multiple before pooling, then
/// (by default) crops the coarse output to floor(h/factor) x floor(w/factor),
/// which is what the deployed stitcher produces (3000 rows / 32 -> 93).
DistanceMask minpool_padded(const DistanceMask& dm, int factor, bool crop_to_floor = true);

/// Foreground iff value * d_max < threshold (strict). 0 < threshold <= d_max.
BinaryMask binarize(const DistanceMask& dm, double threshold_px);

/// n x n block downsampling that marks a coarse cell foreground iff any of
/// the center 4 pixels of its block (rows n/2-1 and n/2, same columns) is
/// foreground. Defined only for even n >= 2 dividing both dimensions.
BinaryMask downsample_segmentation(const BinaryMask& mask, int n);

/// Coarse cell is foreground iff any pixel of its block is foreground; used
/// to carry exclusion zones down to metric resolution.
BinaryMask any_overlap_downsample(const BinaryMask& mask, int factor,
                                  bool crop_to_floor = true);

/// Integer distance bin of a normalized value: round(value * d_max).
int frequency_bin(double value, int d_max);

struct GtTargets {
    DistanceMask cables;
    DistanceMask pylons;
};

/// Full target pipeline: rasterize -> edt -> clamp_normalize -> minpool,
/// independently per class, at floor(h/factor) x floor(w/factor) resolution.
GtTargets gt_targets(const AnnotationSet& a, int d_max = 128, int factor = 16);

}  // namespace linedet
