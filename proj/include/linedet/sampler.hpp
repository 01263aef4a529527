#pragma once

#include <cstdint>
#include <vector>

#include "linedet/annotations.hpp"
#include "linedet/grid.hpp"

namespace linedet {

struct SampleSpec {
    int patch_size = 1024;
    int max_center_distance = 128;  // in pixels, from the patch center to the object
    bool target_cables = true;
    bool target_pylons = true;
    std::uint64_t seed = 0;
    int count = 1;  // patches per image
};

/// Full-resolution mask of pixels whose Euclidean distance to the nearest
/// object of a selected class is <= max_center_distance.
BinaryMask candidate_region(const AnnotationSet& a, const SampleSpec& spec);

/// Draws spec.count patch centers uniformly from the candidate region
/// intersected with the valid-center rectangle (patches stay fully inside
/// the image). Returns an empty list when the intersection is empty: purely
/// background patches are never sampled. Deterministic given the seed.
std::vector<PatchRect> sample_patches(const AnnotationSet& a, const SampleSpec& spec);

/// Patch crop of a coarse or full-resolution grid; patch coordinates must be
/// divisible by factor.
DistanceMask crop_mask(const DistanceMask& dm, const PatchRect& p, int factor);
BinaryMask crop_mask(const BinaryMask& mask, const PatchRect& p, int factor);

}  // namespace linedet
