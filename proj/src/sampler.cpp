#include "linedet/sampler.hpp"

#include "linedet/rng.hpp"
#include "linedet/targets.hpp"

namespace linedet {

BinaryMask candidate_region(const AnnotationSet& a, const SampleSpec& spec) {
    if (!spec.target_cables && !spec.target_pylons)
        throw validation_error("candidate_region: no target classes selected");
    if (spec.max_center_distance < 0)
        throw validation_error("candidate_region: negative max_center_distance");

    const int w = a.meta.width;
    const int h = a.meta.height;
    BinaryMask objects(w, h, 0);
    if (spec.target_cables) objects = rasterize_cables(a.cables, w, h);
    if (spec.target_pylons) {
        const BinaryMask pylons = rasterize_pylons(a.pylons, w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (pylons(y, x)) objects(y, x) = 1;
    }

    const Grid<std::int64_t> sq = edt_squared(objects);
    const std::int64_t limit = static_cast<std::int64_t>(spec.max_center_distance) *
                               spec.max_center_distance;
    BinaryMask region(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            region(y, x) = (sq(y, x) != kNoForeground && sq(y, x) <= limit) ? 1 : 0;
    return region;
}

std::vector<PatchRect> sample_patches(const AnnotationSet& a, const SampleSpec& spec) {
    if (spec.patch_size < 1) throw validation_error("sample_patches: patch_size must be >= 1");
    if (spec.count < 0) throw validation_error("sample_patches: negative count");
    const int w = a.meta.width;
    const int h = a.meta.height;
    if (w < spec.patch_size || h < spec.patch_size)
        throw validation_error("sample_patches: image '" + a.meta.image_id +
                               "' smaller than patch size");

    const BinaryMask region = candidate_region(a, spec);
    const int half = spec.patch_size / 2;
    // centers keep x0 = cx - half in [0, w - size], likewise for y
    std::vector<std::pair<int, int>> centers;
    for (int cy = half; cy <= h - spec.patch_size + half; ++cy)
        for (int cx = half; cx <= w - spec.patch_size + half; ++cx)
            if (region(cy, cx)) centers.push_back({cy, cx});

    std::vector<PatchRect> out;
    if (centers.empty()) return out;

    Rng rng(derive_seed(spec.seed, 0x70617463));  // "patc"
    out.reserve(spec.count);
    for (int i = 0; i < spec.count; ++i) {
        const auto [cy, cx] = centers[rng.below(centers.size())];
        out.push_back({cx - half, cy - half, spec.patch_size});
    }
    return out;
}

DistanceMask crop_mask(const DistanceMask& dm, const PatchRect& p, int factor) {
    DistanceMask out;
    out.d_max = dm.d_max;
    out.values = crop_grid(dm.values, p, factor);
    return out;
}

BinaryMask crop_mask(const BinaryMask& mask, const PatchRect& p, int factor) {
    return crop_grid(mask, p, factor);
}

}  // namespace linedet
