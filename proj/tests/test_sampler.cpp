#include <doctest.h>

#include <cmath>

#include "linedet/rng.hpp"
#include "linedet/sampler.hpp"
#include "linedet/targets.hpp"
#include "oracles.hpp"

using namespace linedet;

namespace {

AnnotationSet scene(int w, int h) {
    AnnotationSet a;
    a.meta = {"img", w, h, "r", "l"};
    return a;
}

}  // namespace

TEST_SUITE_BEGIN("sampler");

TEST_CASE("candidate_region: zero distance is exactly the object raster") {
    AnnotationSet a = scene(32, 32);
    a.pylons = {BBox{10, 10, 14, 14}};
    SampleSpec spec;
    spec.max_center_distance = 0;
    const BinaryMask region = candidate_region(a, spec);
    CHECK(region == rasterize_pylons(a.pylons, 32, 32));
}

TEST_CASE("candidate_region: no selected objects means no candidates") {
    AnnotationSet a = scene(32, 32);
    SampleSpec spec;
    const BinaryMask region = candidate_region(a, spec);
    for (const auto v : region) CHECK(v == 0);
}

TEST_CASE("candidate_region: box dilated by Euclidean radius") {
    AnnotationSet a = scene(32, 32);
    a.pylons = {BBox{14, 14, 18, 18}};
    SampleSpec spec;
    spec.max_center_distance = 10;
    const BinaryMask region = candidate_region(a, spec);

    const BinaryMask objects = rasterize_pylons(a.pylons, 32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            std::int64_t best = std::numeric_limits<std::int64_t>::max();
            for (int fy = 0; fy < 32; ++fy)
                for (int fx = 0; fx < 32; ++fx)
                    if (objects(fy, fx))
                        best = std::min(best, static_cast<std::int64_t>(y - fy) * (y - fy) +
                                                  static_cast<std::int64_t>(x - fx) * (x - fx));
            CHECK(region(y, x) == (best <= 100 ? 1 : 0));
        }
}

TEST_CASE("sample_patches: centered object yields a covering patch") {
    AnnotationSet a = scene(64, 64);
    a.pylons = {BBox{30, 30, 34, 34}};
    SampleSpec spec;
    spec.patch_size = 32;
    spec.max_center_distance = 4;
    spec.count = 1;
    const std::vector<PatchRect> patches = sample_patches(a, spec);
    REQUIRE(patches.size() == 1);
    const PatchRect p = patches[0];
    CHECK(p.x0 <= 30);
    CHECK(p.x0 + p.size >= 34);
    CHECK(p.y0 <= 30);
    CHECK(p.y0 + p.size >= 34);
}

TEST_CASE("sample_patches: deterministic under a fixed seed") {
    AnnotationSet a = scene(64, 64);
    Polyline line;
    line.points = {{10.0, 10.0}, {50.0, 40.0}};
    a.cables = {line};
    SampleSpec spec;
    spec.patch_size = 24;
    spec.count = 8;
    spec.seed = 777;
    const std::vector<PatchRect> first = sample_patches(a, spec);
    CHECK(first == sample_patches(a, spec));
    spec.seed = 778;
    CHECK(first != sample_patches(a, spec));
}

TEST_CASE("sample_patches: empty candidate region emits nothing") {
    AnnotationSet a = scene(64, 64);
    a.pylons = {BBox{0, 0, 2, 2}};  // too close to the border for a 48 px patch center
    SampleSpec spec;
    spec.patch_size = 48;
    spec.max_center_distance = 0;
    spec.count = 5;
    CHECK(sample_patches(a, spec).empty());
}

TEST_CASE("sample_patches: image smaller than the patch is an error") {
    AnnotationSet a = scene(16, 16);
    SampleSpec spec;
    spec.patch_size = 32;
    CHECK_THROWS_AS(sample_patches(a, spec), validation_error);
}

TEST_CASE("property: patches stay inside and centers stay near objects") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        AnnotationSet a = scene(48, 40);
        Polyline line;
        for (int p = 0; p < 3; ++p)
            line.points.push_back({rng.uniform(4.0, 44.0), rng.uniform(4.0, 36.0)});
        a.cables = {line};
        SampleSpec spec;
        spec.patch_size = 16;
        spec.max_center_distance = 6;
        spec.count = 16;
        spec.seed = trial;

        const BinaryMask objects = rasterize_cables(a.cables, 48, 40);
        for (const PatchRect& p : sample_patches(a, spec)) {
            CHECK(p.x0 >= 0);
            CHECK(p.y0 >= 0);
            CHECK(p.x0 + p.size <= 48);
            CHECK(p.y0 + p.size <= 40);
            const int cy = p.y0 + spec.patch_size / 2;
            const int cx = p.x0 + spec.patch_size / 2;
            std::int64_t best = std::numeric_limits<std::int64_t>::max();
            for (int fy = 0; fy < 40; ++fy)
                for (int fx = 0; fx < 48; ++fx)
                    if (objects(fy, fx))
                        best = std::min(best,
                                        static_cast<std::int64_t>(cy - fy) * (cy - fy) +
                                            static_cast<std::int64_t>(cx - fx) * (cx - fx));
            CHECK(best <= static_cast<std::int64_t>(spec.max_center_distance) *
                              spec.max_center_distance);
        }
    }
}

TEST_CASE("property: draws are uniform over a cross-shaped region") {
    // two crossing cables with max_center_distance 0 make the candidate
    // region a cross; compare arm occupancies against the multinomial model
    AnnotationSet a = scene(33, 33);
    Polyline horizontal, vertical;
    horizontal.points = {{2.5, 16.5}, {30.5, 16.5}};
    vertical.points = {{16.5, 2.5}, {16.5, 30.5}};
    a.cables = {horizontal, vertical};
    SampleSpec spec;
    spec.patch_size = 4;
    spec.max_center_distance = 2;
    spec.count = 10000;
    spec.seed = 12345;

    const BinaryMask region = candidate_region(a, spec);
    const std::vector<PatchRect> patches = sample_patches(a, spec);
    REQUIRE(patches.size() == 10000);

    // buckets: four arms plus the center square
    std::int64_t bucket[5] = {0, 0, 0, 0, 0};
    std::int64_t cells[5] = {0, 0, 0, 0, 0};
    auto classify = [](int y, int x) {
        const bool in_core = std::abs(x - 16) <= 5 && std::abs(y - 16) <= 5;
        if (in_core) return 4;
        if (std::abs(y - 16) <= 5) return x < 16 ? 0 : 1;
        return y < 16 ? 2 : 3;
    };
    std::int64_t region_cells = 0;
    for (int y = 2; y <= 31; ++y)  // valid-center rectangle for a 4 px patch
        for (int x = 2; x <= 31; ++x)
            if (region(y, x)) {
                ++cells[classify(y, x)];
                ++region_cells;
            }
    for (const PatchRect& p : patches)
        ++bucket[classify(p.y0 + 2, p.x0 + 2)];

    for (int b = 0; b < 5; ++b) {
        const double expectation = 10000.0 * cells[b] / region_cells;
        const double sigma = std::sqrt(expectation * (1.0 - static_cast<double>(cells[b]) / region_cells));
        CHECK(std::abs(bucket[b] - expectation) <= 3.0 * sigma);
    }
}

TEST_CASE("crop_mask: identity, alignment and pooling commutation") {
    Rng rng(32);
    DistanceMask dm;
    dm.values = Grid<double>(32, 32);
    for (auto& v : dm.values) v = rng.unit();

    const DistanceMask whole = crop_mask(dm, PatchRect{0, 0, 32}, 1);
    CHECK(whole.values == dm.values);

    CHECK_THROWS_AS(crop_mask(dm, PatchRect{3, 0, 16}, 4), validation_error);

    // crop of the pooled mask == pool of the cropped mask on aligned patches
    const PatchRect patch{8, 16, 16};
    const DistanceMask pooled_then_cropped = crop_mask(minpool(dm, 4), PatchRect{2, 4, 4}, 1);
    const DistanceMask cropped_then_pooled = minpool(crop_mask(dm, patch, 1), 4);
    CHECK(pooled_then_cropped.values == cropped_then_pooled.values);
}

TEST_SUITE_END();
