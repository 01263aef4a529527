#include "linedet/synth.hpp"

#include <algorithm>
#include <cmath>

#include "linedet/rng.hpp"

namespace linedet {

namespace {

// Snapping coordinates to 1/8 of a pixel keeps reflections and integer
// translations of the geometry exact in floating point.
double snap(double v) { return std::round(v * 8.0) / 8.0; }

Polyline random_cable(Rng& rng, int width, int height) {
    const double margin = 2.0;
    const double step = std::max(8.0, width / 6.0);
    Polyline line;
    double x = rng.uniform(margin, width - margin);
    double y = rng.uniform(margin, height - margin);
    double heading = rng.uniform(0.0, 6.283185307179586477);
    line.points.push_back({snap(x), snap(y)});
    const int segments = 2 + static_cast<int>(rng.below(4));
    for (int s = 0; s < segments; ++s) {
        heading += rng.uniform(-0.5, 0.5);  // bounded curvature
        double nx = x + step * std::cos(heading);
        double ny = y + step * std::sin(heading);
        if (nx < margin || nx > width - margin) {
            heading = 3.141592653589793238 - heading;
            nx = x + step * std::cos(heading);
        }
        if (ny < margin || ny > height - margin) {
            heading = -heading;
            ny = y + step * std::sin(heading);
        }
        nx = std::clamp(nx, margin, width - margin);
        ny = std::clamp(ny, margin, height - margin);
        line.points.push_back({snap(nx), snap(ny)});
        x = nx;
        y = ny;
    }
    return line;
}

// Box bounds snap to whole pixels: annotation tools emit integer boxes, and
// integer bounds never coincide with pixel centers under the half-open fill.
BBox random_box(Rng& rng, double cx, double cy, int width, int height,
                double min_half, double max_half) {
    const double hw = rng.uniform(min_half, max_half);
    const double hh = rng.uniform(min_half, max_half);
    const double bx = std::clamp(cx, hw, width - hw);
    const double by = std::clamp(cy, hh, height - hh);
    return BBox{std::floor(bx - hw), std::floor(by - hh), std::ceil(bx + hw),
                std::ceil(by + hh)};
}

}  // namespace

Dataset synth_dataset(const SynthConfig& cfg) {
    if (cfg.images < 0) throw validation_error("synth_dataset: negative image count");
    if (cfg.width < 32 || cfg.height < 32)
        throw validation_error("synth_dataset: image must be at least 32x32");
    if (cfg.min_cables < 1 || cfg.max_cables < cfg.min_cables ||
        cfg.min_pylons < 1 || cfg.max_pylons < cfg.min_pylons)
        throw validation_error("synth_dataset: bad object count ranges");

    Dataset ds;
    for (int i = 0; i < cfg.images; ++i) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        AnnotationSet a;
        char id[32];
        std::snprintf(id, sizeof id, "img%04d", i);
        a.meta.image_id = id;
        a.meta.width = cfg.width;
        a.meta.height = cfg.height;
        const int recording = i / std::max(1, cfg.images_per_recording);
        a.meta.recording_id = "rec" + std::to_string(recording);
        a.meta.location_group =
            "loc" + std::to_string(recording / std::max(1, cfg.recordings_per_location));

        const int cables =
            cfg.min_cables + static_cast<int>(rng.below(cfg.max_cables - cfg.min_cables + 1));
        for (int c = 0; c < cables; ++c)
            a.cables.push_back(random_cable(rng, cfg.width, cfg.height));

        const double min_half = std::max(2.0, cfg.width / 60.0);
        const double max_half = std::max(min_half + 1.0, cfg.width / 25.0);
        const int pylons =
            cfg.min_pylons + static_cast<int>(rng.below(cfg.max_pylons - cfg.min_pylons + 1));
        for (int p = 0; p < pylons; ++p) {
            // pylons sit near cable endpoints, like supports in real scenes
            const Polyline& line = a.cables[rng.below(a.cables.size())];
            const PointXY& end = rng.chance(0.5) ? line.points.front() : line.points.back();
            const double jitter = cfg.width / 30.0;
            a.pylons.push_back(random_box(rng, end.x + rng.uniform(-jitter, jitter),
                                          end.y + rng.uniform(-jitter, jitter), cfg.width,
                                          cfg.height, min_half, max_half));
        }

        const int exclusions =
            cfg.max_exclusions > 0 ? static_cast<int>(rng.below(cfg.max_exclusions + 1)) : 0;
        for (int e = 0; e < exclusions; ++e)
            a.exclusions.push_back(random_box(rng, rng.uniform(0.0, cfg.width),
                                              rng.uniform(0.0, cfg.height), cfg.width,
                                              cfg.height, min_half, max_half));
        ds.items.push_back(std::move(a));
    }
    validate(ds);
    return ds;
}

}  // namespace linedet
