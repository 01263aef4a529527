#pragma once

#include <cstdint>

#include "linedet/annotations.hpp"

namespace linedet {

/// Parameters for seeded synthetic scene generation (tests and demos).
struct SynthConfig {
    int images = 3;
    int width = 512;
    int height = 384;
    int min_cables = 1;
    int max_cables = 3;
    int min_pylons = 1;
    int max_pylons = 2;
    int max_exclusions = 1;
    int images_per_recording = 2;
    int recordings_per_location = 2;
    std::uint64_t seed = 0;
};

/// Generates random scenes: bounded-curvature cable polylines, pylon boxes
/// near polyline endpoints, optional exclusion boxes. Every output satisfies
/// the annotation invariants; identical configs produce identical datasets.
Dataset synth_dataset(const SynthConfig& cfg);

}  // namespace linedet
