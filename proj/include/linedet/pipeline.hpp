#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "linedet/grid.hpp"

namespace linedet {

struct PipelineConfig {
    int patch = 1024;          // split edge in pixels
    int batch = 4;             // patches per predictor call
    int out_factor = 32;       // coarse output stride (32 deployed, 16 native)
    double fuse_weight = 0.5;  // weight of the warped previous prediction
    double threshold_px = 32.0;
    int d_max = 128;
    int flow_block = 8;        // block edge for the built-in flow estimator
    int flow_radius = 4;       // search radius in cells
};

/// Per-cell 2D displacement at coarse prediction resolution, in cells.
struct FlowField {
    Grid<double> dx;
    Grid<double> dy;
};

struct SplitLayout {
    int frame_width = 0;
    int frame_height = 0;
    int patch = 0;
    int cols = 0;
    int rows = 0;
    int pad_right = 0;
    int pad_bottom = 0;
    std::vector<PatchRect> patches;  // row-major
};

/// Pads right/bottom to patch multiples and lays out the non-overlapping
/// patch grid in row-major order.
SplitLayout pad_split(int width, int height, int patch);

/// Concatenates per-patch coarse outputs per the layout and crops the result
/// to floor(frame / out_factor) in each dimension (4096x3000 at 32 -> 128x93).
DistanceMask stitch(const std::vector<DistanceMask>& patch_outputs,
                    const SplitLayout& layout, int out_factor);

/// Reference flow estimator: integer block matching under mean absolute
/// difference within +-flow_radius, ties broken toward zero displacement,
/// then bilinear upsampling of block displacements to per-cell resolution.
FlowField estimate_flow(const Grid<double>& prev_small, const Grid<double>& cur_small,
                        const PipelineConfig& cfg);

FlowField zero_flow(int width, int height);

/// Backward warping with bilinear interpolation: out(p) = prev(p - flow(p));
/// samples outside the grid read as 1.0 (no detection).
DistanceMask warp(const DistanceMask& prev, const FlowField& flow);

/// out = fuse_weight * warped_prev + (1 - fuse_weight) * current.
DistanceMask temporal_fuse(const DistanceMask& warped_prev, const DistanceMask& current,
                           double fuse_weight);

/// Binarizes (strict <) and paints each coarse cell over its corresponding
/// block at full resolution; remainder rows/columns take the edge cell.
BinaryMask threshold_upscale(const DistanceMask& fused, double threshold_px,
                             int target_w, int target_h);

struct PatchPrediction {
    DistanceMask cables;
    DistanceMask pylons;
};

/// Source of per-patch coarse predictions; decouples the simulator from any
/// network runtime. Implementations must produce patch/out_factor sized
/// masks and tolerate concurrent calls for disjoint batches.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual std::vector<PatchPrediction> predict(int frame_index,
                                                 std::span<const PatchRect> patches) = 0;
};

/// Ground truth plus seeded Gaussian perturbation (clamped to [0, 1]); every
/// object cell (gt value 0) is independently erased to 1.0 with probability
/// dropout. Counter-based noise: deterministic and order-independent.
DistanceMask degraded_oracle(const DistanceMask& gt, double noise_sigma, double dropout,
                             std::uint64_t seed);

struct FrameMaps {
    DistanceMask cables;
    DistanceMask pylons;
};

/// Serves patch predictions by cropping per-frame full-coverage coarse maps;
/// regions falling into frame padding replicate the map edge.
class CoarseMapPredictor : public Predictor {
public:
    CoarseMapPredictor(std::vector<FrameMaps> frames, int out_factor);
    std::vector<PatchPrediction> predict(int frame_index,
                                         std::span<const PatchRect> patches) override;

private:
    std::vector<FrameMaps> frames_;
    int out_factor_;
};

struct FrameResult {
    DistanceMask fused_cables;
    DistanceMask fused_pylons;
    BinaryMask seg_cables;
    BinaryMask seg_pylons;
};

/// Optional flow inputs for run_stream; when both are empty the stream runs
/// with zero flow.
struct FlowInputs {
    std::vector<FlowField> external;     // entry t warps frame t into t+1
    std::vector<Grid<double>> frames;    // small frames for the built-in estimator
};

/// Full deployment simulation: per frame pad/split -> predict in batches ->
/// stitch per class -> warp previous fused output -> average -> threshold ->
/// upscale. The pre-threshold fused masks carry the state between frames.
std::vector<FrameResult> run_stream(int frame_width, int frame_height, int frame_count,
                                    Predictor& predictor, const FlowInputs& flows,
                                    const PipelineConfig& cfg);

}  // namespace linedet
