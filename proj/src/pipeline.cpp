#include "linedet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "linedet/rng.hpp"
#include "linedet/targets.hpp"

namespace linedet {

SplitLayout pad_split(int width, int height, int patch) {
    if (width < 1 || height < 1) throw validation_error("pad_split: non-positive frame");
    if (patch < 1) throw validation_error("pad_split: patch must be >= 1");

    SplitLayout layout;
    layout.frame_width = width;
    layout.frame_height = height;
    layout.patch = patch;
    layout.cols = (width + patch - 1) / patch;
    layout.rows = (height + patch - 1) / patch;
    layout.pad_right = layout.cols * patch - width;
    layout.pad_bottom = layout.rows * patch - height;
    layout.patches.reserve(static_cast<std::size_t>(layout.cols) * layout.rows);
    for (int r = 0; r < layout.rows; ++r)
        for (int c = 0; c < layout.cols; ++c)
            layout.patches.push_back({c * patch, r * patch, patch});
    return layout;
}

DistanceMask stitch(const std::vector<DistanceMask>& patch_outputs,
                    const SplitLayout& layout, int out_factor) {
    if (out_factor < 1) throw validation_error("stitch: out_factor must be >= 1");
    if (layout.patch % out_factor != 0)
        throw validation_error("stitch: patch not divisible by out_factor");
    if (patch_outputs.size() != layout.patches.size())
        throw validation_error("stitch: expected " + std::to_string(layout.patches.size()) +
                               " patch outputs, got " + std::to_string(patch_outputs.size()));

    const int cell = layout.patch / out_factor;  // coarse cells per patch edge
    const int full_w = layout.cols * cell;
    const int full_h = layout.rows * cell;
    const int crop_w = layout.frame_width / out_factor;
    const int crop_h = layout.frame_height / out_factor;
    if (crop_w < 1 || crop_h < 1)
        throw validation_error("stitch: frame smaller than one output cell");

    DistanceMask out;
    out.d_max = patch_outputs.front().d_max;
    Grid<double> full(full_w, full_h, 1.0);
    for (int r = 0; r < layout.rows; ++r) {
        for (int c = 0; c < layout.cols; ++c) {
            const DistanceMask& p = patch_outputs[static_cast<std::size_t>(r) * layout.cols + c];
            if (p.width() != cell || p.height() != cell)
                throw validation_error("stitch: patch output " +
                                       std::to_string(r * layout.cols + c) + " is " +
                                       std::to_string(p.width()) + "x" +
                                       std::to_string(p.height()) + ", expected " +
                                       std::to_string(cell) + "x" + std::to_string(cell));
            for (int y = 0; y < cell; ++y)
                for (int x = 0; x < cell; ++x)
                    full(r * cell + y, c * cell + x) = p.values(y, x);
        }
    }
    out.values = Grid<double>(crop_w, crop_h);
    for (int y = 0; y < crop_h; ++y)
        for (int x = 0; x < crop_w; ++x)
            out.values(y, x) = full(y, x);
    return out;
}

FlowField zero_flow(int width, int height) {
    return {Grid<double>(width, height, 0.0), Grid<double>(width, height, 0.0)};
}

namespace {

// Mean absolute difference between cur block pixels and prev shifted by d;
// returns +inf when the shifted block has no overlap with the frame.
double block_cost(const Grid<double>& prev, const Grid<double>& cur, int y0, int x0,
                  int y1, int x1, int dy, int dx) {
    double sum = 0.0;
    int n = 0;
    for (int y = y0; y < y1; ++y) {
        const int sy = y - dy;
        if (sy < 0 || sy >= prev.height()) continue;
        for (int x = x0; x < x1; ++x) {
            const int sx = x - dx;
            if (sx < 0 || sx >= prev.width()) continue;
            sum += std::abs(cur(y, x) - prev(sy, sx));
            ++n;
        }
    }
    return n > 0 ? sum / n : std::numeric_limits<double>::infinity();
}

}  // namespace

FlowField estimate_flow(const Grid<double>& prev_small, const Grid<double>& cur_small,
                        const PipelineConfig& cfg) {
    if (!prev_small.same_shape(cur_small))
        throw validation_error("estimate_flow: frame shape mismatch");
    if (cfg.flow_block < 1 || cfg.flow_radius < 0)
        throw validation_error("estimate_flow: bad flow parameters");

    const int w = cur_small.width();
    const int h = cur_small.height();
    const int bs = cfg.flow_block;
    const int bw = (w + bs - 1) / bs;
    const int bh = (h + bs - 1) / bs;

    // displacement candidates ordered by magnitude so ties keep the
    // smallest motion
    std::vector<std::pair<int, int>> candidates;
    for (int dy = -cfg.flow_radius; dy <= cfg.flow_radius; ++dy)
        for (int dx = -cfg.flow_radius; dx <= cfg.flow_radius; ++dx)
            candidates.push_back({dy, dx});
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) {
                         return a.first * a.first + a.second * a.second <
                                b.first * b.first + b.second * b.second;
                     });

    Grid<double> block_dx(bw, bh, 0.0), block_dy(bw, bh, 0.0);
    for (int by = 0; by < bh; ++by) {
        for (int bx = 0; bx < bw; ++bx) {
            const int y0 = by * bs, y1 = std::min(h, y0 + bs);
            const int x0 = bx * bs, x1 = std::min(w, x0 + bs);
            double best = std::numeric_limits<double>::infinity();
            int best_dy = 0, best_dx = 0;
            for (const auto& [dy, dx] : candidates) {
                const double cost = block_cost(prev_small, cur_small, y0, x0, y1, x1, dy, dx);
                if (cost < best) {
                    best = cost;
                    best_dy = dy;
                    best_dx = dx;
                }
            }
            block_dy(by, bx) = best_dy;
            block_dx(by, bx) = best_dx;
        }
    }

    // bilinear upsampling of the block displacement field to cell resolution
    FlowField flow = zero_flow(w, h);
    for (int y = 0; y < h; ++y) {
        const double gy = std::clamp((y + 0.5) / bs - 0.5, 0.0, static_cast<double>(bh - 1));
        const int y0 = static_cast<int>(gy);
        const int y1 = std::min(y0 + 1, bh - 1);
        const double fy = gy - y0;
        for (int x = 0; x < w; ++x) {
            const double gx = std::clamp((x + 0.5) / bs - 0.5, 0.0, static_cast<double>(bw - 1));
            const int x0 = static_cast<int>(gx);
            const int x1 = std::min(x0 + 1, bw - 1);
            const double fx = gx - x0;
            flow.dx(y, x) = (1 - fy) * ((1 - fx) * block_dx(y0, x0) + fx * block_dx(y0, x1)) +
                            fy * ((1 - fx) * block_dx(y1, x0) + fx * block_dx(y1, x1));
            flow.dy(y, x) = (1 - fy) * ((1 - fx) * block_dy(y0, x0) + fx * block_dy(y0, x1)) +
                            fy * ((1 - fx) * block_dy(y1, x0) + fx * block_dy(y1, x1));
        }
    }
    return flow;
}

DistanceMask warp(const DistanceMask& prev, const FlowField& flow) {
    if (!prev.values.same_shape(flow.dx) || !prev.values.same_shape(flow.dy))
        throw validation_error("warp: flow dimensions do not match the mask");

    const int w = prev.width();
    const int h = prev.height();
    DistanceMask out;
    out.d_max = prev.d_max;
    out.values = Grid<double>(w, h);
    auto sample = [&](int y, int x) {
        return prev.values.in_bounds(y, x) ? prev.values(y, x) : 1.0;
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double sx = x - flow.dx(y, x);
            const double sy = y - flow.dy(y, x);
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0;
            const double fy = sy - y0;
            out.values(y, x) = (1 - fy) * ((1 - fx) * sample(y0, x0) + fx * sample(y0, x0 + 1)) +
                               fy * ((1 - fx) * sample(y0 + 1, x0) + fx * sample(y0 + 1, x0 + 1));
        }
    }
    return out;
}

DistanceMask temporal_fuse(const DistanceMask& warped_prev, const DistanceMask& current,
                           double fuse_weight) {
    if (!warped_prev.values.same_shape(current.values))
        throw validation_error("temporal_fuse: dimension mismatch");
    if (!(fuse_weight >= 0.0 && fuse_weight <= 1.0))
        throw validation_error("temporal_fuse: fuse_weight must be in [0, 1]");

    DistanceMask out;
    out.d_max = current.d_max;
    out.values = Grid<double>(current.width(), current.height());
    for (int y = 0; y < current.height(); ++y)
        for (int x = 0; x < current.width(); ++x)
            out.values(y, x) = fuse_weight * warped_prev.values(y, x) +
                               (1.0 - fuse_weight) * current.values(y, x);
    return out;
}

BinaryMask threshold_upscale(const DistanceMask& fused, double threshold_px,
                             int target_w, int target_h) {
    if (target_w < fused.width() || target_h < fused.height())
        throw validation_error("threshold_upscale: target smaller than the coarse mask");
    const BinaryMask coarse = binarize(fused, threshold_px);
    const int fx = target_w / coarse.width();
    const int fy = target_h / coarse.height();
    BinaryMask out(target_w, target_h, 0);
    for (int y = 0; y < target_h; ++y) {
        const int cy = std::min(y / fy, coarse.height() - 1);
        for (int x = 0; x < target_w; ++x)
            out(y, x) = coarse(cy, std::min(x / fx, coarse.width() - 1));
    }
    return out;
}

DistanceMask degraded_oracle(const DistanceMask& gt, double noise_sigma, double dropout,
                             std::uint64_t seed) {
    const std::uint64_t noise_seed = derive_seed(seed, 1);
    const std::uint64_t drop_seed = derive_seed(seed, 2);
    DistanceMask out;
    out.d_max = gt.d_max;
    out.values = Grid<double>(gt.width(), gt.height());
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            const std::uint64_t cell = static_cast<std::uint64_t>(y) * gt.width() + x;
            double v = gt.values(y, x);
            if (noise_sigma > 0.0) {
                Rng cell_rng(splitmix_at(noise_seed, cell));
                v = std::clamp(v + noise_sigma * cell_rng.gaussian(), 0.0, 1.0);
            }
            if (gt.values(y, x) == 0.0 && dropout > 0.0) {
                Rng cell_rng(splitmix_at(drop_seed, cell));
                if (cell_rng.unit() < dropout) v = 1.0;
            }
            out.values(y, x) = v;
        }
    }
    return out;
}

CoarseMapPredictor::CoarseMapPredictor(std::vector<FrameMaps> frames, int out_factor)
    : frames_(std::move(frames)), out_factor_(out_factor) {
    if (out_factor_ < 1)
        throw validation_error("CoarseMapPredictor: out_factor must be >= 1");
}

std::vector<PatchPrediction> CoarseMapPredictor::predict(
    int frame_index, std::span<const PatchRect> patches) {
    if (frame_index < 0 || static_cast<std::size_t>(frame_index) >= frames_.size())
        throw validation_error("CoarseMapPredictor: frame index out of range");
    const FrameMaps& maps = frames_[frame_index];

    auto crop = [&](const DistanceMask& map, const PatchRect& p) {
        const int cell = p.size / out_factor_;
        const int cx0 = p.x0 / out_factor_;
        const int cy0 = p.y0 / out_factor_;
        DistanceMask out;
        out.d_max = map.d_max;
        out.values = Grid<double>(cell, cell);
        for (int y = 0; y < cell; ++y) {
            // padded area replicates the map edge
            const int sy = std::min(cy0 + y, map.height() - 1);
            for (int x = 0; x < cell; ++x)
                out.values(y, x) = map.values(sy, std::min(cx0 + x, map.width() - 1));
        }
        return out;
    };

    std::vector<PatchPrediction> out;
    out.reserve(patches.size());
    for (const PatchRect& p : patches) {
        if (p.x0 % out_factor_ != 0 || p.y0 % out_factor_ != 0 || p.size % out_factor_ != 0)
            throw validation_error("CoarseMapPredictor: patch not aligned to out_factor");
        out.push_back({crop(maps.cables, p), crop(maps.pylons, p)});
    }
    return out;
}

std::vector<FrameResult> run_stream(int frame_width, int frame_height, int frame_count,
                                    Predictor& predictor, const FlowInputs& flows,
                                    const PipelineConfig& cfg) {
    if (frame_count < 0) throw validation_error("run_stream: negative frame count");
    if (cfg.patch % cfg.out_factor != 0)
        throw validation_error("run_stream: patch not divisible by out_factor");
    if (!flows.external.empty() &&
        flows.external.size() + 1 < static_cast<std::size_t>(frame_count))
        throw validation_error("run_stream: need one external flow field per frame transition");
    if (!flows.frames.empty() && flows.frames.size() < static_cast<std::size_t>(frame_count))
        throw validation_error("run_stream: need one flow frame per stream frame");

    const SplitLayout layout = pad_split(frame_width, frame_height, cfg.patch);
    std::vector<FrameResult> results;
    results.reserve(frame_count);
    DistanceMask prev_cables, prev_pylons;
    bool have_prev = false;

    for (int t = 0; t < frame_count; ++t) {
        std::vector<DistanceMask> cable_patches, pylon_patches;
        cable_patches.reserve(layout.patches.size());
        pylon_patches.reserve(layout.patches.size());
        for (std::size_t i = 0; i < layout.patches.size(); i += cfg.batch) {
            const std::size_t n = std::min<std::size_t>(cfg.batch, layout.patches.size() - i);
            std::vector<PatchPrediction> batch =
                predictor.predict(t, {layout.patches.data() + i, n});
            if (batch.size() != n)
                throw validation_error("run_stream: frame " + std::to_string(t) +
                                       ": predictor returned " + std::to_string(batch.size()) +
                                       " outputs for a batch of " + std::to_string(n));
            const int cell = cfg.patch / cfg.out_factor;
            for (std::size_t j = 0; j < n; ++j) {
                const PatchPrediction& p = batch[j];
                if (p.cables.width() != cell || p.cables.height() != cell ||
                    p.pylons.width() != cell || p.pylons.height() != cell)
                    throw validation_error("run_stream: frame " + std::to_string(t) +
                                           " patch " + std::to_string(i + j) +
                                           ": prediction shape mismatch");
                cable_patches.push_back(p.cables);
                pylon_patches.push_back(p.pylons);
            }
        }

        DistanceMask cur_cables = stitch(cable_patches, layout, cfg.out_factor);
        DistanceMask cur_pylons = stitch(pylon_patches, layout, cfg.out_factor);

        DistanceMask fused_cables, fused_pylons;
        if (!have_prev) {
            fused_cables = std::move(cur_cables);
            fused_pylons = std::move(cur_pylons);
        } else {
            FlowField flow;
            if (!flows.external.empty())
                flow = flows.external[t - 1];
            else if (!flows.frames.empty())
                flow = estimate_flow(flows.frames[t - 1], flows.frames[t], cfg);
            else
                flow = zero_flow(cur_cables.width(), cur_cables.height());
            fused_cables = temporal_fuse(warp(prev_cables, flow), cur_cables, cfg.fuse_weight);
            fused_pylons = temporal_fuse(warp(prev_pylons, flow), cur_pylons, cfg.fuse_weight);
        }

        FrameResult r;
        r.seg_cables = threshold_upscale(fused_cables, cfg.threshold_px, frame_width, frame_height);
        r.seg_pylons = threshold_upscale(fused_pylons, cfg.threshold_px, frame_width, frame_height);
        r.fused_cables = fused_cables;
        r.fused_pylons = fused_pylons;
        prev_cables = std::move(fused_cables);
        prev_pylons = std::move(fused_pylons);
        have_prev = true;
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace linedet
