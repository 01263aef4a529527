#pragma once

#include <filesystem>
#include <string>

#include "linedet/grid.hpp"
#include "linedet/pipeline.hpp"

namespace linedet {

/// Sidecar metadata stored next to every distance-mask PNG.
struct MaskMeta {
    int d_max = 128;
    int factor = 16;
};

/// Distance masks persist as 16-bit single-channel PNG with
/// value = round(normalized * 65535) plus a "<path>.json" sidecar carrying
/// d_max and the downsampling factor. Writes are atomic (temp + rename).
void write_distance_mask(const std::filesystem::path& path, const DistanceMask& dm,
                         int factor);
DistanceMask read_distance_mask(const std::filesystem::path& path);
MaskMeta read_mask_meta(const std::filesystem::path& path);

/// Binary masks persist as 8-bit single-channel PNG with values {0, 255}.
void write_binary_mask(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_binary_mask(const std::filesystem::path& path);

/// 8-bit grayscale image mapped to [0, 1]; used for flow-estimation frames.
void write_gray_image(const std::filesystem::path& path, const Grid<double>& image);
Grid<double> read_gray_image(const std::filesystem::path& path);

/// Flow files: 8-byte header (width, height as little-endian 32-bit ints),
/// then row-major little-endian float32 dx and dy planes.
void write_flow_field(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flow_field(const std::filesystem::path& path);

/// Gradient files: 8-byte header as above, one row-major little-endian
/// float64 plane.
void write_gradient(const std::filesystem::path& path, const Grid<double>& grad);
Grid<double> read_gradient(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace linedet
