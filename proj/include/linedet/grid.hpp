#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "linedet/error.hpp"

namespace linedet {

/// Row-major 2D value grid indexed as (y, x) with y in [0, height) and
/// x in [0, width). A default-constructed grid is empty (0x0).
template <typename T>
class Grid {
public:
    Grid() = default;

    Grid(int width, int height, T fill = T{})
        : width_(width),
          height_(height),
          data_(checked_size(width, height), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int y, int x) { return data_[index(y, x)]; }
    const T& operator()(int y, int x) const { return data_[index(y, x)]; }

    bool in_bounds(int y, int x) const {
        return y >= 0 && y < height_ && x >= 0 && x < width_;
    }

    bool same_shape(const Grid& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    static std::size_t checked_size(int width, int height) {
        if (width < 1 || height < 1)
            throw validation_error("Grid: dimensions must be positive");
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    std::size_t index(int y, int x) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Foreground/background flags; values are exactly 0 or 1.
using BinaryMask = Grid<std::uint8_t>;

/// Clamped, normalized distance grid: 0 = on the object, 1 = at least
/// d_max pixels (at full input resolution) away from it.
struct DistanceMask {
    Grid<double> values;
    int d_max = 128;

    int width() const { return values.width(); }
    int height() const { return values.height(); }
};

/// Axis-aligned square region of a full-resolution image.
struct PatchRect {
    int x0 = 0;
    int y0 = 0;
    int size = 0;

    friend bool operator==(const PatchRect&, const PatchRect&) = default;
};

/// Extracts the patch sub-grid at 1/factor of full resolution. The patch
/// offset and size must be divisible by factor.
template <typename T>
Grid<T> crop_grid(const Grid<T>& grid, const PatchRect& p, int factor) {
    if (factor < 1) throw validation_error("crop_grid: factor must be >= 1");
    if (p.x0 % factor != 0 || p.y0 % factor != 0 || p.size % factor != 0)
        throw validation_error("crop_grid: patch not aligned to factor");
    const int cx = p.x0 / factor;
    const int cy = p.y0 / factor;
    const int cs = p.size / factor;
    if (cx + cs > grid.width() || cy + cs > grid.height() || p.x0 < 0 || p.y0 < 0)
        throw validation_error("crop_grid: patch outside grid");
    Grid<T> out(cs, cs);
    for (int y = 0; y < cs; ++y)
        for (int x = 0; x < cs; ++x)
            out(y, x) = grid(cy + y, cx + x);
    return out;
}

}  // namespace linedet
