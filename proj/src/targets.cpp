#include "linedet/targets.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace linedet {

namespace {

// Lower envelope of parabolas y = f[q] + (x - q)^2 sampled at integer x
// (Felzenszwalb-Huttenlocher). Sites with f[q] < 0 are absent. Writes
// squared distances to out; -1 if no site exists.
void lower_envelope(const std::vector<std::int64_t>& f, std::vector<std::int64_t>& out,
                    std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    v.clear();
    z.assign(n + 1, 0.0);
    for (int q = 0; q < n; ++q) {
        if (f[q] < 0) continue;
        double s;
        while (true) {
            if (v.empty()) {
                s = -std::numeric_limits<double>::infinity();
                break;
            }
            const int r = v.back();
            // intersection of parabolas rooted at r and q
            s = (static_cast<double>(f[q] + static_cast<std::int64_t>(q) * q) -
                 static_cast<double>(f[r] + static_cast<std::int64_t>(r) * r)) /
                (2.0 * (q - r));
            if (s > z[v.size() - 1]) break;
            v.pop_back();
        }
        z[v.size()] = s;
        v.push_back(q);
        z[v.size()] = std::numeric_limits<double>::infinity();
    }
    if (v.empty()) {
        std::fill(out.begin(), out.end(), std::int64_t{-1});
        return;
    }
    std::size_t k = 0;
    for (int x = 0; x < n; ++x) {
        while (z[k + 1] < x) ++k;
        const std::int64_t dx = x - v[k];
        out[x] = f[v[k]] + dx * dx;
    }
}

}  // namespace

Grid<std::int64_t> edt_squared(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();

    // pass 1: per column, distance in rows to the nearest foreground cell
    Grid<int> rowdist(w, h, -1);
    for (int x = 0; x < w; ++x) {
        int last = -1;
        for (int y = 0; y < h; ++y) {
            if (mask(y, x)) last = y;
            if (last >= 0) rowdist(y, x) = y - last;
        }
        last = -1;
        for (int y = h - 1; y >= 0; --y) {
            if (mask(y, x)) last = y;
            if (last >= 0) {
                const int d = last - y;
                if (rowdist(y, x) < 0 || d < rowdist(y, x)) rowdist(y, x) = d;
            }
        }
    }

    // pass 2: per row, lower envelope over the squared column distances
    Grid<std::int64_t> out(w, h, kNoForeground);
    std::vector<std::int64_t> f(w), d(w);
    std::vector<int> v;
    std::vector<double> z;
    v.reserve(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int g = rowdist(y, x);
            f[x] = g < 0 ? std::int64_t{-1} : static_cast<std::int64_t>(g) * g;
        }
        lower_envelope(f, d, v, z);
        for (int x = 0; x < w; ++x)
            out(y, x) = d[x] < 0 ? kNoForeground : d[x];
    }
    return out;
}

Grid<double> edt(const BinaryMask& mask) {
    const Grid<std::int64_t> sq = edt_squared(mask);
    Grid<double> out(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            out(y, x) = sq(y, x) == kNoForeground
                            ? std::numeric_limits<double>::infinity()
                            : std::sqrt(static_cast<double>(sq(y, x)));
    return out;
}

DistanceMask clamp_normalize(const Grid<double>& dist, int d_max) {
    if (d_max < 1) throw validation_error("clamp_normalize: d_max must be >= 1");
    DistanceMask dm;
    dm.d_max = d_max;
    dm.values = Grid<double>(dist.width(), dist.height());
    const double dmax = d_max;
    for (int y = 0; y < dist.height(); ++y)
        for (int x = 0; x < dist.width(); ++x)
            dm.values(y, x) = std::min(dist(y, x), dmax) / dmax;
    return dm;
}

DistanceMask minpool(const DistanceMask& dm, int factor) {
    if (factor < 1) throw validation_error("minpool: factor must be >= 1");
    if (dm.width() % factor != 0 || dm.height() % factor != 0)
        throw validation_error("minpool: dimensions not divisible by factor");
    const int cw = dm.width() / factor;
    const int ch = dm.height() / factor;
    DistanceMask out;
    out.d_max = dm.d_max;
    out.values = Grid<double>(cw, ch);
    for (int cy = 0; cy < ch; ++cy) {
        for (int cx = 0; cx < cw; ++cx) {
            double m = dm.values(cy * factor, cx * factor);
            for (int y = cy * factor; y < (cy + 1) * factor; ++y)
                for (int x = cx * factor; x < (cx + 1) * factor; ++x)
                    m = std::min(m, dm.values(y, x));
            out.values(cy, cx) = m;
        }
    }
    return out;
}

DistanceMask minpool_padded(const DistanceMask& dm, int factor, bool crop_to_floor) {
    if (factor < 1) throw validation_error("minpool_padded: factor must be >= 1");
    const int w = dm.width();
    const int h = dm.height();
    if (w % factor == 0 && h % factor == 0) return minpool(dm, factor);

    const int pw = (w + factor - 1) / factor * factor;
    const int ph = (h + factor - 1) / factor * factor;
    DistanceMask padded;
    padded.d_max = dm.d_max;
    padded.values = Grid<double>(pw, ph, 1.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            padded.values(y, x) = dm.values(y, x);
    DistanceMask pooled = minpool(padded, factor);
    if (!crop_to_floor) return pooled;

    const int cw = w / factor;
    const int ch = h / factor;
    if (cw < 1 || ch < 1)
        throw validation_error("minpool_padded: image smaller than one block");
    DistanceMask out;
    out.d_max = dm.d_max;
    out.values = Grid<double>(cw, ch);
    for (int y = 0; y < ch; ++y)
        for (int x = 0; x < cw; ++x)
            out.values(y, x) = pooled.values(y, x);
    return out;
}

BinaryMask binarize(const DistanceMask& dm, double threshold_px) {
    if (!(threshold_px > 0.0 && threshold_px <= dm.d_max))
        throw validation_error("binarize: threshold must be in (0, d_max]");
    BinaryMask out(dm.width(), dm.height(), 0);
    for (int y = 0; y < dm.height(); ++y)
        for (int x = 0; x < dm.width(); ++x)
            out(y, x) = dm.values(y, x) * dm.d_max < threshold_px ? 1 : 0;
    return out;
}

BinaryMask downsample_segmentation(const BinaryMask& mask, int n) {
    if (n < 2 || n % 2 != 0)
        throw validation_error("downsample_segmentation: n must be even and >= 2");
    if (mask.width() % n != 0 || mask.height() % n != 0)
        throw validation_error("downsample_segmentation: dimensions not divisible by n");
    const int cw = mask.width() / n;
    const int ch = mask.height() / n;
    const int c = n / 2;  // center pixels are block rows/cols c-1 and c
    BinaryMask out(cw, ch, 0);
    for (int cy = 0; cy < ch; ++cy)
        for (int cx = 0; cx < cw; ++cx) {
            const int y0 = cy * n + c - 1;
            const int x0 = cx * n + c - 1;
            out(cy, cx) = (mask(y0, x0) || mask(y0, x0 + 1) || mask(y0 + 1, x0) ||
                           mask(y0 + 1, x0 + 1))
                              ? 1
                              : 0;
        }
    return out;
}

BinaryMask any_overlap_downsample(const BinaryMask& mask, int factor, bool crop_to_floor) {
    if (factor < 1) throw validation_error("any_overlap_downsample: factor must be >= 1");
    const int w = mask.width();
    const int h = mask.height();
    const int cw = crop_to_floor ? w / factor : (w + factor - 1) / factor;
    const int ch = crop_to_floor ? h / factor : (h + factor - 1) / factor;
    if (cw < 1 || ch < 1)
        throw validation_error("any_overlap_downsample: image smaller than one block");
    BinaryMask out(cw, ch, 0);
    for (int y = 0; y < std::min(h, ch * factor); ++y)
        for (int x = 0; x < std::min(w, cw * factor); ++x)
            if (mask(y, x)) out(y / factor, x / factor) = 1;
    return out;
}

int frequency_bin(double value, int d_max) {
    return static_cast<int>(std::llround(value * d_max));
}

GtTargets gt_targets(const AnnotationSet& a, int d_max, int factor) {
    const BinaryMask cable_raster =
        rasterize_cables(a.cables, a.meta.width, a.meta.height);
    const BinaryMask pylon_raster =
        rasterize_pylons(a.pylons, a.meta.width, a.meta.height);
    GtTargets t;
    t.cables = minpool_padded(clamp_normalize(edt(cable_raster), d_max), factor);
    t.pylons = minpool_padded(clamp_normalize(edt(pylon_raster), d_max), factor);
    return t;
}

}  // namespace linedet
