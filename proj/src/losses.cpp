#include "linedet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "linedet/targets.hpp"

namespace linedet {

namespace {

void require_same_shape(const DistanceMask& a, const DistanceMask& b, const char* op) {
    if (!a.values.same_shape(b.values))
        throw validation_error(std::string(op) + ": dimension mismatch");
    if (a.d_max != b.d_max)
        throw validation_error(std::string(op) + ": d_max mismatch");
}

// Union-find over window cells with per-root counts of ground-truth labels.
// Label count lists stay tiny (windows hold few components), so flat vectors
// beat maps here.
class ComponentCounts {
public:
    explicit ComponentCounts(int cells)
        : parent_(cells), rank_(cells, 0), counts_(cells) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }

    void seed(int cell, int label) { counts_[cell] = {{label, 1}}; }

    int find(int v) {
        while (parent_[v] != v) {
            parent_[v] = parent_[parent_[v]];
            v = parent_[v];
        }
        return v;
    }

    // Merges the two roots; reports pair counts across the merge boundary.
    int unite(int ra, int rb, std::int64_t& same, std::int64_t& diff) {
        std::int64_t total_a = 0, total_b = 0, matched = 0;
        for (const auto& [label, n] : counts_[ra]) total_a += n;
        for (const auto& [label, n] : counts_[rb]) total_b += n;
        for (const auto& [label_a, n_a] : counts_[ra])
            for (const auto& [label_b, n_b] : counts_[rb])
                if (label_a == label_b) matched += n_a * n_b;
        same = matched;
        diff = total_a * total_b - matched;

        if (rank_[ra] < rank_[rb]) std::swap(ra, rb);
        parent_[rb] = ra;
        if (rank_[ra] == rank_[rb]) ++rank_[ra];
        for (const auto& [label, n] : counts_[rb]) {
            auto it = std::find_if(counts_[ra].begin(), counts_[ra].end(),
                                   [&](const auto& e) { return e.first == label; });
            if (it == counts_[ra].end())
                counts_[ra].emplace_back(label, n);
            else
                it->second += n;
        }
        counts_[rb].clear();
        return ra;
    }

private:
    std::vector<int> parent_;
    std::vector<int> rank_;
    std::vector<std::vector<std::pair<int, std::int64_t>>> counts_;
};

}  // namespace

FrequencyTable frequency(const DistanceMask& gt) {
    FrequencyTable table;
    table.d_max = gt.d_max;
    table.counts.assign(gt.d_max + 1, 0);
    for (const double v : gt.values) ++table.counts[frequency_bin(v, gt.d_max)];
    table.total = static_cast<std::int64_t>(gt.values.size());
    return table;
}

double lif_weight(double f, double epsilon) {
    return 1.0 / std::log1p(epsilon + f);
}

SingleLoss ldat(const DistanceMask& pred, const DistanceMask& gt, const LossConfig& cfg) {
    require_same_shape(pred, gt, "ldat");

    std::vector<double> weight_of_bin(gt.d_max + 1, 1.0);
    if (cfg.use_lif_weights) {
        const FrequencyTable table = frequency(gt);
        for (int b = 0; b <= gt.d_max; ++b)
            weight_of_bin[b] = lif_weight(table.frequency(b), cfg.epsilon);
    }

    SingleLoss out;
    out.grad = Grid<double>(pred.width(), pred.height(), 0.0);
    for (int y = 0; y < pred.height(); ++y) {
        for (int x = 0; x < pred.width(); ++x) {
            const double g = gt.values(y, x);
            const double w = weight_of_bin[frequency_bin(g, gt.d_max)];
            const double diff = pred.values(y, x) - g;
            out.scalar += w * diff * diff;
            out.grad(y, x) = 2.0 * w * diff;
        }
    }
    return out;
}

Grid<int> gt_background_components(const Grid<double>& gt_window) {
    const int w = gt_window.width();
    const int h = gt_window.height();
    Grid<int> labels(w, h, -1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (gt_window(y, x) == 0.0) labels(y, x) = 0;

    int next = 1;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (labels(y, x) != -1) continue;
            const int label = next++;
            stack.push_back({y, x});
            labels(y, x) = label;
            while (!stack.empty()) {
                const auto [cy, cx] = stack.back();
                stack.pop_back();
                constexpr int dy[] = {-1, 1, 0, 0};
                constexpr int dx[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int ny = cy + dy[k];
                    const int nx = cx + dx[k];
                    if (labels.in_bounds(ny, nx) && labels(ny, nx) == -1) {
                        labels(ny, nx) = label;
                        stack.push_back({ny, nx});
                    }
                }
            }
        }
    }
    return labels;
}

WindowLoss malis_window_loss(const Grid<double>& pred_window,
                             const Grid<double>& gt_window) {
    if (!pred_window.same_shape(gt_window))
        throw validation_error("malis_window_loss: window shape mismatch");

    const int w = pred_window.width();
    const int h = pred_window.height();
    WindowLoss out;
    out.grad = Grid<double>(w, h, 0.0);

    const Grid<int> labels = gt_background_components(gt_window);
    std::int64_t background = 0;
    for (const int l : labels)
        if (l > 0) ++background;
    out.pair_count = background * (background - 1) / 2;
    if (out.pair_count == 0) return out;

    struct Edge {
        double affinity;
        int u, v;  // flat cell indices; affinity attained at u (or tied)
    };
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(w) * h * 2);
    auto flat = [w](int y, int x) { return y * w + x; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (labels(y, x) <= 0) continue;
            const double pv = pred_window(y, x);
            if (x + 1 < w && labels(y, x + 1) > 0) {
                const double qv = pred_window(y, x + 1);
                edges.push_back(qv < pv ? Edge{qv, flat(y, x + 1), flat(y, x)}
                                        : Edge{pv, flat(y, x), flat(y, x + 1)});
            }
            if (y + 1 < h && labels(y + 1, x) > 0) {
                const double qv = pred_window(y + 1, x);
                edges.push_back(qv < pv ? Edge{qv, flat(y + 1, x), flat(y, x)}
                                        : Edge{pv, flat(y, x), flat(y + 1, x)});
            }
        }
    }
    std::stable_sort(edges.begin(), edges.end(),
                     [](const Edge& a, const Edge& b) { return a.affinity > b.affinity; });

    ComponentCounts sets(w * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (labels(y, x) > 0) sets.seed(flat(y, x), labels(y, x));

    const double pair_norm = static_cast<double>(out.pair_count);
    for (const Edge& e : edges) {
        const int ra = sets.find(e.u);
        const int rb = sets.find(e.v);
        if (ra == rb) continue;
        std::int64_t same = 0, diff = 0;
        sets.unite(ra, rb, same, diff);
        const double a = e.affinity;
        out.loss += (static_cast<double>(diff) * a * a +
                     static_cast<double>(same) * (1.0 - a) * (1.0 - a)) /
                    pair_norm;
        const double g = (2.0 * a * static_cast<double>(diff) -
                          2.0 * (1.0 - a) * static_cast<double>(same)) /
                         pair_norm;
        const double pu = pred_window(e.u / w, e.u % w);
        const double pv = pred_window(e.v / w, e.v % w);
        if (pu == pv) {
            out.grad(e.u / w, e.u % w) += 0.5 * g;
            out.grad(e.v / w, e.v % w) += 0.5 * g;
        } else {
            out.grad(e.u / w, e.u % w) += g;
        }
        out.merges.push_back({a, same, diff});
    }
    return out;
}

SingleLoss malis_loss(const DistanceMask& pred, const DistanceMask& gt,
                      const LossConfig& cfg) {
    require_same_shape(pred, gt, "malis_loss");
    if (cfg.malis_window < 2)
        throw validation_error("malis_loss: window must be >= 2 cells");

    const int w = pred.width();
    const int h = pred.height();
    const int win = cfg.malis_window;

    struct Placed {
        int y0, x0;
        WindowLoss result;
    };
    std::vector<Placed> windows;
    for (int y0 = 0; y0 < h; y0 += win) {
        for (int x0 = 0; x0 < w; x0 += win) {
            const int wh = std::min(win, h - y0);
            const int ww = std::min(win, w - x0);
            Grid<double> pw(ww, wh), gw(ww, wh);
            for (int y = 0; y < wh; ++y)
                for (int x = 0; x < ww; ++x) {
                    pw(y, x) = pred.values(y0 + y, x0 + x);
                    gw(y, x) = gt.values(y0 + y, x0 + x);
                }
            WindowLoss wl = malis_window_loss(pw, gw);
            if (wl.pair_count > 0) windows.push_back({y0, x0, std::move(wl)});
        }
    }

    SingleLoss out;
    out.grad = Grid<double>(w, h, 0.0);
    if (windows.empty()) return out;

    const double norm = static_cast<double>(windows.size());
    for (const Placed& p : windows) {
        out.scalar += p.result.loss / norm;
        for (int y = 0; y < p.result.grad.height(); ++y)
            for (int x = 0; x < p.result.grad.width(); ++x)
                out.grad(p.y0 + y, p.x0 + x) += p.result.grad(y, x) / norm;
    }
    return out;
}

LossValue composite_loss(const DistanceMask& pred_cables, const DistanceMask& pred_pylons,
                         const DistanceMask& gt_cables, const DistanceMask& gt_pylons,
                         const LossConfig& cfg) {
    require_same_shape(pred_cables, pred_pylons, "composite_loss");
    require_same_shape(pred_cables, gt_cables, "composite_loss");
    require_same_shape(pred_cables, gt_pylons, "composite_loss");

    SingleLoss cable_term = ldat(pred_cables, gt_cables, cfg);
    SingleLoss pylon_term = ldat(pred_pylons, gt_pylons, cfg);

    LossValue out;
    out.ldat_cables = cable_term.scalar;
    out.ldat_pylons = pylon_term.scalar;
    out.grad_cables = std::move(cable_term.grad);
    out.grad_pylons = std::move(pylon_term.grad);
    out.scalar = out.ldat_cables + out.ldat_pylons;

    if (cfg.use_malis) {
        const SingleLoss connectivity = malis_loss(pred_cables, gt_cables, cfg);
        out.malis = connectivity.scalar;
        out.scalar += cfg.lambda * connectivity.scalar;
        for (int y = 0; y < out.grad_cables.height(); ++y)
            for (int x = 0; x < out.grad_cables.width(); ++x)
                out.grad_cables(y, x) += cfg.lambda * connectivity.grad(y, x);
    }
    return out;
}

}  // namespace linedet
