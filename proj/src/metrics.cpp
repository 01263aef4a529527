#include "linedet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "linedet/rng.hpp"
#include "linedet/targets.hpp"

namespace linedet {

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* op) {
    if (!a.same_shape(b)) throw validation_error(std::string(op) + ": dimension mismatch");
}

double ratio(std::int64_t num, std::int64_t den, std::int64_t other_set) {
    // den is the size of the reference set; when it is empty the score is 1
    // iff there was also nothing on the other side ("nothing to find,
    // nothing found"), else 0.
    if (den == 0) return other_set == 0 ? 1.0 : 0.0;
    return static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

BinaryMask apply_ignore(const BinaryMask& mask, const BinaryMask* ignore) {
    if (!ignore) return mask;
    BinaryMask out = mask;
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            if ((*ignore)(y, x)) out(y, x) = 0;
    return out;
}

}  // namespace

BinaryMask dilate8(const BinaryMask& mask) {
    BinaryMask out(mask.width(), mask.height(), 0);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(y, x)) continue;
            for (int ny = std::max(0, y - 1); ny <= std::min(mask.height() - 1, y + 1); ++ny)
                for (int nx = std::max(0, x - 1); nx <= std::min(mask.width() - 1, x + 1); ++nx)
                    out(ny, nx) = 1;
        }
    }
    return out;
}

PrfResult pixel_prf(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask* ignore) {
    require_same_shape(pred, gt, "pixel_prf");
    if (ignore) require_same_shape(pred, *ignore, "pixel_prf");

    ConfusionCounts c;
    for (int y = 0; y < pred.height(); ++y) {
        for (int x = 0; x < pred.width(); ++x) {
            if (ignore && (*ignore)(y, x)) continue;
            const bool p = pred(y, x);
            const bool g = gt(y, x);
            c.tp += p && g;
            c.fp += p && !g;
            c.fn += !p && g;
        }
    }
    PrfResult r;
    r.counts = c;
    const std::int64_t pred_total = c.tp + c.fp;
    const std::int64_t gt_total = c.tp + c.fn;
    r.precision = ratio(c.tp, pred_total, gt_total);
    r.recall = ratio(c.tp, gt_total, pred_total);
    r.f1 = f1_of(r.precision, r.recall);
    return r;
}

CcqResult ccq(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask* ignore) {
    require_same_shape(pred, gt, "ccq");
    if (ignore) require_same_shape(pred, *ignore, "ccq");

    const BinaryMask p = apply_ignore(pred, ignore);
    const BinaryMask g = apply_ignore(gt, ignore);
    const BinaryMask g_tol = dilate8(g);
    const BinaryMask p_tol = dilate8(p);

    std::int64_t pred_total = 0, gt_total = 0;
    ConfusionCounts c;
    c.relaxed = true;
    for (int y = 0; y < p.height(); ++y) {
        for (int x = 0; x < p.width(); ++x) {
            pred_total += p(y, x);
            gt_total += g(y, x);
            c.tp += p(y, x) && g_tol(y, x);
            c.fn += g(y, x) && !p_tol(y, x);
        }
    }
    c.fp = pred_total - c.tp;

    CcqResult r;
    r.counts = c;
    r.correctness = ratio(c.tp, pred_total, gt_total);
    r.completeness = ratio(gt_total - c.fn, gt_total, pred_total);
    const std::int64_t denom = c.tp + c.fp + c.fn;
    r.quality = denom == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
    return r;
}

MetricReport evaluate_image(const DistanceMask& pred, const DistanceMask& gt,
                            double threshold_px, const BinaryMask* exclusions) {
    if (!pred.values.same_shape(gt.values))
        throw validation_error("evaluate_image: resolution mismatch");
    const BinaryMask pred_seg = binarize(pred, threshold_px);
    const BinaryMask gt_seg = binarize(gt, threshold_px);

    const PrfResult prf = pixel_prf(pred_seg, gt_seg, exclusions);
    const CcqResult q = ccq(pred_seg, gt_seg, exclusions);

    MetricReport report;
    report.precision = prf.precision;
    report.recall = prf.recall;
    report.f1 = prf.f1;
    report.correctness = q.correctness;
    report.completeness = q.completeness;
    report.quality = q.quality;
    report.exact = prf.counts;
    report.relaxed = q.counts;
    return report;
}

MetricReport report_from_counts(const ConfusionCounts& exact, const ConfusionCounts& relaxed) {
    MetricReport r;
    r.exact = exact;
    r.relaxed = relaxed;
    const std::int64_t pred_total = exact.tp + exact.fp;
    const std::int64_t gt_total = exact.tp + exact.fn;
    r.precision = ratio(exact.tp, pred_total, gt_total);
    r.recall = ratio(exact.tp, gt_total, pred_total);
    r.f1 = f1_of(r.precision, r.recall);

    const std::int64_t relaxed_pred_total = relaxed.tp + relaxed.fp;
    r.correctness = ratio(relaxed.tp, relaxed_pred_total, gt_total);
    r.completeness = ratio(gt_total - relaxed.fn, gt_total, relaxed_pred_total);
    const std::int64_t denom = relaxed.tp + relaxed.fp + relaxed.fn;
    r.quality = denom == 0 ? 1.0 : static_cast<double>(relaxed.tp) / static_cast<double>(denom);
    return r;
}

AggregateReport aggregate(const std::vector<std::vector<MetricReport>>& folds,
                          Pooling pooling) {
    if (folds.empty()) throw validation_error("aggregate: no folds");

    AggregateReport out;
    for (const std::vector<MetricReport>& fold : folds) {
        if (fold.empty()) throw validation_error("aggregate: empty fold");
        if (pooling == Pooling::micro) {
            ConfusionCounts exact, relaxed;
            relaxed.relaxed = true;
            for (const MetricReport& r : fold) {
                exact.tp += r.exact.tp;
                exact.fp += r.exact.fp;
                exact.fn += r.exact.fn;
                relaxed.tp += r.relaxed.tp;
                relaxed.fp += r.relaxed.fp;
                relaxed.fn += r.relaxed.fn;
            }
            out.per_fold.push_back(report_from_counts(exact, relaxed));
        } else {
            MetricReport mean;
            const double n = static_cast<double>(fold.size());
            for (const MetricReport& r : fold) {
                mean.precision += r.precision / n;
                mean.recall += r.recall / n;
                mean.f1 += r.f1 / n;
                mean.correctness += r.correctness / n;
                mean.completeness += r.completeness / n;
                mean.quality += r.quality / n;
                mean.exact.tp += r.exact.tp;
                mean.exact.fp += r.exact.fp;
                mean.exact.fn += r.exact.fn;
                mean.relaxed.tp += r.relaxed.tp;
                mean.relaxed.fp += r.relaxed.fp;
                mean.relaxed.fn += r.relaxed.fn;
            }
            out.per_fold.push_back(mean);
        }
    }

    auto stats = [&](auto member) {
        MetricStats s;
        const double n = static_cast<double>(out.per_fold.size());
        for (const MetricReport& r : out.per_fold) s.mean += r.*member / n;
        double var = 0.0;
        for (const MetricReport& r : out.per_fold) {
            const double d = r.*member - s.mean;
            var += d * d / n;
        }
        s.stddev = std::sqrt(var);
        return s;
    };
    out.precision = stats(&MetricReport::precision);
    out.recall = stats(&MetricReport::recall);
    out.f1 = stats(&MetricReport::f1);
    out.correctness = stats(&MetricReport::correctness);
    out.completeness = stats(&MetricReport::completeness);
    out.quality = stats(&MetricReport::quality);
    return out;
}

FoldAssignment fold_split(const Dataset& ds, int k, std::uint64_t seed) {
    if (k < 2) throw validation_error("fold_split: k must be >= 2");

    struct Group {
        std::string location;
        std::vector<std::string> image_ids;
    };
    std::map<std::string, Group> by_location;
    std::map<std::string, std::size_t> recordings;
    for (const AnnotationSet& a : ds.items) {
        Group& g = by_location[a.meta.location_group];
        g.location = a.meta.location_group;
        g.image_ids.push_back(a.meta.image_id);
        ++recordings[a.meta.recording_id];
    }
    if (recordings.size() < static_cast<std::size_t>(k))
        throw validation_error("fold_split: fewer recordings (" +
                               std::to_string(recordings.size()) + ") than folds (" +
                               std::to_string(k) + ")");

    std::vector<Group> groups;
    groups.reserve(by_location.size());
    for (auto& [loc, g] : by_location) groups.push_back(std::move(g));

    // seeded order among equal-sized groups, then largest first
    Rng rng(derive_seed(seed, 0x666f6c64));  // "fold"
    for (std::size_t i = groups.size(); i > 1; --i)
        std::swap(groups[i - 1], groups[rng.below(i)]);
    std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
        return a.image_ids.size() > b.image_ids.size();
    });

    FoldAssignment out;
    out.k = k;
    std::vector<std::size_t> load(k, 0);
    for (const Group& g : groups) {
        const int fold = static_cast<int>(
            std::min_element(load.begin(), load.end()) - load.begin());
        load[fold] += g.image_ids.size();
        for (const std::string& id : g.image_ids) out.fold_of_image[id] = fold;
    }
    return out;
}

}  // namespace linedet
