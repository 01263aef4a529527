#include "linedet/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

#include <json.hpp>

namespace linedet {

namespace {

using nlohmann::json;

std::string where(const ImageMeta& meta, const char* kind, std::size_t index) {
    return "image '" + meta.image_id + "' " + kind + " #" + std::to_string(index);
}

void check_polyline(const ImageMeta& meta, const Polyline& line, std::size_t index) {
    if (line.points.size() < 2)
        throw validation_error(where(meta, "cable", index) + ": needs at least 2 points");
    for (const PointXY& p : line.points) {
        if (!(p.x >= 0.0 && p.x <= meta.width && p.y >= 0.0 && p.y <= meta.height))
            throw validation_error(where(meta, "cable", index) + ": point (" +
                                   std::to_string(p.x) + ", " + std::to_string(p.y) +
                                   ") outside image bounds");
    }
}

void check_bbox(const ImageMeta& meta, const BBox& box, const char* kind,
                std::size_t index) {
    if (!(box.x_min < box.x_max) || !(box.y_min < box.y_max))
        throw validation_error(where(meta, kind, index) + ": degenerate box");
    const bool intersects = box.x_min < meta.width && box.x_max > 0.0 &&
                            box.y_min < meta.height && box.y_max > 0.0;
    if (!intersects)
        throw validation_error(where(meta, kind, index) + ": box does not intersect image");
}

double point_segment_dist2(double px, double py, const PointXY& a, const PointXY& b) {
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double wx = px - a.x;
    const double wy = py - a.y;
    const double vv = vx * vx + vy * vy;
    double t = 0.0;
    if (vv > 0.0) t = std::clamp((wx * vx + wy * vy) / vv, 0.0, 1.0);
    const double dx = wx - t * vx;
    const double dy = wy - t * vy;
    return dx * dx + dy * dy;
}

void fill_box(BinaryMask& mask, const BBox& box) {
    // pixel center cx = x + 0.5 is inside iff x_min <= cx < x_max
    const int x_lo = std::max(0, static_cast<int>(std::ceil(box.x_min - 0.5)));
    const int y_lo = std::max(0, static_cast<int>(std::ceil(box.y_min - 0.5)));
    const int x_hi = std::min(mask.width() - 1, static_cast<int>(std::floor(box.x_max)));
    const int y_hi = std::min(mask.height() - 1, static_cast<int>(std::floor(box.y_max)));
    for (int y = y_lo; y <= y_hi; ++y) {
        const double cy = y + 0.5;
        if (!(cy >= box.y_min && cy < box.y_max)) continue;
        for (int x = x_lo; x <= x_hi; ++x) {
            const double cx = x + 0.5;
            if (cx >= box.x_min && cx < box.x_max) mask(y, x) = 1;
        }
    }
}

BinaryMask rasterize_boxes(const std::vector<BBox>& boxes, int width, int height) {
    BinaryMask mask(width, height, 0);
    for (const BBox& box : boxes) fill_box(mask, box);
    return mask;
}

double get_number(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_number())
        throw parse_error(ctx + ": missing or non-numeric '" + key + "'");
    return j[key].get<double>();
}

std::string get_string(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_string())
        throw parse_error(ctx + ": missing or non-string '" + key + "'");
    return j[key].get<std::string>();
}

BBox parse_box(const json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != 4 ||
        !std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number(); }))
        throw parse_error(ctx + ": box must be [x_min, y_min, x_max, y_max]");
    return BBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                j[3].get<double>()};
}

}  // namespace

void validate(const AnnotationSet& a) {
    if (a.meta.width < 1 || a.meta.height < 1)
        throw validation_error("image '" + a.meta.image_id + "': non-positive dimensions");
    for (std::size_t i = 0; i < a.cables.size(); ++i)
        check_polyline(a.meta, a.cables[i], i);
    for (std::size_t i = 0; i < a.pylons.size(); ++i)
        check_bbox(a.meta, a.pylons[i], "pylon", i);
    for (std::size_t i = 0; i < a.exclusions.size(); ++i)
        check_bbox(a.meta, a.exclusions[i], "exclusion", i);
}

void validate(const Dataset& ds) {
    std::unordered_set<std::string> seen;
    for (const AnnotationSet& a : ds.items) {
        if (!seen.insert(a.meta.image_id).second)
            throw validation_error("duplicate image_id '" + a.meta.image_id + "'");
        validate(a);
    }
}

Dataset parse_annotations(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw parse_error(std::string("annotation document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array())
        throw parse_error("annotation document: top level must contain an 'images' array");

    Dataset ds;
    for (std::size_t i = 0; i < doc["images"].size(); ++i) {
        const json& jm = doc["images"][i];
        const std::string ctx = "images[" + std::to_string(i) + "]";
        if (!jm.is_object()) throw parse_error(ctx + ": record must be an object");

        AnnotationSet a;
        a.meta.image_id = get_string(jm, "image_id", ctx);
        a.meta.width = static_cast<int>(get_number(jm, "width", ctx));
        a.meta.height = static_cast<int>(get_number(jm, "height", ctx));
        a.meta.recording_id = get_string(jm, "recording_id", ctx);
        a.meta.location_group = get_string(jm, "location_group", ctx);

        if (!jm.contains("cables") || !jm["cables"].is_array())
            throw parse_error(ctx + ": missing 'cables' array");
        for (std::size_t c = 0; c < jm["cables"].size(); ++c) {
            const json& jl = jm["cables"][c];
            const std::string lctx = ctx + ".cables[" + std::to_string(c) + "]";
            if (!jl.is_array()) throw parse_error(lctx + ": polyline must be an array");
            Polyline line;
            for (const json& jp : jl) {
                if (!jp.is_array() || jp.size() != 2 || !jp[0].is_number() ||
                    !jp[1].is_number())
                    throw parse_error(lctx + ": point must be [x, y]");
                line.points.push_back({jp[0].get<double>(), jp[1].get<double>()});
            }
            a.cables.push_back(std::move(line));
        }

        if (!jm.contains("pylons") || !jm["pylons"].is_array())
            throw parse_error(ctx + ": missing 'pylons' array");
        for (std::size_t b = 0; b < jm["pylons"].size(); ++b)
            a.pylons.push_back(
                parse_box(jm["pylons"][b], ctx + ".pylons[" + std::to_string(b) + "]"));

        if (jm.contains("exclusions")) {
            if (!jm["exclusions"].is_array())
                throw parse_error(ctx + ": 'exclusions' must be an array");
            for (std::size_t b = 0; b < jm["exclusions"].size(); ++b)
                a.exclusions.push_back(parse_box(
                    jm["exclusions"][b], ctx + ".exclusions[" + std::to_string(b) + "]"));
        }

        ds.items.push_back(std::move(a));
    }
    validate(ds);
    return ds;
}

std::string annotations_to_json(const Dataset& ds) {
    json images = json::array();
    for (const AnnotationSet& a : ds.items) {
        json jm;
        jm["image_id"] = a.meta.image_id;
        jm["width"] = a.meta.width;
        jm["height"] = a.meta.height;
        jm["recording_id"] = a.meta.recording_id;
        jm["location_group"] = a.meta.location_group;
        json cables = json::array();
        for (const Polyline& line : a.cables) {
            json jl = json::array();
            for (const PointXY& p : line.points) jl.push_back({p.x, p.y});
            cables.push_back(std::move(jl));
        }
        jm["cables"] = std::move(cables);
        json pylons = json::array();
        for (const BBox& b : a.pylons) pylons.push_back({b.x_min, b.y_min, b.x_max, b.y_max});
        jm["pylons"] = std::move(pylons);
        json exclusions = json::array();
        for (const BBox& b : a.exclusions)
            exclusions.push_back({b.x_min, b.y_min, b.x_max, b.y_max});
        jm["exclusions"] = std::move(exclusions);
        images.push_back(std::move(jm));
    }
    return json{{"images", std::move(images)}}.dump(2);
}

BinaryMask rasterize_cables(const std::vector<Polyline>& cables, int width,
                            int height, int thickness) {
    if (width < 1 || height < 1)
        throw validation_error("rasterize_cables: non-positive dimensions");
    if (thickness < 1 || thickness % 2 == 0)
        throw validation_error("rasterize_cables: thickness must be odd and >= 1");

    BinaryMask mask(width, height, 0);
    const double radius = (thickness - 1) / 2.0;
    const double r2 = radius * radius;

    for (const Polyline& line : cables) {
        for (std::size_t s = 0; s + 1 < line.points.size(); ++s) {
            const PointXY& a = line.points[s];
            const PointXY& b = line.points[s + 1];
            // only pixels inside the segment's radius-expanded box can hit
            const int x_lo = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - radius - 0.5)));
            const int x_hi = std::min(width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + radius)));
            const int y_lo = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - radius - 0.5)));
            const int y_hi = std::min(height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + radius)));
            for (int y = y_lo; y <= y_hi; ++y) {
                for (int x = x_lo; x <= x_hi; ++x) {
                    if (mask(y, x)) continue;
                    if (point_segment_dist2(x + 0.5, y + 0.5, a, b) <= r2) mask(y, x) = 1;
                }
            }
        }
    }
    return mask;
}

BinaryMask rasterize_pylons(const std::vector<BBox>& pylons, int width, int height) {
    if (width < 1 || height < 1)
        throw validation_error("rasterize_pylons: non-positive dimensions");
    return rasterize_boxes(pylons, width, height);
}

BinaryMask rasterize_exclusions(const std::vector<BBox>& exclusions, int width,
                                int height) {
    if (width < 1 || height < 1)
        throw validation_error("rasterize_exclusions: non-positive dimensions");
    return rasterize_boxes(exclusions, width, height);
}

AnnotationSet hflip_annotations(const AnnotationSet& a) {
    const double w = a.meta.width;
    AnnotationSet out;
    out.meta = a.meta;
    out.cables.reserve(a.cables.size());
    for (const Polyline& line : a.cables) {
        Polyline flipped;
        flipped.points.reserve(line.points.size());
        for (const PointXY& p : line.points) flipped.points.push_back({w - p.x, p.y});
        out.cables.push_back(std::move(flipped));
    }
    auto flip_box = [w](const BBox& b) {
        return BBox{w - b.x_max, b.y_min, w - b.x_min, b.y_max};
    };
    out.pylons.reserve(a.pylons.size());
    for (const BBox& b : a.pylons) out.pylons.push_back(flip_box(b));
    out.exclusions.reserve(a.exclusions.size());
    for (const BBox& b : a.exclusions) out.exclusions.push_back(flip_box(b));
    return out;
}

}  // namespace linedet
