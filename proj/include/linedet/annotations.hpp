#pragma once

#include <string>
#include <vector>

#include "linedet/grid.hpp"

namespace linedet {

struct ImageMeta {
    std::string image_id;
    int width = 0;
    int height = 0;
    std::string recording_id;
    std::string location_group;
};

struct PointXY {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const PointXY&, const PointXY&) = default;
};

/// Open chain of at least two points in image coordinates (origin top-left,
/// x right, y down). Cables are open curves; there is no implicit closure.
struct Polyline {
    std::vector<PointXY> points;
};

/// Axis-aligned box with x_min < x_max and y_min < y_max.
struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    friend bool operator==(const BBox&, const BBox&) = default;
};

struct AnnotationSet {
    ImageMeta meta;
    std::vector<Polyline> cables;
    std::vector<BBox> pylons;
    std::vector<BBox> exclusions;
};

struct Dataset {
    std::vector<AnnotationSet> items;
};

/// Throws validation_error naming the image and element on any violated
/// geometric invariant (out-of-bounds point, degenerate or detached box).
void validate(const AnnotationSet& a);

/// Validates every item and the pairwise uniqueness of image ids.
void validate(const Dataset& ds);

/// Parses and validates a UTF-8 JSON annotation document. Unknown keys are
/// ignored; a missing "exclusions" array means no exclusions.
Dataset parse_annotations(const std::string& text);

/// Serializes a dataset back to the annotation document schema.
std::string annotations_to_json(const Dataset& ds);

/// A pixel is foreground iff the Euclidean distance from its center
/// (x + 0.5, y + 0.5) to the nearest polyline segment is <= (thickness-1)/2.
/// Thickness must be odd and >= 1.
BinaryMask rasterize_cables(const std::vector<Polyline>& cables, int width,
                            int height, int thickness = 5);

/// A pixel is foreground iff its center lies inside any box, with half-open
/// containment (x_min <= cx < x_max, likewise y). Boxes are clipped to the
/// image; an empty list yields an all-background mask.
BinaryMask rasterize_pylons(const std::vector<BBox>& pylons, int width, int height);

/// Same fill rule as rasterize_pylons.
BinaryMask rasterize_exclusions(const std::vector<BBox>& exclusions, int width,
                                int height);

/// Mirrors all geometry about the vertical image axis: x -> width - x, with
/// box min/max re-normalized. Applying it twice is the identity.
AnnotationSet hflip_annotations(const AnnotationSet& a);

}  // namespace linedet
