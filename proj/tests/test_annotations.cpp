#include <doctest.h>

#include "linedet/annotations.hpp"
#include "linedet/rng.hpp"
#include "oracles.hpp"

using namespace linedet;

namespace {

std::string minimal_doc(const char* extra = "") {
    return std::string(R"({"images": [{
        "image_id": "a", "width": 64, "height": 48,
        "recording_id": "r0", "location_group": "l0",
        "cables": [[[1.0, 2.0], [10.0, 2.0]]],
        "pylons": [])") +
           extra + "}]}";
}

Polyline line_of(std::initializer_list<PointXY> pts) {
    Polyline l;
    l.points = pts;
    return l;
}

}  // namespace

TEST_SUITE_BEGIN("annotations");

TEST_CASE("parse: minimal well-formed document") {
    const Dataset ds = parse_annotations(minimal_doc());
    REQUIRE(ds.items.size() == 1);
    CHECK(ds.items[0].cables.size() == 1);
    CHECK(ds.items[0].cables[0].points.size() == 2);
    CHECK(ds.items[0].pylons.empty());
    CHECK(ds.items[0].exclusions.empty());
    CHECK(ds.items[0].meta.width == 64);
}

TEST_CASE("parse: unknown keys are ignored") {
    const Dataset ds = parse_annotations(minimal_doc(R"(, "camera": "front", "fps": 6)"));
    CHECK(ds.items.size() == 1);
}

TEST_CASE("parse: degenerate box is rejected") {
    const std::string doc = minimal_doc(R"(, "exclusions": [[3, 3, 3, 6]])");
    CHECK_THROWS_AS(parse_annotations(doc), validation_error);
}

TEST_CASE("parse: duplicate image ids are rejected") {
    const std::string one = minimal_doc();
    std::string doc = one;
    const std::size_t images_end = doc.rfind("]}");
    const std::size_t record_start = one.find('{', 1);
    doc.insert(images_end, ", " + one.substr(record_start, one.rfind("}]}") - record_start + 1));
    CHECK_THROWS_AS(parse_annotations(doc), validation_error);
}

TEST_CASE("parse: out-of-bounds geometry is rejected with context") {
    const std::string doc = R"({"images": [{
        "image_id": "bad", "width": 10, "height": 10,
        "recording_id": "r", "location_group": "l",
        "cables": [[[1, 1], [11, 1]]], "pylons": []}]})";
    try {
        parse_annotations(doc);
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        CHECK(std::string(e.what()).find("bad") != std::string::npos);
    }
}

TEST_CASE("parse: malformed JSON names the problem") {
    CHECK_THROWS_AS(parse_annotations("{\"images\": ["), parse_error);
    CHECK_THROWS_AS(parse_annotations("{}"), parse_error);
}

TEST_CASE("round trip through annotations_to_json") {
    const Dataset ds = parse_annotations(minimal_doc(R"(, "exclusions": [[1, 1, 4, 4]])"));
    const Dataset again = parse_annotations(annotations_to_json(ds));
    REQUIRE(again.items.size() == 1);
    CHECK(again.items[0].cables[0].points == ds.items[0].cables[0].points);
    CHECK(again.items[0].exclusions == ds.items[0].exclusions);
}

TEST_CASE("rasterize_cables: empty list gives all background") {
    const BinaryMask mask = rasterize_cables({}, 8, 8);
    for (const auto v : mask) CHECK(v == 0);
}

TEST_CASE("rasterize_cables: thickness must be odd") {
    CHECK_THROWS_AS(rasterize_cables({}, 8, 8, 4), validation_error);
    CHECK_THROWS_AS(rasterize_cables({}, 0, 8), validation_error);
}

TEST_CASE("rasterize_cables: horizontal segment matches the distance rule") {
    const auto cables = std::vector<Polyline>{line_of({{1.5, 4.5}, {6.5, 4.5}})};
    const BinaryMask mask = rasterize_cables(cables, 8, 8, 5);
    CHECK(mask == oracles::rasterize_cables(cables, 8, 8, 5));
    // end rows reach exactly columns 1..6, middle rows bulge further
    for (int x = 0; x < 8; ++x) {
        CHECK(mask(2, x) == (x >= 1 && x <= 6 ? 1 : 0));
        CHECK(mask(6, x) == (x >= 1 && x <= 6 ? 1 : 0));
        CHECK(mask(0, x) == 0);
        CHECK(mask(7, x) == 0);
    }
    CHECK(mask(4, 0) == 1);  // center (0.5, 4.5) is 1 px from the segment end
}

TEST_CASE("rasterize_cables: diagonal segment equals the brute-force oracle") {
    const auto cables = std::vector<Polyline>{line_of({{0.5, 0.5}, {7.5, 7.5}})};
    CHECK(rasterize_cables(cables, 8, 8, 5) == oracles::rasterize_cables(cables, 8, 8, 5));
}

TEST_CASE("rasterize_cables: 200 random polylines match the oracle exactly") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Polyline> cables;
        const int lines = 1 + static_cast<int>(rng.below(3));
        for (int l = 0; l < lines; ++l) {
            Polyline line;
            const int pts = 2 + static_cast<int>(rng.below(4));
            for (int p = 0; p < pts; ++p)
                line.points.push_back({rng.uniform(0.0, 32.0), rng.uniform(0.0, 32.0)});
            cables.push_back(line);
        }
        const int thickness = 1 + 2 * static_cast<int>(rng.below(3));
        REQUIRE(rasterize_cables(cables, 32, 32, thickness) ==
                oracles::rasterize_cables(cables, 32, 32, thickness));
    }
}

TEST_CASE("rasterize_pylons: single box fills its pixel block") {
    const BinaryMask mask = rasterize_pylons({BBox{2, 2, 5, 5}}, 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            CHECK(mask(y, x) == (y >= 2 && y <= 4 && x >= 2 && x <= 4 ? 1 : 0));
}

TEST_CASE("rasterize_pylons: overlapping boxes form a union") {
    const BinaryMask a = rasterize_pylons({BBox{1, 1, 4, 4}}, 8, 8);
    const BinaryMask b = rasterize_pylons({BBox{3, 3, 6, 6}}, 8, 8);
    const BinaryMask both = rasterize_pylons({BBox{1, 1, 4, 4}, BBox{3, 3, 6, 6}}, 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            CHECK(both(y, x) == (a(y, x) || b(y, x) ? 1 : 0));
}

TEST_CASE("rasterize_pylons: boxes clip to the image") {
    const BinaryMask mask = rasterize_pylons({BBox{-3, -3, 2, 2}}, 8, 8);
    std::int64_t count = 0;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            const double cx = x + 0.5, cy = y + 0.5;
            const bool inside = cx >= -3 && cx < 2 && cy >= -3 && cy < 2;
            CHECK(mask(y, x) == (inside ? 1 : 0));
            count += mask(y, x);
        }
    CHECK(count == 4);  // clipped area by per-pixel center test
}

TEST_CASE("hflip: reflects points and re-normalizes boxes") {
    AnnotationSet a;
    a.meta = {"img", 10, 5, "r", "l"};
    a.cables = {line_of({{1, 2}, {3, 2}})};
    a.pylons = {BBox{2, 0, 5, 1}};

    const AnnotationSet f = hflip_annotations(a);
    CHECK(f.cables[0].points[0] == PointXY{9, 2});
    CHECK(f.cables[0].points[1] == PointXY{7, 2});
    CHECK(f.pylons[0] == BBox{5, 0, 8, 1});

    const AnnotationSet ff = hflip_annotations(f);
    CHECK(ff.cables[0].points == a.cables[0].points);
    CHECK(ff.pylons[0] == a.pylons[0]);
}

TEST_CASE("property: hflip then rasterize equals column reversal") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        AnnotationSet a;
        a.meta = {"img", 24, 16, "r", "l"};
        Polyline line;
        for (int p = 0; p < 3; ++p)
            // eighth-of-a-pixel grid keeps the reflection arithmetic exact
            line.points.push_back({rng.below(24 * 8) / 8.0, rng.below(16 * 8) / 8.0});
        a.cables = {line};
        // integer box bounds: half-open containment flips cleanly only when
        // no bound coincides with a pixel center
        const double x0 = static_cast<double>(rng.below(20));
        const double y0 = static_cast<double>(rng.below(12));
        a.pylons = {BBox{x0, y0, x0 + 1 + static_cast<double>(rng.below(3)),
                         y0 + 1 + static_cast<double>(rng.below(3))}};
        a.exclusions = a.pylons;

        const AnnotationSet f = hflip_annotations(a);
        auto reversed = [](const BinaryMask& m) {
            BinaryMask out(m.width(), m.height(), 0);
            for (int y = 0; y < m.height(); ++y)
                for (int x = 0; x < m.width(); ++x)
                    out(y, x) = m(y, m.width() - 1 - x);
            return out;
        };
        CHECK(rasterize_cables(f.cables, 24, 16) == reversed(rasterize_cables(a.cables, 24, 16)));
        CHECK(rasterize_pylons(f.pylons, 24, 16) == reversed(rasterize_pylons(a.pylons, 24, 16)));
        CHECK(rasterize_exclusions(f.exclusions, 24, 16) ==
              reversed(rasterize_exclusions(a.exclusions, 24, 16)));
    }
}

TEST_CASE("property: rasterization is translation-consistent in the interior") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Polyline line;
        for (int p = 0; p < 3; ++p)
            line.points.push_back({rng.uniform(8.0, 16.0), rng.uniform(8.0, 16.0)});
        const int dx = 1 + static_cast<int>(rng.below(4));
        const int dy = 1 + static_cast<int>(rng.below(4));
        Polyline shifted;
        for (const PointXY& p : line.points) shifted.points.push_back({p.x + dx, p.y + dy});

        const BinaryMask base = rasterize_cables({line}, 32, 32);
        const BinaryMask moved = rasterize_cables({shifted}, 32, 32);
        for (int y = 4; y < 24; ++y)
            for (int x = 4; x < 24; ++x)
                CHECK(base(y, x) == moved(y + dy, x + dx));
    }
}

TEST_SUITE_END();
