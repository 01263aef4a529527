#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "linedet/annotations.hpp"
#include "linedet/commands.hpp"
#include "linedet/mask_io.hpp"
#include "linedet/pipeline.hpp"
#include "linedet/rng.hpp"
#include "linedet/synth.hpp"
#include "linedet/targets.hpp"

using namespace linedet;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("linedet_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& rel = "") const { return (path / rel).string(); }
};

json load_json(const fs::path& p) { return json::parse(read_text_file(p)); }

}  // namespace

TEST_SUITE_BEGIN("io_cli");

TEST_CASE("distance mask files round-trip through 16-bit quantization") {
    TempDir dir("dm");
    Rng rng(50);
    DistanceMask dm;
    dm.d_max = 128;
    dm.values = Grid<double>(19, 11);
    for (auto& v : dm.values) v = rng.unit();

    const fs::path p = dir.path / "mask.png";
    write_distance_mask(p, dm, 16);
    const DistanceMask back = read_distance_mask(p);
    CHECK(back.d_max == 128);
    REQUIRE(back.values.same_shape(dm.values));
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 19; ++x)
            CHECK(std::abs(back.values(y, x) - dm.values(y, x)) <= 0.5 / 65535.0 + 1e-12);
    CHECK(read_mask_meta(p).factor == 16);

    // writes are deterministic byte-for-byte
    const fs::path q = dir.path / "mask2.png";
    write_distance_mask(q, dm, 16);
    CHECK(read_text_file(p) == read_text_file(q));
}

TEST_CASE("binary mask files round-trip exactly") {
    TempDir dir("bm");
    Rng rng(51);
    BinaryMask mask(23, 9, 0);
    for (auto& v : mask) v = rng.chance(0.4) ? 1 : 0;
    const fs::path p = dir.path / "seg.png";
    write_binary_mask(p, mask);
    CHECK(read_binary_mask(p) == mask);
}

TEST_CASE("flow files round-trip at float precision") {
    TempDir dir("flow");
    Rng rng(52);
    FlowField flow{Grid<double>(7, 5), Grid<double>(7, 5)};
    for (auto& v : flow.dx) v = rng.uniform(-8.0, 8.0);
    for (auto& v : flow.dy) v = rng.uniform(-8.0, 8.0);
    const fs::path p = dir.path / "field.flow";
    write_flow_field(p, flow);
    const FlowField back = read_flow_field(p);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) {
            CHECK(back.dx(y, x) == doctest::Approx(flow.dx(y, x)).epsilon(1e-6));
            CHECK(back.dy(y, x) == doctest::Approx(flow.dy(y, x)).epsilon(1e-6));
        }
}

TEST_CASE("gradient files round-trip bit-exactly") {
    TempDir dir("grad");
    Rng rng(53);
    Grid<double> grad(6, 4);
    for (auto& v : grad) v = rng.uniform(-100.0, 100.0);
    const fs::path p = dir.path / "g.f64";
    write_gradient(p, grad);
    CHECK(read_gradient(p) == grad);
}

TEST_CASE("synth command: deterministic, valid output") {
    TempDir dir("synth");
    REQUIRE(cli::run({"--seed", "3", "--output", dir.str(), "synth", "--images", "4"}) == 0);
    const Dataset ds = parse_annotations(read_text_file(dir.path / "annotations.json"));
    CHECK(ds.items.size() == 4);

    TempDir dir2("synth2");
    REQUIRE(cli::run({"--seed", "3", "--output", dir2.str(), "synth", "--images", "4"}) == 0);
    CHECK(read_text_file(dir.path / "annotations.json") ==
          read_text_file(dir2.path / "annotations.json"));
}

TEST_CASE("synth: generated geometry is valid across many seeds") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SynthConfig cfg;
        cfg.images = 2;
        cfg.width = 128;
        cfg.height = 96;
        cfg.seed = seed;
        const Dataset ds = synth_dataset(cfg);  // validates internally
        CHECK(ds.items.size() == 2);
        for (const AnnotationSet& a : ds.items) {
            CHECK(!a.cables.empty());
            CHECK(!a.pylons.empty());
        }
    }
    SynthConfig empty;
    empty.images = 0;
    CHECK(synth_dataset(empty).items.empty());
}

TEST_CASE("gen-targets + eval: self-prediction scores all ones") {
    TempDir dir("selfeval");
    REQUIRE(cli::run({"--seed", "11", "--output", dir.str(), "synth", "--images", "3",
                      "--width", "256", "--height", "192"}) == 0);
    const std::string ann = dir.str("annotations.json");
    const std::string targets = dir.str("targets");
    REQUIRE(cli::run({"--output", targets, "gen-targets", "--annotations", ann, "--factor",
                      "16"}) == 0);

    const json manifest = load_json(fs::path(targets) / "targets_manifest.json");
    CHECK(manifest["images"].size() == 3);
    CHECK(fs::exists(fs::path(targets) / manifest["images"][0]["cables"].get<std::string>()));

    const std::string report_dir = dir.str("report");
    REQUIRE(cli::run({"--output", report_dir, "eval", "--annotations", ann, "--gt-dir",
                      targets, "--pred-dir", targets}) == 0);
    const json report = load_json(fs::path(report_dir) / "report.json");
    for (const char* cls : {"cables", "pylons"}) {
        CHECK(report["aggregate"][cls]["quality"]["mean"].get<double>() == 1.0);
        CHECK(report["aggregate"][cls]["f1"]["mean"].get<double>() == 1.0);
    }
    CHECK(fs::exists(fs::path(report_dir) / "report.csv"));
}

TEST_CASE("gen-targets: second run is bit-identical") {
    TempDir dir("idem");
    REQUIRE(cli::run({"--seed", "4", "--output", dir.str(), "synth", "--images", "2",
                      "--width", "128", "--height", "96"}) == 0);
    const std::string ann = dir.str("annotations.json");
    const std::string t1 = dir.str("t1");
    const std::string t2 = dir.str("t2");
    REQUIRE(cli::run({"--output", t1, "gen-targets", "--annotations", ann}) == 0);
    REQUIRE(cli::run({"--output", t2, "gen-targets", "--annotations", ann}) == 0);
    for (const auto& entry : fs::directory_iterator(t1)) {
        const fs::path other = fs::path(t2) / entry.path().filename();
        REQUIRE(fs::exists(other));
        CHECK(read_text_file(entry.path()) == read_text_file(other));
    }
}

TEST_CASE("eval: missing predictions follow the configured policy") {
    TempDir dir("missing");
    REQUIRE(cli::run({"--seed", "12", "--output", dir.str(), "synth", "--images", "2",
                      "--width", "128", "--height", "96"}) == 0);
    const std::string ann = dir.str("annotations.json");
    const std::string targets = dir.str("targets");
    REQUIRE(cli::run({"--output", targets, "gen-targets", "--annotations", ann}) == 0);

    const std::string empty_preds = dir.str("preds");
    fs::create_directories(empty_preds);
    const std::string report_dir = dir.str("report");
    REQUIRE(cli::run({"--output", report_dir, "eval", "--annotations", ann, "--gt-dir",
                      targets, "--pred-dir", empty_preds}) == 0);
    const json report = load_json(fs::path(report_dir) / "report.json");
    CHECK(report["missing_predictions"].size() == 2);
    CHECK(report["aggregate"]["cables"]["quality"]["mean"].get<double>() == 0.0);

    CHECK(cli::run({"--output", report_dir, "eval", "--annotations", ann, "--gt-dir", targets,
                    "--pred-dir", empty_preds, "--missing", "fail"}) == 2);
}

TEST_CASE("fold-split and sample commands write their records") {
    TempDir dir("foldsample");
    REQUIRE(cli::run({"--seed", "13", "--output", dir.str(), "synth", "--images", "8",
                      "--width", "160", "--height", "128"}) == 0);
    const std::string ann = dir.str("annotations.json");
    REQUIRE(cli::run({"--seed", "13", "--output", dir.str(), "fold-split", "--annotations",
                      ann, "--k", "2"}) == 0);
    const json folds = load_json(dir.path / "folds.json");
    CHECK(folds.size() == 8);
    for (const auto& [id, fold] : folds.items()) {
        CHECK(fold.get<int>() >= 0);
        CHECK(fold.get<int>() < 2);
    }

    REQUIRE(cli::run({"--seed", "13", "--output", dir.str(), "sample", "--annotations", ann,
                      "--patch-size", "64", "--count", "3"}) == 0);
    const json patches = load_json(dir.path / "patches.json");
    CHECK(patches.size() == 8 * 3);
    for (const json& p : patches) {
        CHECK(p["x0"].get<int>() >= 0);
        CHECK(p["x0"].get<int>() + 64 <= 160);
    }
}

TEST_CASE("loss-check: perfect prediction and the malis switch") {
    TempDir dir("loss");
    Rng rng(54);
    DistanceMask gt_c, gt_p;
    gt_c.values = Grid<double>(16, 16);
    gt_p.values = Grid<double>(16, 16);
    for (auto& v : gt_c.values) v = rng.chance(0.2) ? 0.0 : rng.unit();
    for (auto& v : gt_p.values) v = rng.chance(0.1) ? 0.0 : rng.unit();
    write_distance_mask(dir.path / "gt_c.png", gt_c, 16);
    write_distance_mask(dir.path / "gt_p.png", gt_p, 16);

    const std::string out = dir.str("out");
    REQUIRE(cli::run({"--output", out, "loss-check", "--pred-cables", dir.str("gt_c.png"),
                      "--pred-pylons", dir.str("gt_p.png"), "--gt-cables", dir.str("gt_c.png"),
                      "--gt-pylons", dir.str("gt_p.png"), "--no-malis"}) == 0);
    const json perfect = load_json(fs::path(out) / "loss_check.json");
    CHECK(perfect["scalar"].get<double>() == 0.0);
    CHECK(fs::exists(perfect["gradients"]["cables"].get<std::string>()));

    // lambda 0 and the malis switch produce identical scalars
    DistanceMask pred = gt_c;
    pred.values(3, 3) = std::min(1.0, pred.values(3, 3) + 0.25);
    write_distance_mask(dir.path / "pred.png", pred, 16);
    const std::string out_l0 = dir.str("l0");
    const std::string out_off = dir.str("off");
    REQUIRE(cli::run({"--output", out_l0, "loss-check", "--pred-cables", dir.str("pred.png"),
                      "--pred-pylons", dir.str("gt_p.png"), "--gt-cables", dir.str("gt_c.png"),
                      "--gt-pylons", dir.str("gt_p.png"), "--lambda", "0"}) == 0);
    REQUIRE(cli::run({"--output", out_off, "loss-check", "--pred-cables", dir.str("pred.png"),
                      "--pred-pylons", dir.str("gt_p.png"), "--gt-cables", dir.str("gt_c.png"),
                      "--gt-pylons", dir.str("gt_p.png"), "--no-malis"}) == 0);
    const double a = load_json(fs::path(out_l0) / "loss_check.json")["scalar"].get<double>();
    const double b = load_json(fs::path(out_off) / "loss_check.json")["scalar"].get<double>();
    CHECK(a == b);
}

TEST_CASE("loss-check: finite-difference mode reports a small max error") {
    TempDir dir("fd");
    Rng rng(55);
    DistanceMask gt_c, gt_p, pred_c, pred_p;
    for (DistanceMask* dm : {&gt_c, &gt_p, &pred_c, &pred_p}) dm->values = Grid<double>(8, 8);
    for (auto& v : gt_c.values) v = rng.chance(0.2) ? 0.0 : rng.unit();
    for (auto& v : gt_p.values) v = rng.chance(0.1) ? 0.0 : rng.unit();
    for (auto& v : pred_c.values) v = rng.below(257) / 256.0;
    for (auto& v : pred_p.values) v = rng.below(257) / 256.0;
    write_distance_mask(dir.path / "gt_c.png", gt_c, 16);
    write_distance_mask(dir.path / "gt_p.png", gt_p, 16);
    write_distance_mask(dir.path / "pred_c.png", pred_c, 16);
    write_distance_mask(dir.path / "pred_p.png", pred_p, 16);

    const std::string out = dir.str("out");
    REQUIRE(cli::run({"--output", out, "loss-check", "--pred-cables", dir.str("pred_c.png"),
                      "--pred-pylons", dir.str("pred_p.png"), "--gt-cables", dir.str("gt_c.png"),
                      "--gt-pylons", dir.str("gt_p.png"), "--malis-window", "8",
                      "--check-grad"}) == 0);
    const json record = load_json(fs::path(out) / "loss_check.json");
    CHECK(record["grad_check"]["max_rel_error_cables"].get<double>() < 1e-3);
    CHECK(record["grad_check"]["max_rel_error_pylons"].get<double>() < 1e-3);
    CHECK(record["grad_check"]["checked_cells"].get<int>() > 0);
}

TEST_CASE("pipeline-sim: files predictor reproduces its input map") {
    TempDir dir("sim");
    Rng rng(56);
    DistanceMask map;
    map.d_max = 128;
    map.values = Grid<double>(8, 4);
    for (auto& v : map.values) v = rng.below(65536) / 65535.0;  // representable exactly
    write_distance_mask(dir.path / "f0_cables.png", map, 32);
    write_distance_mask(dir.path / "f0_pylons.png", map, 32);

    const json manifest{{"width", 256},
                        {"height", 128},
                        {"frames", json::array({json{{"cables", "f0_cables.png"},
                                                     {"pylons", "f0_pylons.png"}}})}};
    write_text_file(dir.path / "manifest.json", manifest.dump());

    const std::string out = dir.str("out");
    REQUIRE(cli::run({"--output", out, "pipeline-sim", "--manifest", dir.str("manifest.json"),
                      "--patch", "128", "--out-factor", "32"}) == 0);
    const DistanceMask fused = read_distance_mask(fs::path(out) / "frame0000_fused_cables.png");
    CHECK(fused.values == map.values);
    const json summary = load_json(fs::path(out) / "run_summary.json");
    CHECK(summary["coarse_shape"]["width"].get<int>() == 8);
    CHECK(summary["coarse_shape"]["height"].get<int>() == 4);
}

TEST_CASE("report command re-emits the CSV") {
    TempDir dir("report");
    REQUIRE(cli::run({"--seed", "14", "--output", dir.str(), "synth", "--images", "2",
                      "--width", "128", "--height", "96"}) == 0);
    const std::string ann = dir.str("annotations.json");
    const std::string targets = dir.str("targets");
    REQUIRE(cli::run({"--output", targets, "gen-targets", "--annotations", ann}) == 0);
    const std::string report_dir = dir.str("rep");
    REQUIRE(cli::run({"--output", report_dir, "eval", "--annotations", ann, "--gt-dir",
                      targets, "--pred-dir", targets}) == 0);
    const std::string csv_dir = dir.str("csv");
    REQUIRE(cli::run({"--output", csv_dir, "report", "--input",
                      (fs::path(report_dir) / "report.json").string()}) == 0);
    CHECK(read_text_file(fs::path(csv_dir) / "report.csv") ==
          read_text_file(fs::path(report_dir) / "report.csv"));
}

TEST_CASE("config file values are read and overridden by flags") {
    TempDir dir("config");
    write_text_file(dir.path / "run.conf", "seed=21\noutput=" + dir.str("from_config") +
                                               "\n[synth]\nimages=2\nwidth=128\nheight=96\n");
    REQUIRE(cli::run({"--config", dir.str("run.conf"), "synth"}) == 0);
    CHECK(fs::exists(dir.path / "from_config" / "annotations.json"));

    REQUIRE(cli::run({"--config", dir.str("run.conf"), "--output", dir.str("flag_wins"),
                      "synth"}) == 0);
    CHECK(fs::exists(dir.path / "flag_wins" / "annotations.json"));
}

TEST_CASE("exit codes: validation 1, io 2") {
    TempDir dir("codes");
    CHECK(cli::run({"--output", dir.str(), "gen-targets", "--annotations",
                    dir.str("nope.json")}) == 2);
    write_text_file(dir.path / "bad.json", "{\"images\": [{\"image_id\": 3}]}");
    CHECK(cli::run({"--output", dir.str(), "gen-targets", "--annotations",
                    dir.str("bad.json")}) == 1);
    CHECK(cli::run({"definitely-not-a-command"}) == 1);
}

TEST_SUITE_END();
