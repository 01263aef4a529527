#include "linedet/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "linedet/annotations.hpp"
#include "linedet/losses.hpp"
#include "linedet/mask_io.hpp"
#include "linedet/metrics.hpp"
#include "linedet/parallel.hpp"
#include "linedet/pipeline.hpp"
#include "linedet/rng.hpp"
#include "linedet/sampler.hpp"
#include "linedet/synth.hpp"
#include "linedet/targets.hpp"

namespace linedet::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalOptions {
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string output = ".";
};

std::string sanitize_id(const std::string& id) {
    std::string out = id;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
    return out;
}

fs::path mask_path(const fs::path& dir, const std::string& image_id, const char* cls) {
    return dir / (sanitize_id(image_id) + "_" + cls + ".png");
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create directory '" + dir.string() + "'");
}

Dataset load_annotations(const fs::path& path) {
    return parse_annotations(read_text_file(path));
}

json report_to_json(const MetricReport& r) {
    return json{{"precision", r.precision},
                {"recall", r.recall},
                {"f1", r.f1},
                {"correctness", r.correctness},
                {"completeness", r.completeness},
                {"quality", r.quality},
                {"exact", {{"tp", r.exact.tp}, {"fp", r.exact.fp}, {"fn", r.exact.fn}}},
                {"relaxed", {{"tp", r.relaxed.tp}, {"fp", r.relaxed.fp}, {"fn", r.relaxed.fn}}}};
}

json stats_to_json(const AggregateReport& a) {
    auto stat = [](const MetricStats& s) {
        return json{{"mean", s.mean}, {"stddev", s.stddev}};
    };
    return json{{"precision", stat(a.precision)},     {"recall", stat(a.recall)},
                {"f1", stat(a.f1)},                   {"correctness", stat(a.correctness)},
                {"completeness", stat(a.completeness)}, {"quality", stat(a.quality)}};
}

std::string csv_row(const std::string& fold, const std::string& cls, double p, double r,
                    double f1, double corr, double compl_, double q) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", fold.c_str(),
                  cls.c_str(), p, r, f1, corr, compl_, q);
    return buf;
}

// ---------------------------------------------------------------- synth ----

struct SynthOptions {
    SynthConfig cfg;
};

void cmd_synth(const GlobalOptions& g, const SynthOptions& o) {
    SynthConfig cfg = o.cfg;
    cfg.seed = g.seed;
    const Dataset ds = synth_dataset(cfg);
    ensure_dir(g.output);
    write_text_file(fs::path(g.output) / "annotations.json", annotations_to_json(ds));
    std::cout << "synth: wrote " << ds.items.size() << " image(s) to " << g.output
              << "/annotations.json\n";
}

// ---------------------------------------------------------- gen-targets ----

struct GenTargetsOptions {
    std::string annotations;
    int d_max = 128;
    int factor = 16;
};

void cmd_gen_targets(const GlobalOptions& g, const GenTargetsOptions& o) {
    const Dataset ds = load_annotations(o.annotations);
    ensure_dir(g.output);
    const fs::path out_dir(g.output);

    json images = json::array();
    std::mutex manifest_mutex;
    std::vector<json> entries(ds.items.size());
    parallel_for(ds.items.size(), g.jobs, [&](std::size_t i) {
        const AnnotationSet& a = ds.items[i];
        const GtTargets targets = gt_targets(a, o.d_max, o.factor);
        const fs::path cable_path = mask_path(out_dir, a.meta.image_id, "cables");
        const fs::path pylon_path = mask_path(out_dir, a.meta.image_id, "pylons");
        write_distance_mask(cable_path, targets.cables, o.factor);
        write_distance_mask(pylon_path, targets.pylons, o.factor);
        entries[i] = json{{"image_id", a.meta.image_id},
                          {"width", a.meta.width},
                          {"height", a.meta.height},
                          {"cables", cable_path.filename().string()},
                          {"pylons", pylon_path.filename().string()}};
    });
    for (json& e : entries) images.push_back(std::move(e));

    const json manifest{{"d_max", o.d_max}, {"factor", o.factor}, {"images", std::move(images)}};
    write_text_file(out_dir / "targets_manifest.json", manifest.dump(2));
    std::cout << "gen-targets: wrote " << 2 * ds.items.size() << " mask file(s) to "
              << g.output << "\n";
}

// ------------------------------------------------------------ fold-split ----

struct FoldSplitOptions {
    std::string annotations;
    int k = 5;
    std::string output_file = "folds.json";
};

void cmd_fold_split(const GlobalOptions& g, const FoldSplitOptions& o) {
    const Dataset ds = load_annotations(o.annotations);
    const FoldAssignment folds = fold_split(ds, o.k, g.seed);
    json out = json::object();
    for (const auto& [id, fold] : folds.fold_of_image) out[id] = fold;
    ensure_dir(g.output);
    write_text_file(fs::path(g.output) / o.output_file, out.dump(2));
    std::cout << "fold-split: assigned " << folds.fold_of_image.size() << " image(s) to "
              << o.k << " folds\n";
}

// ---------------------------------------------------------------- sample ----

struct SampleOptions {
    std::string annotations;
    int patch_size = 1024;
    int max_center_distance = 128;
    int count = 1;
    std::vector<std::string> classes{"cables", "pylons"};
    std::string output_file = "patches.json";
};

void cmd_sample(const GlobalOptions& g, const SampleOptions& o) {
    const Dataset ds = load_annotations(o.annotations);
    SampleSpec spec;
    spec.patch_size = o.patch_size;
    spec.max_center_distance = o.max_center_distance;
    spec.count = o.count;
    spec.target_cables = std::find(o.classes.begin(), o.classes.end(), "cables") != o.classes.end();
    spec.target_pylons = std::find(o.classes.begin(), o.classes.end(), "pylons") != o.classes.end();
    if (!spec.target_cables && !spec.target_pylons)
        throw validation_error("sample: --classes must include cables and/or pylons");

    json out = json::array();
    for (const AnnotationSet& a : ds.items) {
        SampleSpec per_image = spec;
        per_image.seed = derive_seed(g.seed, std::hash<std::string>{}(a.meta.image_id));
        for (const PatchRect& p : sample_patches(a, per_image))
            out.push_back(json{{"image_id", a.meta.image_id},
                               {"x0", p.x0},
                               {"y0", p.y0},
                               {"size", p.size}});
    }
    ensure_dir(g.output);
    write_text_file(fs::path(g.output) / o.output_file, out.dump(2));
    std::cout << "sample: wrote " << out.size() << " patch(es)\n";
}

// ------------------------------------------------------------ loss-check ----

struct LossCheckOptions {
    std::string pred_cables, pred_pylons, gt_cables, gt_pylons;
    LossConfig cfg;
    bool check_grad = false;
};

double max_grad_error(const DistanceMask& pred_c, const DistanceMask& pred_p,
                      const DistanceMask& gt_c, const DistanceMask& gt_p,
                      const LossConfig& cfg, bool perturb_cables, const Grid<double>& analytic,
                      std::int64_t& checked, std::int64_t& skipped) {
    constexpr double h = 1e-4;
    constexpr double tie_eps = 1e-6;
    const int win = cfg.malis_window;
    double worst = 0.0;
    DistanceMask pc = pred_c, pp = pred_p;
    Grid<double>& target = perturb_cables ? pc.values : pp.values;
    for (int y = 0; y < target.height(); ++y) {
        for (int x = 0; x < target.width(); ++x) {
            if (perturb_cables && cfg.use_malis) {
                // skip cells whose value ties another in the same window: the
                // bottleneck assignment is ambiguous there
                const int wy0 = y / win * win, wx0 = x / win * win;
                bool tied = false;
                for (int wy = wy0; wy < std::min(target.height(), wy0 + win) && !tied; ++wy)
                    for (int wx = wx0; wx < std::min(target.width(), wx0 + win); ++wx) {
                        if (wy == y && wx == x) continue;
                        if (std::abs(target(wy, wx) - target(y, x)) < tie_eps) {
                            tied = true;
                            break;
                        }
                    }
                if (tied) {
                    ++skipped;
                    continue;
                }
            }
            const double saved = target(y, x);
            target(y, x) = saved + h;
            const double up = composite_loss(pc, pp, gt_c, gt_p, cfg).scalar;
            target(y, x) = saved - h;
            const double down = composite_loss(pc, pp, gt_c, gt_p, cfg).scalar;
            target(y, x) = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = analytic(y, x);
            const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
            worst = std::max(worst, err);
            ++checked;
        }
    }
    return worst;
}

void cmd_loss_check(const GlobalOptions& g, const LossCheckOptions& o) {
    const DistanceMask pred_c = read_distance_mask(o.pred_cables);
    const DistanceMask pred_p = read_distance_mask(o.pred_pylons);
    const DistanceMask gt_c = read_distance_mask(o.gt_cables);
    const DistanceMask gt_p = read_distance_mask(o.gt_pylons);

    LossConfig cfg = o.cfg;
    cfg.d_max = gt_c.d_max;
    const LossValue loss = composite_loss(pred_c, pred_p, gt_c, gt_p, cfg);

    ensure_dir(g.output);
    const fs::path out_dir(g.output);
    const fs::path grad_c = out_dir / "grad_cables.f64";
    const fs::path grad_p = out_dir / "grad_pylons.f64";
    write_gradient(grad_c, loss.grad_cables);
    write_gradient(grad_p, loss.grad_pylons);

    json record{{"scalar", loss.scalar},
                {"terms",
                 {{"ldat_cables", loss.ldat_cables},
                  {"ldat_pylons", loss.ldat_pylons},
                  {"malis", loss.malis},
                  {"lambda", cfg.lambda},
                  {"use_lif_weights", cfg.use_lif_weights},
                  {"use_malis", cfg.use_malis}}},
                {"gradients", {{"cables", grad_c.string()}, {"pylons", grad_p.string()}}}};

    if (o.check_grad) {
        std::int64_t checked = 0, skipped = 0;
        const double err_c = max_grad_error(pred_c, pred_p, gt_c, gt_p, cfg, true,
                                            loss.grad_cables, checked, skipped);
        const double err_p = max_grad_error(pred_c, pred_p, gt_c, gt_p, cfg, false,
                                            loss.grad_pylons, checked, skipped);
        record["grad_check"] = json{{"max_rel_error_cables", err_c},
                                    {"max_rel_error_pylons", err_p},
                                    {"checked_cells", checked},
                                    {"skipped_ties", skipped}};
    }

    const std::string text = record.dump(2);
    write_text_file(out_dir / "loss_check.json", text);
    std::cout << text << "\n";
}

// ------------------------------------------------------------------ eval ----

struct EvalOptions {
    std::string annotations;
    std::string gt_dir;
    std::string pred_dir;
    std::string folds_file;
    double cable_threshold = 32.0;
    double pylon_threshold = 32.0;
    std::string pooling = "micro";
    std::string missing = "empty";
};

struct ImageEval {
    std::string image_id;
    int fold = 0;
    bool missing_pred = false;
    MetricReport cables;
    MetricReport pylons;
};

void cmd_eval(const GlobalOptions& g, const EvalOptions& o) {
    const Dataset ds = load_annotations(o.annotations);
    const fs::path gt_dir(o.gt_dir);
    const fs::path pred_dir(o.pred_dir);

    std::map<std::string, int> fold_of_image;
    int fold_count = 1;
    if (!o.folds_file.empty()) {
        json folds;
        try {
            folds = json::parse(read_text_file(o.folds_file));
        } catch (const json::parse_error& e) {
            throw parse_error(std::string("folds file: ") + e.what());
        }
        for (const auto& [id, fold] : folds.items()) {
            fold_of_image[id] = fold.get<int>();
            fold_count = std::max(fold_count, fold.get<int>() + 1);
        }
    }

    std::vector<ImageEval> evals(ds.items.size());
    parallel_for(ds.items.size(), g.jobs, [&](std::size_t i) {
        const AnnotationSet& a = ds.items[i];
        ImageEval e;
        e.image_id = a.meta.image_id;
        if (!o.folds_file.empty()) {
            auto it = fold_of_image.find(a.meta.image_id);
            if (it == fold_of_image.end())
                throw validation_error("eval: image '" + a.meta.image_id +
                                       "' missing from the fold assignment");
            e.fold = it->second;
        }

        const fs::path gt_c_path = mask_path(gt_dir, a.meta.image_id, "cables");
        const fs::path gt_p_path = mask_path(gt_dir, a.meta.image_id, "pylons");
        const DistanceMask gt_c = read_distance_mask(gt_c_path);
        const DistanceMask gt_p = read_distance_mask(gt_p_path);
        const int factor = read_mask_meta(gt_c_path).factor;

        auto load_pred = [&](const char* cls, const DistanceMask& gt) {
            const fs::path p = mask_path(pred_dir, a.meta.image_id, cls);
            if (fs::exists(p)) return read_distance_mask(p);
            if (o.missing == "fail")
                throw io_error("eval: missing prediction '" + p.string() + "'");
            e.missing_pred = true;
            DistanceMask empty;  // all 1.0 = no detections anywhere
            empty.d_max = gt.d_max;
            empty.values = Grid<double>(gt.width(), gt.height(), 1.0);
            return empty;
        };
        const DistanceMask pred_c = load_pred("cables", gt_c);
        const DistanceMask pred_p = load_pred("pylons", gt_p);

        std::optional<BinaryMask> exclusion_mask;
        if (!a.exclusions.empty()) {
            const BinaryMask full =
                rasterize_exclusions(a.exclusions, a.meta.width, a.meta.height);
            exclusion_mask = any_overlap_downsample(full, factor);
        }

        e.cables = evaluate_image(pred_c, gt_c, o.cable_threshold, nullptr);
        e.pylons = evaluate_image(pred_p, gt_p, o.pylon_threshold,
                                  exclusion_mask ? &*exclusion_mask : nullptr);
        evals[i] = std::move(e);
    });

    const bool skip_missing = o.missing == "skip";
    std::vector<std::vector<MetricReport>> cable_folds(fold_count), pylon_folds(fold_count);
    json per_image = json::array();
    json missing_ids = json::array();
    for (const ImageEval& e : evals) {
        if (e.missing_pred) missing_ids.push_back(e.image_id);
        if (e.missing_pred && skip_missing) continue;
        cable_folds[e.fold].push_back(e.cables);
        pylon_folds[e.fold].push_back(e.pylons);
        per_image.push_back(json{{"image_id", e.image_id},
                                 {"fold", e.fold},
                                 {"missing_prediction", e.missing_pred},
                                 {"cables", report_to_json(e.cables)},
                                 {"pylons", report_to_json(e.pylons)}});
    }
    for (int f = 0; f < fold_count; ++f)
        if (cable_folds[f].empty())
            throw validation_error("eval: fold " + std::to_string(f) + " has no images");

    const Pooling pooling = o.pooling == "macro" ? Pooling::macro : Pooling::micro;
    const AggregateReport cables = aggregate(cable_folds, pooling);
    const AggregateReport pylons = aggregate(pylon_folds, pooling);

    json per_fold = json::array();
    for (int f = 0; f < fold_count; ++f)
        per_fold.push_back(json{{"fold", f},
                                {"cables", report_to_json(cables.per_fold[f])},
                                {"pylons", report_to_json(pylons.per_fold[f])}});

    const json report{{"pooling", o.pooling},
                      {"thresholds", {{"cables", o.cable_threshold}, {"pylons", o.pylon_threshold}}},
                      {"missing_predictions", std::move(missing_ids)},
                      {"per_image", std::move(per_image)},
                      {"per_fold", std::move(per_fold)},
                      {"aggregate", {{"cables", stats_to_json(cables)}, {"pylons", stats_to_json(pylons)}}}};

    ensure_dir(g.output);
    write_text_file(fs::path(g.output) / "report.json", report.dump(2));

    std::string csv = "fold,object_class,precision,recall,f1,correctness,completeness,quality\n";
    for (int f = 0; f < fold_count; ++f) {
        const MetricReport& c = cables.per_fold[f];
        const MetricReport& p = pylons.per_fold[f];
        csv += csv_row(std::to_string(f), "cables", c.precision, c.recall, c.f1, c.correctness,
                       c.completeness, c.quality);
        csv += csv_row(std::to_string(f), "pylons", p.precision, p.recall, p.f1, p.correctness,
                       p.completeness, p.quality);
    }
    auto stat_rows = [&](const char* cls, const AggregateReport& a) {
        csv += csv_row("mean", cls, a.precision.mean, a.recall.mean, a.f1.mean,
                       a.correctness.mean, a.completeness.mean, a.quality.mean);
        csv += csv_row("stddev", cls, a.precision.stddev, a.recall.stddev, a.f1.stddev,
                       a.correctness.stddev, a.completeness.stddev, a.quality.stddev);
    };
    stat_rows("cables", cables);
    stat_rows("pylons", pylons);
    write_text_file(fs::path(g.output) / "report.csv", csv);

    std::printf("eval: cables quality %.4f +- %.4f, pylons quality %.4f +- %.4f\n",
                cables.quality.mean, cables.quality.stddev, pylons.quality.mean,
                pylons.quality.stddev);
}

// ---------------------------------------------------------- pipeline-sim ----

struct PipelineSimOptions {
    std::string manifest;
    PipelineConfig cfg;
    std::string flow = "zero";        // zero | builtin | files
    std::string predictor = "files";  // files | degraded
    double sigma = 0.0;
    double dropout = 0.0;
};

void cmd_pipeline_sim(const GlobalOptions& g, const PipelineSimOptions& o) {
    json manifest;
    try {
        manifest = json::parse(read_text_file(o.manifest));
    } catch (const json::parse_error& e) {
        throw parse_error(std::string("manifest: ") + e.what());
    }
    if (!manifest.contains("width") || !manifest.contains("height") ||
        !manifest.contains("frames") || !manifest["frames"].is_array())
        throw parse_error("manifest: needs width, height and a frames array");

    const int width = manifest["width"].get<int>();
    const int height = manifest["height"].get<int>();
    const fs::path base = fs::path(o.manifest).parent_path();
    const auto& jframes = manifest["frames"];
    const int frame_count = static_cast<int>(jframes.size());

    std::vector<FrameMaps> maps;
    FlowInputs flows;
    maps.reserve(frame_count);
    for (int t = 0; t < frame_count; ++t) {
        const json& jf = jframes[t];
        if (!jf.contains("cables") || !jf.contains("pylons"))
            throw parse_error("manifest: frame " + std::to_string(t) +
                              " needs cables and pylons mask paths");
        FrameMaps fm;
        fm.cables = read_distance_mask(base / jf["cables"].get<std::string>());
        fm.pylons = read_distance_mask(base / jf["pylons"].get<std::string>());
        if (o.predictor == "degraded") {
            const std::uint64_t frame_seed = derive_seed(g.seed, static_cast<std::uint64_t>(t));
            fm.cables = degraded_oracle(fm.cables, o.sigma, o.dropout, derive_seed(frame_seed, 0));
            fm.pylons = degraded_oracle(fm.pylons, o.sigma, o.dropout, derive_seed(frame_seed, 1));
        }
        maps.push_back(std::move(fm));

        if (o.flow == "files" && t + 1 < frame_count) {
            if (!jframes[t + 1].contains("flow"))
                throw parse_error("manifest: frame " + std::to_string(t + 1) +
                                  " needs a flow path under --flow files");
            flows.external.push_back(
                read_flow_field(base / jframes[t + 1]["flow"].get<std::string>()));
        }
        if (o.flow == "builtin") {
            if (!jf.contains("small"))
                throw parse_error("manifest: frame " + std::to_string(t) +
                                  " needs a small-frame path under --flow builtin");
            flows.frames.push_back(read_gray_image(base / jf["small"].get<std::string>()));
        }
    }

    CoarseMapPredictor predictor(std::move(maps), o.cfg.out_factor);
    const auto start = std::chrono::steady_clock::now();
    const std::vector<FrameResult> results =
        run_stream(width, height, frame_count, predictor, flows, o.cfg);
    const double elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();

    ensure_dir(g.output);
    const fs::path out_dir(g.output);
    json jout_frames = json::array();
    for (int t = 0; t < frame_count; ++t) {
        char name[64];
        std::snprintf(name, sizeof name, "frame%04d", t);
        const std::string stem(name);
        write_distance_mask(out_dir / (stem + "_fused_cables.png"), results[t].fused_cables,
                            o.cfg.out_factor);
        write_distance_mask(out_dir / (stem + "_fused_pylons.png"), results[t].fused_pylons,
                            o.cfg.out_factor);
        write_binary_mask(out_dir / (stem + "_seg_cables.png"), results[t].seg_cables);
        write_binary_mask(out_dir / (stem + "_seg_pylons.png"), results[t].seg_pylons);
        jout_frames.push_back(json{{"frame", t},
                                   {"fused_cables", stem + "_fused_cables.png"},
                                   {"fused_pylons", stem + "_fused_pylons.png"},
                                   {"seg_cables", stem + "_seg_cables.png"},
                                   {"seg_pylons", stem + "_seg_pylons.png"}});
    }

    const int coarse_w = frame_count > 0 ? results[0].fused_cables.width() : 0;
    const int coarse_h = frame_count > 0 ? results[0].fused_cables.height() : 0;
    const json summary{
        {"frames", std::move(jout_frames)},
        {"elapsed_ms", elapsed_ms},
        {"coarse_shape", {{"width", coarse_w}, {"height", coarse_h}}},
        {"frame_shape", {{"width", width}, {"height", height}}},
        {"config",
         {{"patch", o.cfg.patch},
          {"batch", o.cfg.batch},
          {"out_factor", o.cfg.out_factor},
          {"fuse_weight", o.cfg.fuse_weight},
          {"threshold", o.cfg.threshold_px},
          {"flow", o.flow},
          {"predictor", o.predictor},
          {"sigma", o.sigma},
          {"dropout", o.dropout},
          {"seed", g.seed}}}};
    write_text_file(out_dir / "run_summary.json", summary.dump(2));
    std::cout << "pipeline-sim: processed " << frame_count << " frame(s), coarse output "
              << coarse_w << "x" << coarse_h << "\n";
}

// ---------------------------------------------------------------- report ----

struct ReportOptions {
    std::string input;
    std::string output_file = "report.csv";
};

void cmd_report(const GlobalOptions& g, const ReportOptions& o) {
    json report;
    try {
        report = json::parse(read_text_file(o.input));
    } catch (const json::parse_error& e) {
        throw parse_error(std::string("report: ") + e.what());
    }
    if (!report.contains("per_fold") || !report.contains("aggregate"))
        throw parse_error("report: input is not an eval report");

    std::string csv = "fold,object_class,precision,recall,f1,correctness,completeness,quality\n";
    auto add = [&](const std::string& fold, const char* cls, const json& r) {
        csv += csv_row(fold, cls, r["precision"].get<double>(), r["recall"].get<double>(),
                       r["f1"].get<double>(), r["correctness"].get<double>(),
                       r["completeness"].get<double>(), r["quality"].get<double>());
    };
    for (const json& f : report["per_fold"]) {
        const std::string fold = std::to_string(f["fold"].get<int>());
        add(fold, "cables", f["cables"]);
        add(fold, "pylons", f["pylons"]);
    }
    for (const char* cls : {"cables", "pylons"}) {
        const json& agg = report["aggregate"][cls];
        auto pick = [&](const char* stat) {
            json r;
            for (const char* m :
                 {"precision", "recall", "f1", "correctness", "completeness", "quality"})
                r[m] = agg[m][stat].get<double>();
            return r;
        };
        add("mean", cls, pick("mean"));
        add("stddev", cls, pick("stddev"));
    }
    ensure_dir(g.output);
    write_text_file(fs::path(g.output) / o.output_file, csv);
    std::cout << csv;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Cable and pylon detection toolkit: distance-mask targets, "
                 "connectivity-aware losses, relaxed metrics, patch sampling and an "
                 "onboard inference simulator"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value config file");

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Global random seed")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads for per-image stages")
        ->capture_default_str();
    app.add_option("--output", g.output, "Output directory")->capture_default_str();

    SynthOptions synth_opts;
    CLI::App* synth = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
    synth->add_option("--images", synth_opts.cfg.images, "Number of images")
        ->capture_default_str();
    synth->add_option("--width", synth_opts.cfg.width, "Image width")->capture_default_str();
    synth->add_option("--height", synth_opts.cfg.height, "Image height")->capture_default_str();
    synth->add_option("--max-cables", synth_opts.cfg.max_cables, "Max cables per image")
        ->capture_default_str();
    synth->add_option("--max-pylons", synth_opts.cfg.max_pylons, "Max pylons per image")
        ->capture_default_str();
    synth->add_option("--max-exclusions", synth_opts.cfg.max_exclusions,
                      "Max exclusion boxes per image")
        ->capture_default_str();
    synth->callback([&] { cmd_synth(g, synth_opts); });

    GenTargetsOptions gen_opts;
    CLI::App* gen = app.add_subcommand("gen-targets",
                                       "Convert annotations into coarse distance-mask targets");
    gen->add_option("--annotations", gen_opts.annotations, "Annotation JSON document")
        ->required();
    gen->add_option("--d-max", gen_opts.d_max, "Clamp distance in pixels")->capture_default_str();
    gen->add_option("--factor", gen_opts.factor, "Min-pooling downsampling factor")
        ->capture_default_str();
    gen->callback([&] { cmd_gen_targets(g, gen_opts); });

    FoldSplitOptions fold_opts;
    CLI::App* fold = app.add_subcommand("fold-split",
                                        "Assign images to recording-level cross-validation folds");
    fold->add_option("--annotations", fold_opts.annotations, "Annotation JSON document")
        ->required();
    fold->add_option("--k", fold_opts.k, "Number of folds")->capture_default_str();
    fold->add_option("--output-file", fold_opts.output_file, "Assignment file name")
        ->capture_default_str();
    fold->callback([&] { cmd_fold_split(g, fold_opts); });

    SampleOptions sample_opts;
    CLI::App* sample = app.add_subcommand("sample", "Draw object-centered training patches");
    sample->add_option("--annotations", sample_opts.annotations, "Annotation JSON document")
        ->required();
    sample->add_option("--patch-size", sample_opts.patch_size, "Patch edge in pixels")
        ->capture_default_str();
    sample->add_option("--max-center-distance", sample_opts.max_center_distance,
                       "Max distance from patch center to the nearest object")
        ->capture_default_str();
    sample->add_option("--count", sample_opts.count, "Patches per image")->capture_default_str();
    sample->add_option("--classes", sample_opts.classes, "Target classes (cables, pylons)")
        ->capture_default_str();
    sample->add_option("--output-file", sample_opts.output_file, "Patch list file name")
        ->capture_default_str();
    sample->callback([&] { cmd_sample(g, sample_opts); });

    LossCheckOptions loss_opts;
    CLI::App* loss = app.add_subcommand("loss-check",
                                        "Compute the composite loss and its gradients");
    loss->add_option("--pred-cables", loss_opts.pred_cables, "Predicted cable mask PNG")
        ->required();
    loss->add_option("--pred-pylons", loss_opts.pred_pylons, "Predicted pylon mask PNG")
        ->required();
    loss->add_option("--gt-cables", loss_opts.gt_cables, "Ground-truth cable mask PNG")
        ->required();
    loss->add_option("--gt-pylons", loss_opts.gt_pylons, "Ground-truth pylon mask PNG")
        ->required();
    loss->add_option("--epsilon", loss_opts.cfg.epsilon, "Weight cap epsilon")
        ->capture_default_str();
    loss->add_option("--lambda", loss_opts.cfg.lambda, "Connectivity term weight")
        ->capture_default_str();
    loss->add_option("--malis-window", loss_opts.cfg.malis_window, "Connectivity window size")
        ->capture_default_str();
    loss->add_flag("!--no-lif", loss_opts.cfg.use_lif_weights,
                   "Disable inverse-frequency weights");
    loss->add_flag("!--no-malis", loss_opts.cfg.use_malis,
                   "Disable the connectivity term");
    loss->add_flag("--check-grad", loss_opts.check_grad,
                   "Verify gradients with central finite differences");
    loss->callback([&] { cmd_loss_check(g, loss_opts); });

    EvalOptions eval_opts;
    CLI::App* eval = app.add_subcommand("eval", "Score predictions against ground-truth masks");
    eval->add_option("--annotations", eval_opts.annotations, "Annotation JSON document")
        ->required();
    eval->add_option("--gt-dir", eval_opts.gt_dir, "Directory with gen-targets output")
        ->required();
    eval->add_option("--pred-dir", eval_opts.pred_dir, "Directory with prediction masks")
        ->required();
    eval->add_option("--folds", eval_opts.folds_file, "Fold assignment JSON (optional)");
    eval->add_option("--cable-threshold", eval_opts.cable_threshold,
                     "Cable binarization threshold in pixels")
        ->capture_default_str();
    eval->add_option("--pylon-threshold", eval_opts.pylon_threshold,
                     "Pylon binarization threshold in pixels")
        ->capture_default_str();
    eval->add_option("--pooling", eval_opts.pooling, "Per-fold pooling: micro or macro")
        ->check(CLI::IsMember({"micro", "macro"}))
        ->capture_default_str();
    eval->add_option("--missing", eval_opts.missing,
                     "Missing prediction policy: empty, skip or fail")
        ->check(CLI::IsMember({"empty", "skip", "fail"}))
        ->capture_default_str();
    eval->callback([&] { cmd_eval(g, eval_opts); });

    PipelineSimOptions sim_opts;
    CLI::App* sim = app.add_subcommand("pipeline-sim",
                                       "Simulate the onboard split/stitch/warp/fuse pipeline");
    sim->add_option("--manifest", sim_opts.manifest, "Frame manifest JSON")->required();
    sim->add_option("--patch", sim_opts.cfg.patch, "Split patch edge in pixels")
        ->capture_default_str();
    sim->add_option("--batch", sim_opts.cfg.batch, "Patches per predictor call")
        ->capture_default_str();
    sim->add_option("--out-factor", sim_opts.cfg.out_factor, "Coarse output stride")
        ->capture_default_str();
    sim->add_option("--fuse-weight", sim_opts.cfg.fuse_weight,
                    "Weight of the warped previous prediction")
        ->capture_default_str();
    sim->add_option("--threshold", sim_opts.cfg.threshold_px,
                    "Segmentation threshold in pixels")
        ->capture_default_str();
    sim->add_option("--flow-block", sim_opts.cfg.flow_block, "Flow estimator block size")
        ->capture_default_str();
    sim->add_option("--flow-radius", sim_opts.cfg.flow_radius, "Flow search radius")
        ->capture_default_str();
    sim->add_option("--flow", sim_opts.flow, "Flow source: zero, builtin or files")
        ->check(CLI::IsMember({"zero", "builtin", "files"}))
        ->capture_default_str();
    sim->add_option("--predictor", sim_opts.predictor, "Patch predictor: files or degraded")
        ->check(CLI::IsMember({"files", "degraded"}))
        ->capture_default_str();
    sim->add_option("--sigma", sim_opts.sigma, "Gaussian noise sigma for --predictor degraded")
        ->capture_default_str();
    sim->add_option("--dropout", sim_opts.dropout,
                    "Object-cell dropout probability for --predictor degraded")
        ->capture_default_str();
    sim->callback([&] { cmd_pipeline_sim(g, sim_opts); });

    ReportOptions report_opts;
    CLI::App* report = app.add_subcommand("report", "Re-emit an eval report as flat CSV");
    report->add_option("--input", report_opts.input, "Eval report.json")->required();
    report->add_option("--output-file", report_opts.output_file, "CSV file name")
        ->capture_default_str();
    report->callback([&] { cmd_report(g, report_opts); });

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("linedet");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace linedet::cli
