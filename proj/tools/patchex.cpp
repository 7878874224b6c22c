// patchex: temporal-supersampling toolchain driver.
//
// Subcommands cover the whole workflow: render the synthetic corpus, inspect
// segmentation, train the inpainting networks, extrapolate half-step frames,
// score runs, benchmark inference, and evaluate the frame-timing model.
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.

#include <patchex/config.hpp>
#include <patchex/latency.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

struct CommonArgs {
    std::string config_path;
    uint64_t seed = 1;
    unsigned threads = 1;
    bool no_foveated = false;
    bool no_shadow_partition = false;
    bool no_perceptual_loss = false;
    bool oracle = false;
};

px::ToolConfig effective_config(const CommonArgs& a)
{
    px::ToolConfig c;
    if (!a.config_path.empty())
        c = px::load_config(a.config_path);
    c.pipe.threads = a.threads;
    c.pipe.oracle = a.oracle;
    if (a.no_foveated)
        c.pipe.foveated = false;
    if (a.no_shadow_partition)
        c.pipe.shadow_partition = false;
    if (a.no_perceptual_loss) {
        c.fg_train.loss.perceptual = 0.0f;
        c.fg_train.loss.style = 0.0f;
        c.near_train.loss.perceptual = 0.0f;
        c.near_train.loss.style = 0.0f;
    }
    c.fg_train.seed = a.seed;
    c.near_train.seed = a.seed;
    return c;
}

void add_ablation_flags(CLI::App* cmd, CommonArgs& a)
{
    cmd->add_flag("--no-foveated", a.no_foveated,
                  "disable region segmentation; one network covers the whole frame");
    cmd->add_flag("--no-shadow-partition", a.no_shadow_partition,
                  "keep shadows inside the frames instead of modeling them separately");
    cmd->add_flag("--no-perceptual-loss", a.no_perceptual_loss,
                  "train with pixel losses only (ignored outside training)");
}

int run_render_dataset(const std::string& scene, const std::string& out, float scale,
                       bool overwrite, bool list)
{
    if (list) {
        for (const std::string& n : px::corpus_scene_names())
            std::printf("%s%s\n", n.c_str(), px::corpus_scene_held_out(n) ? " (held-out)" : "");
        std::printf("disocclusion\nstatic\npan\n");
        return 0;
    }
    if (scene.empty() || out.empty())
        throw px::config_error("render-dataset: --scene and --out are required");
    px::SceneSpec spec = px::corpus_scene(scene);
    if (scale != 1.0f)
        spec = px::scale_scene(spec, scale);
    auto frames = px::render_sequence(spec);
    px::write_dataset(out, frames, spec, overwrite);
    std::printf("wrote %zu frames (%ux%u) to %s\n", frames.size(), spec.width, spec.height,
                out.c_str());
    return 0;
}

int run_segment(const std::vector<std::string>& datasets, const std::string& out)
{
    namespace fs = std::filesystem;
    fs::create_directories(out);
    std::vector<px::SequenceSummary> summaries;
    for (const std::string& d : datasets) {
        px::DatasetManifest man = px::read_manifest(d);
        std::vector<px::ImagePlane> colors, stencils, mvs;
        for (uint32_t i = 0; i < man.emitted_frames; ++i) {
            px::FrameRecord f = px::read_frame(d, i);
            colors.push_back(std::move(f.color));
            stencils.push_back(std::move(f.g.stencil));
            mvs.push_back(std::move(f.g.motion_vector));
        }
        px::OfflineSegmentation off = px::offline_segment(colors);
        summaries.push_back(px::summarize_sequence(colors, stencils, mvs));
        const std::string stem = fs::path(d).filename().string();
        px::write_png(fs::path(out) / (stem + "_variation.png"), off.variation);
        px::write_png(fs::path(out) / (stem + "_high_mask.png"), off.high_mask);
        std::printf("%s: offline rect x=%d y=%d w=%d h=%d\n", d.c_str(), off.rect.x, off.rect.y,
                    off.rect.w, off.rect.h);
    }
    if (summaries.size() < 2) {
        std::printf("calibration skipped: needs at least 2 datasets\n");
        return 0;
    }
    px::Calibration cal = px::calibrate_k(summaries);
    nlohmann::ordered_json j;
    j["k_x"] = cal.k_x;
    j["k_y"] = cal.k_y;
    j["r_x"] = cal.r_x;
    j["r_y"] = cal.r_y;
    j["low_correlation"] = cal.low_correlation;
    std::ofstream os(fs::path(out) / "calibration.json");
    os << j.dump(2) << '\n';
    std::printf("calibration: k_x=%.4f (r=%.3f)  k_y=%.4f (r=%.3f)%s\n", cal.k_x, cal.r_x,
                cal.k_y, cal.r_y, cal.low_correlation ? "  [low correlation]" : "");
    return 0;
}

int run_train(const std::vector<std::string>& datasets, const std::string& out,
              const CommonArgs& args, uint32_t epochs_override)
{
    px::ToolConfig cfg = effective_config(args);
    if (epochs_override > 0) {
        cfg.fg_train.epochs = epochs_override;
        cfg.near_train.epochs = epochs_override;
    }
    px::PipelineTrainOptions opt;
    for (const std::string& d : datasets)
        opt.datasets.emplace_back(d);
    opt.out_dir = out;
    opt.pipe = cfg.pipe;
    opt.fg = cfg.fg_train;
    opt.near = cfg.near_train;
    opt.crop = cfg.crop;
    opt.crops_per_region = cfg.crops_per_region;
    px::PipelineTrainResult res = px::train_pipeline(opt);
    std::printf("fg:   %zu samples, final val loss %.5f -> %s\n", res.fg_samples,
                res.fg.curve.empty() ? 0.0 : res.fg.curve.back().val_loss,
                res.fg_checkpoint.string().c_str());
    std::printf("near: %zu samples, final val loss %.5f -> %s\n", res.near_samples,
                res.near.curve.empty() ? 0.0 : res.near.curve.back().val_loss,
                res.near_checkpoint.string().c_str());
    return 0;
}

int run_extrapolate_cmd(const std::string& dataset, const std::string& out,
                        const std::string& fg, const std::string& near, const CommonArgs& args)
{
    px::ToolConfig cfg = effective_config(args);
    px::RunOptions opt;
    opt.dataset = dataset;
    opt.out_dir = out;
    opt.fg_checkpoint = fg;
    opt.near_checkpoint = near;
    opt.seed = args.seed;
    opt.config_hash = px::config_hash(cfg);
    opt.pipe = cfg.pipe;
    px::RunResult res = px::run_extrapolate(opt);
    std::printf("extrapolated %u half-step frames to %s\n", res.frames, out.c_str());
    return 0;
}

int run_evaluate(const std::string& dataset, const std::string& run, bool baseline)
{
    px::EvalSummary s = px::evaluate_run(dataset, run);
    std::printf("run:      mean PSNR %.2f dB  mean SSIM %.4f", s.mean_psnr, s.mean_ssim);
    if (s.shadow_iou >= 0.0)
        std::printf("  shadow IoU %.3f (hold-last %.3f)", s.shadow_iou, s.hold_iou);
    std::printf("\n");
    if (baseline) {
        px::EvalSummary b = px::evaluate_warp_baseline(dataset);
        std::printf("baseline: mean PSNR %.2f dB  mean SSIM %.4f\n", b.mean_psnr, b.mean_ssim);
    }
    return 0;
}

int run_bench(int iterations, uint64_t seed, const std::string& out)
{
    namespace fs = std::filesystem;
    px::BenchReport rep = px::bench_inference(px::bench_default_resolutions(), iterations, seed);
    std::printf("whole-frame inference latency:\n");
    std::printf("  width height pixels     median_ms\n");
    for (const px::BenchPoint& p : rep.whole)
        std::printf("  %5u %6u %9llu %10.1f\n", p.width, p.height,
                    static_cast<unsigned long long>(uint64_t(p.width) * p.height), p.median_ms);
    std::printf("power-law fit: latency ~ a * pixels^b, b = %.4f (r2 = %.5f)\n", rep.fit.b,
                rep.fit.r2);
    std::printf("360p whole-frame: fg %.1f ms, near %.1f ms; patch-parallel %.1f ms (%u cores)\n",
                rep.whole_fg_ms, rep.whole_near_ms, rep.patch_ms, rep.cores);

    // per-stage medians from a short real run on a rendered scene
    px::SceneSpec spec = px::corpus_scene("held-d");
    auto frames = px::render_sequence(spec);
    fs::path tmp = fs::temp_directory_path() / "patchex_bench_ds";
    fs::remove_all(tmp);
    px::write_dataset(tmp, frames, spec, true);
    px::RunOptions opt;
    opt.dataset = tmp;
    opt.out_dir = tmp / "run";
    opt.seed = seed;
    px::RunResult run = px::run_extrapolate(opt);
    std::string table = px::stage_timing_csv(run.timing);
    std::printf("\nstage timings over %u frames (%ux%u):\n%s", run.frames, spec.width,
                spec.height, table.c_str());
    if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream bs(fs::path(out) / "bench.csv");
        bs << px::bench_csv(rep);
        std::ofstream ts(fs::path(out) / "timing.csv");
        ts << table;
        if (!bs || !ts)
            throw px::data_error("bench: cannot write results to " + out);
    }
    fs::remove_all(tmp);
    return 0;
}

int run_latency_model(double refresh_hz, const std::string& trace_path, double interp_ms,
                      double extrap_ms, const std::string& mode, double jnd_ms,
                      const std::string& out)
{
    if (!(refresh_hz > 0.0))
        throw px::config_error("latency-model: refresh rate must be positive");
    px::TimingScenario s;
    s.refresh_ms = 1000.0 / refresh_hz;
    s.interp_ms = interp_ms;
    s.extrap_ms = extrap_ms;
    std::ifstream is(trace_path);
    if (!is)
        throw px::data_error("latency-model: cannot open trace " + trace_path);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        try {
            size_t pos = 0;
            double v = std::stod(line, &pos);
            while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos])))
                ++pos;
            if (pos != line.size())
                throw std::invalid_argument("trailing characters");
            s.render_ms.push_back(v);
        } catch (const std::exception&) {
            throw px::data_error("latency-model: bad render time '" + line + "'");
        }
    }

    std::string csv;
    auto append = [&](px::SynthesisMode m, const char* name) {
        px::LatencyReport rep = px::presentation_latency(s, m);
        csv += std::string("# mode=") + name + "\n" + px::latency_csv(rep);
        double frac = px::jnd_violation_fraction(rep.presentation_ms, jnd_ms);
        std::printf("%s: %.1f%% of frames exceed the %.1f ms threshold\n", name, 100.0 * frac,
                    jnd_ms);
    };
    if (mode == "interp" || mode == "both")
        append(px::SynthesisMode::interpolate, "interp");
    if (mode == "extrap" || mode == "both")
        append(px::SynthesisMode::extrapolate, "extrap");

    if (out.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        std::ofstream os(out);
        os << csv;
        if (!os)
            throw px::data_error("latency-model: cannot write " + out);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"temporal supersampling toolchain"};
    app.require_subcommand(1);

    // render-dataset
    auto* rd = app.add_subcommand("render-dataset", "render a synthetic scene to a dataset");
    std::string rd_scene, rd_out;
    float rd_scale = 1.0f;
    bool rd_overwrite = false, rd_list = false;
    rd->add_option("--scene", rd_scene, "scene name (see --list)");
    rd->add_option("--out", rd_out, "output dataset directory");
    rd->add_option("--scale", rd_scale, "uniform scene scale factor");
    rd->add_flag("--overwrite", rd_overwrite, "replace an existing dataset");
    rd->add_flag("--list", rd_list, "list available scenes and exit");

    // segment
    auto* sg = app.add_subcommand("segment", "offline segmentation and expansion calibration");
    std::vector<std::string> sg_datasets;
    std::string sg_out;
    sg->add_option("--dataset", sg_datasets, "dataset directory (repeatable)")->required();
    sg->add_option("--out", sg_out, "output directory")->required();

    // train
    auto* tr = app.add_subcommand("train", "train the region inpainting networks");
    std::vector<std::string> tr_datasets;
    std::string tr_out;
    CommonArgs tr_args;
    uint32_t tr_epochs = 0;
    tr->add_option("--dataset", tr_datasets, "training dataset directory (repeatable)")
        ->required();
    tr->add_option("--out", tr_out, "output directory for checkpoints and curves")->required();
    tr->add_option("--config", tr_args.config_path, "JSON config file");
    tr->add_option("--seed", tr_args.seed, "training seed");
    tr->add_option("--epochs", tr_epochs, "override the epoch budget for both networks");
    add_ablation_flags(tr, tr_args);

    // extrapolate
    auto* ex = app.add_subcommand("extrapolate", "synthesize half-step frames for a dataset");
    std::string ex_dataset, ex_out, ex_fg, ex_near;
    CommonArgs ex_args;
    ex->add_option("--dataset", ex_dataset, "input dataset directory")->required();
    ex->add_option("--out", ex_out, "output run directory")->required();
    ex->add_option("--fg", ex_fg, "foreground network checkpoint (.pxnn)");
    ex->add_option("--near", ex_near, "near-background network checkpoint (.pxnn)");
    ex->add_option("--config", ex_args.config_path, "JSON config file");
    ex->add_option("--threads", ex_args.threads, "worker threads for the warp stages");
    ex->add_option("--seed", ex_args.seed, "seed recorded in the run manifest");
    ex->add_flag("--oracle", ex_args.oracle,
                 "fill regions and shadows from ground truth (upper bound)");
    add_ablation_flags(ex, ex_args);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "score a run against ground-truth mid frames");
    std::string ev_dataset, ev_run;
    bool ev_baseline = false;
    ev->add_option("--dataset", ev_dataset, "dataset directory")->required();
    ev->add_option("--run", ev_run, "run directory produced by extrapolate")->required();
    ev->add_flag("--baseline", ev_baseline, "also score the plain warp baseline");

    // bench
    auto* bn = app.add_subcommand("bench", "benchmark inference latency and pipeline stages");
    int bn_iterations = 5;
    uint64_t bn_seed = 1;
    std::string bn_out;
    bn->add_option("--iterations", bn_iterations, "timed repetitions per measurement");
    bn->add_option("--seed", bn_seed, "network initialization seed");
    bn->add_option("--out", bn_out, "directory for bench.csv and timing.csv");

    // latency-model
    auto* lm = app.add_subcommand("latency-model", "analytic presentation-latency model");
    double lm_hz = 0.0, lm_interp = 0.0, lm_extrap = 0.0, lm_jnd = 5.0;
    std::string lm_trace, lm_mode = "both", lm_out;
    lm->add_option("--refresh-hz", lm_hz, "display refresh rate")->required();
    lm->add_option("--render-trace", lm_trace, "file with one render time (ms) per line")
        ->required();
    lm->add_option("--interp-ms", lm_interp, "interpolation cost per frame")->required();
    lm->add_option("--extrap-ms", lm_extrap, "extrapolation cost per frame")->required();
    lm->add_option("--mode", lm_mode, "interp, extrap, or both")
        ->check(CLI::IsMember({"interp", "extrap", "both"}));
    lm->add_option("--jnd-ms", lm_jnd, "perceptual latency threshold");
    lm->add_option("--out", lm_out, "write the CSV here instead of stdout");

    try {
        app.parse(argc, argv);
        if (rd->parsed())
            return run_render_dataset(rd_scene, rd_out, rd_scale, rd_overwrite, rd_list);
        if (sg->parsed())
            return run_segment(sg_datasets, sg_out);
        if (tr->parsed())
            return run_train(tr_datasets, tr_out, tr_args, tr_epochs);
        if (ex->parsed())
            return run_extrapolate_cmd(ex_dataset, ex_out, ex_fg, ex_near, ex_args);
        if (ev->parsed())
            return run_evaluate(ev_dataset, ev_run, ev_baseline);
        if (bn->parsed())
            return run_bench(bn_iterations, bn_seed, bn_out);
        if (lm->parsed())
            return run_latency_model(lm_hz, lm_trace, lm_interp, lm_extrap, lm_mode, lm_jnd,
                                     lm_out);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const px::config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const px::data_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const px::numeric_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
    return 0;
}
