#ifndef PATCHEX_PIPELINE_HPP
#define PATCHEX_PIPELINE_HPP

#include "blend.hpp"
#include "corpus.hpp"
#include "dataset.hpp"
#include "metrics.hpp"
#include "neural.hpp"
#include "segment.hpp"
#include "shadow.hpp"
#include "train.hpp"

#include <chrono>
#include <filesystem>
#include <future>
#include <thread>

namespace px {

// Window-gather weights tuned for the synthetic corpus: a small window with a
// sharp spatial/albedo falloff keeps warped detail crisp (a static scene
// reproduces to ~1e-4), while the library defaults favor robustness on
// noisier buffers.
inline GuidedWarpParams pipeline_warp_params()
{
    GuidedWarpParams p;
    p.k = 5;
    p.sigma_s = 0.3f;
    p.sigma_a = 0.15f;
    return p;
}

struct PipelineConfig {
    float scale = 0.5f;           // half-step extrapolation
    unsigned threads = 1;         // row-parallel warp workers
    bool foveated = true;         // off: no foreground region, one whole-frame net
    bool shadow_partition = true; // off: shadows stay inside the frames end to end
    bool oracle = false;          // inject ground-truth region content and shadow
    int region_pad = 16;          // context margin around region crops
    float attenuation = 0.5f;     // shadow light attenuation, from the dataset manifest
    GuidedWarpParams warp = pipeline_warp_params();
    InvalidParams invalid;
    SegmentationParams seg;
};

namespace detail {

inline double ms_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

inline Rect pad_rect(Rect r, int pad, uint32_t w, uint32_t h)
{
    const int x0 = std::max(r.x - pad, 0), y0 = std::max(r.y - pad, 0);
    const int x1 = std::min(r.x + r.w + pad, int(w)), y1 = std::min(r.y + r.h + pad, int(h));
    return {x0, y0, x1 - x0, y1 - y0};
}

inline Tensor<float> crop_tensor(const Tensor<float>& t, Rect r)
{
    Tensor<float> out(1, t.c, uint32_t(r.h), uint32_t(r.w));
    for (uint32_t c = 0; c < t.c; ++c)
        for (int y = 0; y < r.h; ++y)
            for (int x = 0; x < r.w; ++x)
                out.at(0, c, uint32_t(y), uint32_t(x)) =
                    t.at(0, c, uint32_t(r.y + y), uint32_t(r.x + x));
    return out;
}

inline ImagePlane crop_plane(const ImagePlane& p, Rect r)
{
    ImagePlane out(uint32_t(r.w), uint32_t(r.h), p.channels);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            for (uint32_t c = 0; c < p.channels; ++c)
                out.at(uint32_t(x), uint32_t(y), c) =
                    p.at(uint32_t(r.x + x), uint32_t(r.y + y), c);
    return out;
}

inline void paste_tensor(ImagePlane& dst, const Tensor<float>& src, Rect r)
{
    for (uint32_t c = 0; c < src.c; ++c)
        for (int y = 0; y < r.h; ++y)
            for (int x = 0; x < r.w; ++x)
                dst.at(uint32_t(r.x + x), uint32_t(r.y + y), c) =
                    src.at(0, c, uint32_t(y), uint32_t(x));
}

} // namespace detail

// Everything the warp front end derives from one frame pair; shared between
// the extrapolation path and the training-crop builder.
struct FrameFeatures {
    WarpResult warped;   // guided-warp irradiance; hole_mask = 1 where filled
    ImagePlane trust;    // filled AND geometrically consistent; 1 = keep warped
    RegionMasks masks;
    Tensor<float> input; // assembled 7-channel network input
    double warp_ms = 0.0, prep_ms = 0.0;
};

inline FrameFeatures prepare_frame(const FrameRecord& curr, const TargetGuide& guide,
                                   const PipelineConfig& cfg)
{
    FrameFeatures f;
    auto t0 = std::chrono::steady_clock::now();

    ImagePlane irr = demodulate(curr.color, material_response(curr.g));
    if (cfg.shadow_partition)
        irr = shadow_remove(irr, curr.g.shadow_mask, cfg.attenuation);
    MotionField occ = occlusion_motion_vectors(*guide.motion_vector, *guide.depth, *guide.stencil,
                                               cfg.scale);
    TargetGuide patched = guide;
    patched.motion_vector = &occ;
    f.warped = gbuffer_guided_warp(irr, curr.g, patched, cfg.scale, cfg.warp, cfg.threads);
    WarpedAttrs attrs = warp_attributes(curr.g, *guide.motion_vector, cfg.scale, cfg.threads);
    f.warp_ms = detail::ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    ImagePlane consistent = detect_invalid(attrs, guide, cfg.invalid);
    f.trust = ImagePlane(consistent.width, consistent.height, 1, 0.0f);
    for (size_t i = 0; i < f.trust.data.size(); ++i)
        f.trust.data[i] = std::min(consistent.data[i], f.warped.hole_mask.data[i]);
    if (cfg.foveated) {
        f.masks = segment_frame(*guide.stencil, *guide.motion_vector, cfg.seg);
    } else {
        const uint32_t w = consistent.width, h = consistent.height;
        f.masks = RegionMasks{ImagePlane(w, h, 1, 0.0f), ImagePlane(w, h, 1, 1.0f),
                              ImagePlane(w, h, 1, 0.0f)};
    }
    f.input = assemble_input(WarpResult{f.warped.color, f.trust}, guide);
    f.prep_ms = detail::ms_since(t0);
    return f;
}

namespace detail {

// run the net over the padded bounding box of the region and composite the
// residual prediction into the holes the warp could not fill
inline ImagePlane infer_region(Network<float>& net, const FrameFeatures& f,
                               const ImagePlane& region, int pad)
{
    Rect box = mask_bbox(region);
    if (box.empty())
        return f.warped.color;
    box = pad_rect(box, pad, region.width, region.height);
    Tensor<float> x = crop_tensor(f.input, box);
    Tensor<float> pred = net.forward(x);
    add_color_residual(pred, x);
    ImagePlane full = f.warped.color;
    paste_tensor(full, pred, box);
    return composite_prediction(f.warped.color, full, f.trust, region);
}

} // namespace detail

struct FrameOutput {
    ImagePlane color;  // predicted half-step frame
    ImagePlane shadow; // predicted half-step shadow mask
    RegionMasks masks;
    ImagePlane trust;
};

// One half-step extrapolation: demodulated, shadow-free irradiance is warped
// along the guide's motion, three region tasks and the shadow task run
// concurrently over the immutable features, and the blended result is
// re-shadowed and re-modulated with the guide's materials. `truth` is consulted
// only in oracle mode.
inline FrameOutput extrapolate_frame(const FrameRecord& prev, const FrameRecord& curr,
                                     const TargetGuide& guide, const FrameRecord* truth,
                                     Network<float>& fg_net, Network<float>& near_net,
                                     const PipelineConfig& cfg, StageTimings& timing)
{
    if (cfg.oracle && truth == nullptr)
        throw config_error("extrapolate_frame: oracle mode needs the ground-truth frame");

    FrameFeatures f = prepare_frame(curr, guide, cfg);
    timing.add(Stage::warping, f.warp_ms);
    timing.add(Stage::preprocessing, f.prep_ms);

    const uint32_t W = f.trust.width, H = f.trust.height;
    auto t0 = std::chrono::steady_clock::now();

    ImagePlane truth_irr;
    if (cfg.oracle) {
        truth_irr = demodulate(truth->color, material_response(guide));
        if (cfg.shadow_partition)
            truth_irr = shadow_remove(truth_irr, truth->g.shadow_mask, cfg.attenuation);
    }

    auto fg_task = std::async(std::launch::async, [&]() -> ImagePlane {
        if (cfg.oracle)
            return composite_prediction(f.warped.color, truth_irr, f.trust, f.masks.fg);
        return detail::infer_region(fg_net, f, f.masks.fg, cfg.region_pad);
    });
    auto near_task = std::async(std::launch::async, [&]() -> ImagePlane {
        if (cfg.oracle)
            return composite_prediction(f.warped.color, truth_irr, f.trust, f.masks.near_be);
        return detail::infer_region(near_net, f, f.masks.near_be, cfg.region_pad);
    });
    auto far_task = std::async(std::launch::async, [&]() -> ImagePlane {
        return f.warped.color; // far background trusts the warp
    });
    auto shadow_task = std::async(std::launch::async, [&]() -> ImagePlane {
        if (!cfg.shadow_partition)
            return ImagePlane(W, H, 1, 0.0f);
        if (cfg.oracle)
            return truth->g.shadow_mask;
        ImagePlane flow = farneback_flow(prev.g.shadow_mask, curr.g.shadow_mask);
        return extrapolate_shadow(curr.g.shadow_mask, flow, cfg.scale);
    });

    FrameOutput out;
    ImagePlane fg_color = fg_task.get();
    ImagePlane near_color = near_task.get();
    ImagePlane far_color = far_task.get();
    out.shadow = shadow_task.get();
    timing.add(Stage::inference, detail::ms_since(t0));

    t0 = std::chrono::steady_clock::now();
    ImagePlane blended = blend_regions(fg_color, near_color, far_color, f.masks);
    if (cfg.shadow_partition)
        blended = shadow_apply(blended, out.shadow, cfg.attenuation);
    out.color = modulate(blended, material_response(guide));
    for (float& v : out.color.data)
        v = std::max(v, 0.0f);
    timing.add(Stage::blending, detail::ms_since(t0));

    out.masks = std::move(f.masks);
    out.trust = std::move(f.trust);
    return out;
}

// ---- dataset-level run -------------------------------------------------

inline std::string pred_frame_name(uint32_t emitted_index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "pred_%05u.pfex", emitted_index);
    return buf;
}

inline std::string pred_shadow_name(uint32_t emitted_index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "shadow_%05u.pfex", emitted_index);
    return buf;
}

struct RunOptions {
    std::filesystem::path dataset;
    std::filesystem::path out_dir;
    std::filesystem::path fg_checkpoint;   // empty: freshly initialized
    std::filesystem::path near_checkpoint; // empty: freshly initialized
    uint64_t seed = 1;
    std::string config_hash = "0";
    PipelineConfig pipe;
};

struct RunResult {
    uint32_t frames = 0;
    StageTimings timing;
};

namespace detail {

inline Network<float> load_or_init(const std::filesystem::path& ckpt, const NetRecipe& recipe,
                                   uint64_t seed)
{
    if (ckpt.empty())
        return Network<float>(recipe, seed);
    Network<float> net = load_network(ckpt);
    if (net.recipe.id != recipe.id)
        throw data_error("checkpoint " + ckpt.string() + " holds a '" + net.recipe.id +
                         "' network where '" + recipe.id + "' is required");
    return net;
}

} // namespace detail

// Extrapolate every available half step of a dataset and write the predicted
// frames, shadow masks, run manifest, and stage-timing table into out_dir.
inline RunResult run_extrapolate(const RunOptions& opt)
{
    namespace fs = std::filesystem;
    DatasetManifest man = read_manifest(opt.dataset);
    if (man.integer_frames < 2)
        throw data_error("run_extrapolate: dataset has no half step to predict");

    PipelineConfig cfg = opt.pipe;
    cfg.attenuation = man.shadow_attenuation;
    Network<float> fg_net = detail::load_or_init(opt.fg_checkpoint, fg_recipe(), opt.seed);
    Network<float> near_net = detail::load_or_init(opt.near_checkpoint, near_recipe(), opt.seed);
    fs::create_directories(opt.out_dir);

    RunResult res;
    FrameRecord prev, curr;
    for (uint32_t t = 0; t + 1 < man.integer_frames; ++t) {
        auto t0 = std::chrono::steady_clock::now();
        if (t == 0) {
            curr = read_frame(opt.dataset, 0);
        } else {
            prev = std::move(curr);
            curr = read_frame(opt.dataset, 2 * t);
        }
        FrameRecord mid = read_frame(opt.dataset, 2 * t + 1);
        TargetGuide guide = make_target_guide(mid.g);
        double io_ms = detail::ms_since(t0);

        const FrameRecord& prev_ref = (t == 0) ? curr : prev;
        FrameOutput out = extrapolate_frame(prev_ref, curr, guide, cfg.oracle ? &mid : nullptr,
                                            fg_net, near_net, cfg, res.timing);

        t0 = std::chrono::steady_clock::now();
        write_plane(opt.out_dir / pred_frame_name(2 * t + 1), out.color);
        write_plane(opt.out_dir / pred_shadow_name(2 * t + 1), out.shadow);
        io_ms += detail::ms_since(t0);
        res.timing.add(Stage::gbuffer_io, io_ms);
        ++res.frames;
    }

    nlohmann::ordered_json manifest;
    manifest["tool"] = "patchex";
    manifest["format"] = 1;
    manifest["seed"] = opt.seed;
    manifest["config_hash"] = opt.config_hash;
    manifest["threads"] = cfg.threads;
    manifest["dataset"] = opt.dataset.string();
    manifest["frames"] = res.frames;
    manifest["oracle"] = cfg.oracle;
    manifest["foveated"] = cfg.foveated;
    manifest["shadow_partition"] = cfg.shadow_partition;
    std::ofstream os(opt.out_dir / "run.json");
    os << manifest.dump(2) << '\n';
    if (!os)
        throw data_error("run_extrapolate: cannot write run.json");
    std::ofstream ts(opt.out_dir / "timing.csv");
    ts << stage_timing_csv(res.timing);
    if (!ts)
        throw data_error("run_extrapolate: cannot write timing.csv");
    return res;
}

// ---- evaluation ----------------------------------------------------------

// intersection over union of two masks thresholded at 0.5; empty∪empty = 1
inline double mask_iou(const ImagePlane& a, const ImagePlane& b)
{
    if (!a.same_shape(b))
        throw data_error("mask_iou: resolution mismatch");
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const bool pa = a.data[i] > 0.5f, pb = b.data[i] > 0.5f;
        inter += (pa && pb) ? 1 : 0;
        uni += (pa || pb) ? 1 : 0;
    }
    return uni ? double(inter) / double(uni) : 1.0;
}

struct EvalSummary {
    std::vector<FrameScore> frames;
    double mean_psnr = 0.0; // over frames with finite PSNR
    double mean_ssim = 0.0;
    double shadow_iou = -1.0; // mean predicted-shadow IoU; -1 when not measured
    double hold_iou = -1.0;   // mean IoU of holding the previous mask
};

namespace detail {

inline void finish_summary(EvalSummary& s)
{
    double psum = 0.0, ssum = 0.0;
    size_t pn = 0;
    for (const FrameScore& f : s.frames) {
        if (std::isfinite(f.psnr_db)) {
            psum += f.psnr_db;
            ++pn;
        }
        ssum += f.ssim;
    }
    s.mean_psnr = pn ? psum / double(pn) : std::numeric_limits<double>::infinity();
    s.mean_ssim = s.frames.empty() ? 0.0 : ssum / double(s.frames.size());
}

} // namespace detail

// Score a finished run against the dataset's ground-truth mid frames and write
// metrics.csv into the run directory.
inline EvalSummary evaluate_run(const std::filesystem::path& dataset,
                                const std::filesystem::path& run_dir)
{
    DatasetManifest man = read_manifest(dataset);
    EvalSummary s;
    double iou_pred = 0.0, iou_hold = 0.0;
    size_t iou_n = 0;
    for (uint32_t t = 0; t + 1 < man.integer_frames; ++t) {
        const uint32_t idx = 2 * t + 1;
        ImagePlane pred = read_plane(run_dir / pred_frame_name(idx));
        FrameRecord gt = read_frame(dataset, idx);
        FrameScore sc;
        sc.frame_index = int(idx);
        sc.psnr_db = psnr(pred, gt.color);
        sc.ssim = ssim(pred, gt.color);
        s.frames.push_back(sc);

        const std::filesystem::path sp = run_dir / pred_shadow_name(idx);
        if (std::filesystem::exists(sp)) {
            ImagePlane shadow_pred = read_plane(sp);
            FrameRecord held = read_frame(dataset, 2 * t);
            iou_pred += mask_iou(shadow_pred, gt.g.shadow_mask);
            iou_hold += mask_iou(held.g.shadow_mask, gt.g.shadow_mask);
            ++iou_n;
        }
    }
    if (iou_n) {
        s.shadow_iou = iou_pred / double(iou_n);
        s.hold_iou = iou_hold / double(iou_n);
    }
    detail::finish_summary(s);
    std::ofstream os(run_dir / "metrics.csv");
    os << frame_metrics_csv(s.frames);
    if (!os)
        throw data_error("evaluate_run: cannot write metrics.csv");
    return s;
}

// The comparison baseline: plain clamped backward warp of the raw colors along
// the same half-step motion, no demodulation, no inpainting, no shadow model.
inline EvalSummary evaluate_warp_baseline(const std::filesystem::path& dataset)
{
    DatasetManifest man = read_manifest(dataset);
    EvalSummary s;
    FrameRecord prev, curr;
    for (uint32_t t = 0; t + 1 < man.integer_frames; ++t) {
        if (t == 0) {
            curr = read_frame(dataset, 0);
        } else {
            prev = std::move(curr);
            curr = read_frame(dataset, 2 * t);
        }
        FrameRecord mid = read_frame(dataset, 2 * t + 1);
        ImagePlane warped = backward_warp_clamped(curr.color, mid.g.motion_vector, 0.5f);
        FrameScore sc;
        sc.frame_index = int(2 * t + 1);
        sc.psnr_db = psnr(warped, mid.color);
        sc.ssim = ssim(warped, mid.color);
        s.frames.push_back(sc);
    }
    detail::finish_summary(s);
    return s;
}

// ---- training-crop construction ------------------------------------------

struct TrainingCrops {
    std::vector<TrainSample> fg, near;
};

namespace detail {

inline TrainSample make_crop_sample(const FrameFeatures& f, const ImagePlane& truth_irr, Rect r)
{
    TrainSample s;
    s.input = crop_tensor(f.input, r);
    ImagePlane tc = crop_plane(truth_irr, r);
    ImagePlane hc = crop_plane(f.trust, r);
    s.truth = tensor_from_planes<float>({&tc});
    s.hole = tensor_from_planes<float>({&hc});
    return s;
}

// crop windows centered on warp holes inside the region
inline void collect_region_crops(const FrameFeatures& f, const ImagePlane& region,
                                 const ImagePlane& truth_irr, uint32_t crop, uint32_t count,
                                 rng& r, std::vector<TrainSample>& out)
{
    const uint32_t W = region.width, H = region.height;
    std::vector<uint32_t> centers;
    for (uint32_t i = 0; i < W * H; ++i)
        if (region.data[i] > 0.5f && f.trust.data[i] < 0.5f)
            centers.push_back(i);
    if (centers.empty())
        return;
    for (uint32_t k = 0; k < count; ++k) {
        const uint32_t c = centers[r.below(uint32_t(centers.size()))];
        const int cx = int(c % W), cy = int(c / W);
        Rect box{std::clamp(cx - int(crop) / 2, 0, int(W - crop)),
                 std::clamp(cy - int(crop) / 2, 0, int(H - crop)), int(crop), int(crop)};
        out.push_back(make_crop_sample(f, truth_irr, box));
    }
}

} // namespace detail

// Build fg/near training triples from every half step of the given datasets:
// the warp front end supplies the inputs, the rendered mid frames supply the
// supervision, and crops are drawn around warp holes inside each region.
inline TrainingCrops build_training_crops(const std::vector<std::filesystem::path>& datasets,
                                          const PipelineConfig& pipe, uint32_t crop,
                                          uint32_t crops_per_region, uint64_t seed)
{
    if (crop < 16)
        throw config_error("build_training_crops: crop must be at least 16 px");
    TrainingCrops out;
    for (size_t d = 0; d < datasets.size(); ++d) {
        DatasetManifest man = read_manifest(datasets[d]);
        if (man.width < crop || man.height < crop)
            throw data_error("build_training_crops: dataset smaller than the crop size");
        PipelineConfig cfg = pipe;
        cfg.attenuation = man.shadow_attenuation;
        FrameRecord curr;
        for (uint32_t t = 0; t + 1 < man.integer_frames; ++t) {
            curr = read_frame(datasets[d], 2 * t);
            FrameRecord mid = read_frame(datasets[d], 2 * t + 1);
            TargetGuide guide = make_target_guide(mid.g);
            FrameFeatures f = prepare_frame(curr, guide, cfg);
            ImagePlane truth_irr = demodulate(mid.color, material_response(mid.g));
            if (cfg.shadow_partition)
                truth_irr = shadow_remove(truth_irr, mid.g.shadow_mask, cfg.attenuation);
            rng r(seed ^ (uint64_t(d + 1) << 32) ^ t);
            detail::collect_region_crops(f, f.masks.fg, truth_irr, crop, crops_per_region, r,
                                         out.fg);
            detail::collect_region_crops(f, f.masks.near_be, truth_irr, crop, crops_per_region, r,
                                         out.near);
        }
    }
    return out;
}

// ---- training orchestration -----------------------------------------------

struct PipelineTrainOptions {
    std::vector<std::filesystem::path> datasets;
    std::filesystem::path out_dir;
    PipelineConfig pipe;
    TrainConfig fg;   // per-net optimizer settings
    TrainConfig near;
    uint32_t crop = 64;
    uint32_t crops_per_region = 2;
};

struct PipelineTrainResult {
    TrainResult fg, near;
    size_t fg_samples = 0, near_samples = 0;
    std::filesystem::path fg_checkpoint, near_checkpoint;
};

namespace detail {

inline void write_curve_csv(const std::filesystem::path& path, const TrainResult& r)
{
    std::ofstream os(path);
    os << "epoch,train_loss,val_loss\n";
    for (size_t e = 0; e < r.curve.size(); ++e)
        os << e + 1 << ',' << fmt_double(r.curve[e].train_loss) << ','
           << fmt_double(r.curve[e].val_loss) << '\n';
    if (!os)
        throw data_error("train: cannot write " + path.string());
}

} // namespace detail

// Train both micro-nets on crops drawn from the datasets and save checkpoints
// plus per-epoch loss curves under out_dir.
inline PipelineTrainResult train_pipeline(const PipelineTrainOptions& opt)
{
    namespace fs = std::filesystem;
    TrainingCrops crops = build_training_crops(opt.datasets, opt.pipe, opt.crop,
                                               opt.crops_per_region, opt.fg.seed);
    if (crops.fg.empty() || crops.near.empty())
        throw data_error("train_pipeline: no usable crops (regions had no warp holes)");
    fs::create_directories(opt.out_dir);

    PipelineTrainResult res;
    res.fg_samples = crops.fg.size();
    res.near_samples = crops.near.size();
    FeatureExtractor<float> feat;

    Network<float> fg_net(fg_recipe(), opt.fg.seed);
    res.fg = train_network(fg_net, crops.fg, opt.fg, feat);
    res.fg_checkpoint = opt.out_dir / "fg.pxnn";
    save_network(res.fg_checkpoint, fg_net);
    detail::write_curve_csv(opt.out_dir / "fg_curve.csv", res.fg);

    Network<float> near_net(near_recipe(), opt.near.seed);
    res.near = train_network(near_net, crops.near, opt.near, feat);
    res.near_checkpoint = opt.out_dir / "near.pxnn";
    save_network(res.near_checkpoint, near_net);
    detail::write_curve_csv(opt.out_dir / "near_curve.csv", res.near);
    return res;
}

// ---- inference benchmark ----------------------------------------------

struct BenchPoint {
    uint32_t width = 0, height = 0;
    double median_ms = 0.0;
};

struct BenchReport {
    std::vector<BenchPoint> whole; // whole-frame single-network inference
    PowerLawFit fit;               // latency vs pixel count
    double whole_fg_ms = 0.0;      // sequential whole-frame inference at 640x360
    double whole_near_ms = 0.0;    // same but with the lighter net
    double patch_ms = 0.0;         // concurrent region tasks at 640x360
    unsigned cores = 0;
};

inline std::vector<std::pair<uint32_t, uint32_t>> bench_default_resolutions()
{
    return {{160, 96}, {320, 192}, {480, 288}, {640, 384}, {960, 576}};
}

// Median whole-frame latency of the full-capacity net across resolutions plus
// a patch-vs-whole comparison at 360p on a rendered corpus frame. The input is
// rewritten before every timed pass, matching how the warp stage hands a fresh
// buffer to inference in the pipeline.
inline BenchReport bench_inference(const std::vector<std::pair<uint32_t, uint32_t>>& resolutions,
                                   int iterations, uint64_t seed)
{
    if (resolutions.size() < 3)
        throw config_error("bench_inference: need at least 3 resolutions for the fit");
    if (iterations < 1)
        throw config_error("bench_inference: iterations must be positive");

    BenchReport rep;
    rep.cores = std::thread::hardware_concurrency();
    Network<float> fg_net(fg_recipe(), seed);
    Network<float> near_net(near_recipe(), seed + 1);

    std::vector<double> xs, ys;
    for (auto [w, h] : resolutions) {
        Tensor<float> x(1, 7, h, w);
        std::vector<double> t;
        fg_net.forward(x); // warm code paths and the allocator
        for (int it = 0; it < iterations; ++it) {
            rng r(seed ^ uint64_t(w) ^ (uint64_t(it) << 16));
            for (float& v : x.v)
                v = r.range(0.0f, 1.0f);
            auto t0 = std::chrono::steady_clock::now();
            Tensor<float> y = fg_net.forward(x);
            t.push_back(detail::ms_since(t0));
        }
        const double med = percentile_nearest_rank(t, 0.5);
        rep.whole.push_back({w, h, med});
        xs.push_back(double(w) * h);
        ys.push_back(med);
    }
    rep.fit = fit_power_law(xs, ys);

    // patch-parallel vs whole-frame at 360p, on the pipeline's own features
    SceneSpec spec = scale_scene(corpus_scene("held-d"), 2.0f); // 640x360
    spec.frame_count = 2;
    auto frames = render_sequence(spec);
    PipelineConfig cfg;
    TargetGuide guide = make_target_guide(frames[1].g);
    FrameFeatures f = prepare_frame(frames[0], guide, cfg);

    std::vector<double> tw, tn, tp;
    for (int it = 0; it < iterations; ++it) {
        auto t0 = std::chrono::steady_clock::now();
        Tensor<float> y = fg_net.forward(f.input);
        tw.push_back(detail::ms_since(t0));

        t0 = std::chrono::steady_clock::now();
        Tensor<float> z = near_net.forward(f.input);
        tn.push_back(detail::ms_since(t0));

        t0 = std::chrono::steady_clock::now();
        auto fg_task = std::async(std::launch::async, [&] {
            return detail::infer_region(fg_net, f, f.masks.fg, cfg.region_pad);
        });
        auto near_task = std::async(std::launch::async, [&] {
            return detail::infer_region(near_net, f, f.masks.near_be, cfg.region_pad);
        });
        auto far_task = std::async(std::launch::async, [&] { return f.warped.color; });
        fg_task.get();
        near_task.get();
        far_task.get();
        tp.push_back(detail::ms_since(t0));
    }
    rep.whole_fg_ms = percentile_nearest_rank(tw, 0.5);
    rep.whole_near_ms = percentile_nearest_rank(tn, 0.5);
    rep.patch_ms = percentile_nearest_rank(tp, 0.5);
    return rep;
}

inline std::string bench_csv(const BenchReport& r)
{
    std::string out = "width,height,pixels,median_ms\n";
    for (const BenchPoint& p : r.whole) {
        out += std::to_string(p.width) + ',' + std::to_string(p.height) + ',' +
               std::to_string(uint64_t(p.width) * p.height) + ',' +
               detail::fmt_double(p.median_ms) +
               '\n';
    }
    return out;
}

} // namespace px

#endif
