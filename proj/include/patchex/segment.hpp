#ifndef PATCHEX_SEGMENT_HPP
#define PATCHEX_SEGMENT_HPP

#include "mask_ops.hpp"

namespace px {

// Foveated three-region segmentation: the dynamic-object stencil is the
// foreground, a motion-expanded bounding rectangle around it is the near
// background, everything else is the far background.

struct RegionMasks {
    ImagePlane fg;      // dynamic objects (equals the stencil)
    ImagePlane near_be; // expanded rectangles minus the stencil
    ImagePlane far_be;  // the rest
};

struct SegmentationParams {
    float k_x = 2.0f, k_y = 2.0f; // rectangle growth per pixel of mean |motion|

    void validate() const
    {
        if (!(k_x > 0.0f) || !(k_y > 0.0f))
            throw config_error("segmentation: scaling factors must be positive");
    }
};

// mean |difference| between consecutive frames; intensity input (1ch), or any
// channel count reduced by luma first
inline ImagePlane temporal_variation(const std::vector<ImagePlane>& frames)
{
    if (frames.size() < 2)
        throw data_error("temporal_variation: need at least 2 frames");
    std::vector<ImagePlane> gray;
    gray.reserve(frames.size());
    for (const ImagePlane& f : frames)
        gray.push_back(f.channels == 1 ? f : luma(f));
    for (const ImagePlane& f : gray)
        require_same_shape(f, gray[0], "temporal_variation");

    ImagePlane acc(gray[0].width, gray[0].height, 1, 0.0f);
    for (size_t i = 1; i < gray.size(); ++i)
        for (size_t j = 0; j < acc.data.size(); ++j)
            acc.data[j] += std::fabs(gray[i].data[j] - gray[i - 1].data[j]);
    float inv = 1.0f / float(gray.size() - 1);
    for (float& v : acc.data)
        v *= inv;
    return acc;
}

// Otsu's threshold over a 256-bin histogram of the plane's value range. The
// returned value is the upper edge of the best split bin, so "v > threshold"
// selects the high class. Ties break toward the lower threshold.
inline float otsu_threshold(const ImagePlane& plane)
{
    if (!plane_all_finite(plane))
        throw numeric_error("otsu_threshold: non-finite values");
    float lo = plane.data[0], hi = plane.data[0];
    for (float v : plane.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo))
        throw data_error("otsu_threshold: constant plane has no separation");

    constexpr int bins = 256;
    std::array<double, bins> hist{};
    const float scale = float(bins) / (hi - lo);
    for (float v : plane.data) {
        int b = std::min(bins - 1, int((v - lo) * scale));
        hist[size_t(b)] += 1.0;
    }
    double total = double(plane.data.size());
    double sum_all = 0.0;
    for (int b = 0; b < bins; ++b)
        sum_all += double(b) * hist[size_t(b)];

    int best_k = 0;
    double best_var = -1.0, w0 = 0.0, sum0 = 0.0;
    for (int k = 0; k + 1 < bins; ++k) {
        w0 += hist[size_t(k)];
        sum0 += double(k) * hist[size_t(k)];
        double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0)
            continue;
        double mu0 = sum0 / w0, mu1 = (sum_all - sum0) / w1;
        double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_k = k;
        }
    }
    return lo + float(best_k + 1) * (hi - lo) / float(bins);
}

struct OfflineSegmentation {
    ImagePlane variation; // mean inter-frame |difference|
    ImagePlane high_mask; // variation above the Otsu threshold (unfiltered)
    Rect rect;            // minimal box on the despeckled high mask
};

// offline analysis pass: variation map -> Otsu split -> despeckle -> minimal box
inline OfflineSegmentation offline_segment(const std::vector<ImagePlane>& frames)
{
    OfflineSegmentation out;
    out.variation = temporal_variation(frames);
    float thr = otsu_threshold(out.variation);
    out.high_mask = ImagePlane(out.variation.width, out.variation.height, 1, 0.0f);
    for (size_t i = 0; i < out.variation.data.size(); ++i)
        out.high_mask.data[i] = out.variation.data[i] > thr ? 1.0f : 0.0f;
    out.rect = mask_bbox(majority3x3(out.high_mask));
    return out;
}

// Grows a dynamic object's bounding rectangle by its mean absolute motion:
// w' = w + k_x*mean|mv_x|, h' = h + k_y*mean|mv_y|, growth centered, then
// clamped to the frame. The mean runs over the given stencil pixels; an empty
// stencil returns the rectangle unchanged.
inline Rect expand_rect(Rect rect, const MotionField& mv, const ImagePlane& stencil,
                        const SegmentationParams& params = {})
{
    params.validate();
    if (mv.channels != 2 || mv.width != stencil.width || mv.height != stencil.height)
        throw data_error("expand_rect: motion field must be 2-channel and aligned");
    if (rect.empty())
        return rect;
    double ax = 0.0, ay = 0.0;
    size_t n = 0;
    for (uint32_t y = 0; y < stencil.height; ++y)
        for (uint32_t x = 0; x < stencil.width; ++x)
            if (stencil.at(x, y) != 0.0f) {
                ax += std::fabs(mv.at(x, y, 0));
                ay += std::fabs(mv.at(x, y, 1));
                ++n;
            }
    if (n == 0)
        return rect;
    float wb = params.k_x * float(ax / double(n));
    float hb = params.k_y * float(ay / double(n));
    float x0 = float(rect.x) - 0.5f * wb, x1 = float(rect.x + rect.w) + 0.5f * wb;
    float y0 = float(rect.y) - 0.5f * hb, y1 = float(rect.y + rect.h) + 0.5f * hb;
    Rect out;
    out.x = std::max(0, int(std::floor(x0)));
    out.y = std::max(0, int(std::floor(y0)));
    out.w = std::min(int(stencil.width), int(std::ceil(x1))) - out.x;
    out.h = std::min(int(stencil.height), int(std::ceil(y1))) - out.y;
    out.w = std::max(out.w, 1);
    out.h = std::max(out.h, 1);
    return out;
}

// one expanded rectangle per connected stencil component, each grown by that
// component's own mean motion
inline std::vector<Rect> expanded_component_rects(const ImagePlane& stencil, const MotionField& mv,
                                                  const SegmentationParams& params = {})
{
    ComponentMap cm = connected_components(stencil);
    std::vector<Rect> rects;
    for (int l = 1; l <= cm.count; ++l) {
        ImagePlane comp(stencil.width, stencil.height, 1, 0.0f);
        for (uint32_t y = 0; y < stencil.height; ++y)
            for (uint32_t x = 0; x < stencil.width; ++x)
                if (cm.label(x, y) == l)
                    comp.at(x, y) = 1.0f;
        rects.push_back(expand_rect(mask_bbox(comp), mv, comp, params));
    }
    return rects;
}

inline RegionMasks make_masks(const ImagePlane& stencil, const std::vector<Rect>& rects)
{
    RegionMasks m;
    m.fg = stencil;
    m.near_be = ImagePlane(stencil.width, stencil.height, 1, 0.0f);
    m.far_be = ImagePlane(stencil.width, stencil.height, 1, 0.0f);
    for (uint32_t y = 0; y < stencil.height; ++y)
        for (uint32_t x = 0; x < stencil.width; ++x) {
            if (stencil.at(x, y) != 0.0f)
                continue;
            bool inside = false;
            for (const Rect& r : rects)
                inside = inside || r.contains(int(x), int(y));
            (inside ? m.near_be : m.far_be).at(x, y) = 1.0f;
        }
    return m;
}

inline RegionMasks make_masks(const ImagePlane& stencil, Rect rect)
{
    return make_masks(stencil, std::vector<Rect>{rect});
}

// the real-time path: stencil + motion -> exact three-way partition
inline RegionMasks segment_frame(const ImagePlane& stencil, const MotionField& mv,
                                 const SegmentationParams& params = {})
{
    return make_masks(stencil, expanded_component_rects(stencil, mv, params));
}

struct AxisFit {
    float slope = 0.0f;
    float pearson = 0.0f;
};

// least-squares slope through the origin plus the (centered) Pearson correlation
inline AxisFit fit_slope_through_origin(const std::vector<float>& xs, const std::vector<float>& ys)
{
    if (xs.size() != ys.size() || xs.size() < 2)
        throw data_error("fit_slope_through_origin: need >= 2 paired samples");
    double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
    const double n = double(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += double(xs[i]) * xs[i];
        sxy += double(xs[i]) * ys[i];
        sx += xs[i];
        sy += ys[i];
    }
    if (sxx == 0.0)
        throw numeric_error("fit_slope_through_origin: all-zero regressor");
    double mx = sx / n, my = sy / n, cxx = 0.0, cyy = 0.0, cxy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        cxx += (xs[i] - mx) * (xs[i] - mx);
        cyy += (ys[i] - my) * (ys[i] - my);
        cxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (cxx == 0.0 || cyy == 0.0)
        throw numeric_error("fit_slope_through_origin: degenerate regression");
    AxisFit f;
    f.slope = float(sxy / sxx);
    f.pearson = float(cxy / std::sqrt(cxx * cyy));
    return f;
}

// per-sequence data point for calibrating the expansion factors
struct SequenceSummary {
    float vx = 0.0f, vy = 0.0f; // mean |motion| inside the stencil
    float dw = 0.0f, dh = 0.0f; // offline rect size minus mean stencil box size
};

inline SequenceSummary summarize_sequence(const std::vector<ImagePlane>& colors,
                                          const std::vector<ImagePlane>& stencils,
                                          const std::vector<ImagePlane>& mvs)
{
    if (colors.size() != stencils.size() || colors.size() != mvs.size() || colors.size() < 2)
        throw data_error("summarize_sequence: misaligned sequence planes");
    OfflineSegmentation off = offline_segment(colors);

    double ax = 0.0, ay = 0.0, aw = 0.0, ah = 0.0;
    size_t n = 0, boxes = 0;
    // frame 0 carries the all-zero bootstrap motion; skip it
    for (size_t i = 1; i < stencils.size(); ++i) {
        for (uint32_t y = 0; y < stencils[i].height; ++y)
            for (uint32_t x = 0; x < stencils[i].width; ++x)
                if (stencils[i].at(x, y) != 0.0f) {
                    ax += std::fabs(mvs[i].at(x, y, 0));
                    ay += std::fabs(mvs[i].at(x, y, 1));
                    ++n;
                }
        Rect r = mask_bbox(stencils[i]);
        if (!r.empty()) {
            aw += r.w;
            ah += r.h;
            ++boxes;
        }
    }
    if (n == 0 || boxes == 0)
        throw data_error("summarize_sequence: no dynamic-object pixels");
    SequenceSummary s;
    s.vx = float(ax / double(n));
    s.vy = float(ay / double(n));
    s.dw = float(off.rect.w - aw / double(boxes));
    s.dh = float(off.rect.h - ah / double(boxes));
    return s;
}

struct Calibration {
    float k_x = 0.0f, k_y = 0.0f;
    float r_x = 0.0f, r_y = 0.0f;
    bool low_correlation = false; // |r| < 0.3 on either axis
};

inline Calibration calibrate_k(const std::vector<SequenceSummary>& sequences)
{
    std::vector<float> vx, vy, dw, dh;
    for (const SequenceSummary& s : sequences) {
        vx.push_back(s.vx);
        vy.push_back(s.vy);
        dw.push_back(s.dw);
        dh.push_back(s.dh);
    }
    AxisFit fx = fit_slope_through_origin(vx, dw);
    AxisFit fy = fit_slope_through_origin(vy, dh);
    Calibration c;
    c.k_x = fx.slope;
    c.k_y = fy.slope;
    c.r_x = fx.pearson;
    c.r_y = fy.pearson;
    c.low_correlation = std::fabs(c.r_x) < 0.3f || std::fabs(c.r_y) < 0.3f;
    return c;
}

} // namespace px

#endif
