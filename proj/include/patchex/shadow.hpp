#ifndef PATCHEX_SHADOW_HPP
#define PATCHEX_SHADOW_HPP

#include "blend.hpp"
#include "warp.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/video/tracking.hpp>

#include <mutex>

namespace px {

// Dense optical-flow settings forwarded to cv::calcOpticalFlowFarneback.
struct FarnebackParams {
    int levels = 3;
    double pyr_scale = 0.5;
    int winsize = 15;
    int iterations = 3;
    int poly_n = 5;
    double poly_sigma = 1.1;
};

// Dense 2-channel displacement field between the shadow masks of two
// consecutive frames (x displacement in channel 0, y in channel 1). Binary
// masks are Gaussian-smoothed (sigma 1) before estimation so the polynomial
// expansion has gradients to lock onto; a pair with an empty mask has nothing
// to track and yields zero flow. Output values are always finite.
inline ImagePlane farneback_flow(const ImagePlane& mask_prev, const ImagePlane& mask_curr,
                                 const FarnebackParams& params = {})
{
    if (mask_prev.channels != 1 || mask_curr.channels != 1 ||
        mask_prev.width != mask_curr.width || mask_prev.height != mask_curr.height)
        throw data_error("farneback_flow: masks must be aligned 1-channel planes");

    // outputs must be reproducible regardless of how many worker threads the
    // caller runs, so OpenCV's own pool is pinned to a single thread once
    static std::once_flag pin;
    std::call_once(pin, [] { cv::setNumThreads(1); });

    ImagePlane flow(mask_prev.width, mask_prev.height, 2, 0.0f);

    auto empty = [](const ImagePlane& m) {
        for (float v : m.data)
            if (v != 0.0f)
                return false;
        return true;
    };
    if (empty(mask_prev) || empty(mask_curr))
        return flow;

    auto to_gray = [](const ImagePlane& m) {
        cv::Mat f(int(m.height), int(m.width), CV_32F);
        for (uint32_t y = 0; y < m.height; ++y)
            for (uint32_t x = 0; x < m.width; ++x)
                f.at<float>(int(y), int(x)) = m.at(x, y);
        cv::GaussianBlur(f, f, cv::Size(0, 0), 1.0);
        cv::Mat g;
        f.convertTo(g, CV_8U, 255.0);
        return g;
    };
    cv::Mat prev = to_gray(mask_prev), curr = to_gray(mask_curr);
    cv::Mat cvflow;
    cv::calcOpticalFlowFarneback(prev, curr, cvflow, params.pyr_scale, params.levels,
                                 params.winsize, params.iterations, params.poly_n,
                                 params.poly_sigma, 0);
    for (uint32_t y = 0; y < flow.height; ++y)
        for (uint32_t x = 0; x < flow.width; ++x) {
            const cv::Point2f& v = cvflow.at<cv::Point2f>(int(y), int(x));
            flow.at(x, y, 0) = std::isfinite(v.x) ? v.x : 0.0f;
            flow.at(x, y, 1) = std::isfinite(v.y) ? v.y : 0.0f;
        }
    return flow;
}

// Push the mask forward along the flow by `scale` of a frame step. The
// displacement field is rebuilt on the destination frame: each source pixel
// splats its scaled flow to its landing spot (collisions keep the donor with
// the larger mask value so shadow motion beats the static background), splat
// holes take their neighbors' motion by synchronous ring dilation, and the
// mask is then gathered backward through the rebuilt field with zero outside
// the frame. Output values stay in [0, 1]; uniform flow becomes an exact
// shift, so mass is conserved up to frame-edge clipping.
inline ImagePlane extrapolate_shadow(const ImagePlane& mask_t, const ImagePlane& flow,
                                     float scale = 0.5f)
{
    if (mask_t.channels != 1)
        throw data_error("extrapolate_shadow: mask must be 1-channel");
    if (flow.channels != 2 || flow.width != mask_t.width || flow.height != mask_t.height)
        throw data_error("extrapolate_shadow: flow must be 2-channel and aligned");
    const int W = int(mask_t.width), H = int(mask_t.height);

    ImagePlane dest_mv(mask_t.width, mask_t.height, 2, 0.0f);
    std::vector<uint8_t> filled(size_t(W) * H, 0);
    std::vector<float> donor(size_t(W) * H, -1.0f);
    size_t filled_count = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            float mx = scale * flow.at(uint32_t(x), uint32_t(y), 0);
            float my = scale * flow.at(uint32_t(x), uint32_t(y), 1);
            int qx = int(std::lround(float(x) + mx));
            int qy = int(std::lround(float(y) + my));
            if (qx < 0 || qy < 0 || qx >= W || qy >= H)
                continue;
            size_t i = size_t(qy) * W + qx;
            if (mask_t.at(uint32_t(x), uint32_t(y)) > donor[i]) {
                donor[i] = mask_t.at(uint32_t(x), uint32_t(y));
                dest_mv.at(uint32_t(qx), uint32_t(qy), 0) = mx;
                dest_mv.at(uint32_t(qx), uint32_t(qy), 1) = my;
                if (!filled[i]) {
                    filled[i] = 1;
                    ++filled_count;
                }
            }
        }

    // synchronous rings: each pass fills splat holes with the mean motion of
    // neighbors settled in earlier passes
    static const int nb[8][2] = {{0, -1}, {1, -1}, {1, 0},  {1, 1},
                                 {0, 1},  {-1, 1}, {-1, 0}, {-1, -1}};
    if (filled_count > 0) {
        bool progress = true;
        int guard = W + H + 2;
        while (filled_count < size_t(W) * H && progress && guard-- > 0) {
            progress = false;
            std::vector<std::pair<size_t, std::pair<float, float>>> fills;
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    size_t i = size_t(y) * W + x;
                    if (filled[i])
                        continue;
                    float sx = 0, sy = 0;
                    int n = 0;
                    for (auto& d : nb) {
                        int ax = x + d[0], ay = y + d[1];
                        if (ax < 0 || ay < 0 || ax >= W || ay >= H)
                            continue;
                        if (!filled[size_t(ay) * W + ax])
                            continue;
                        sx += dest_mv.at(uint32_t(ax), uint32_t(ay), 0);
                        sy += dest_mv.at(uint32_t(ax), uint32_t(ay), 1);
                        ++n;
                    }
                    if (n)
                        fills.push_back({i, {sx / float(n), sy / float(n)}});
                }
            for (auto& f : fills) {
                dest_mv.data[f.first * 2] = f.second.first;
                dest_mv.data[f.first * 2 + 1] = f.second.second;
                filled[f.first] = 1;
                ++filled_count;
                progress = true;
            }
        }
    }

    ImagePlane out(mask_t.width, mask_t.height, 1, 0.0f);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            float sx = float(x) - dest_mv.at(uint32_t(x), uint32_t(y), 0);
            float sy = float(y) - dest_mv.at(uint32_t(x), uint32_t(y), 1);
            float v = 0.0f;
            bilinear_sample(mask_t, sx, sy, &v); // out-of-frame reads stay 0
            out.at(uint32_t(x), uint32_t(y)) = std::clamp(v, 0.0f, 1.0f);
        }
    return out;
}

} // namespace px

#endif
