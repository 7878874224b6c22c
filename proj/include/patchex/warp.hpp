#ifndef PATCHEX_WARP_HPP
#define PATCHEX_WARP_HPP

#include "gbuffer.hpp"
#include "mask_ops.hpp"

namespace px {

// hole_mask convention everywhere: 1 = valid, 0 = hole/invalid
struct WarpResult {
    ImagePlane color;
    ImagePlane hole_mask;
};

// bilinear fetch; false when the sample box leaves the source
inline bool bilinear_sample(const ImagePlane& src, float fx, float fy, float* out)
{
    if (!(fx >= 0.0f && fx <= float(src.width - 1) && fy >= 0.0f && fy <= float(src.height - 1)))
        return false;
    uint32_t x0 = uint32_t(fx), y0 = uint32_t(fy);
    uint32_t x1 = std::min(x0 + 1, src.width - 1), y1 = std::min(y0 + 1, src.height - 1);
    float tx = fx - float(x0), ty = fy - float(y0);
    for (uint32_t c = 0; c < src.channels; ++c) {
        float a = src.at(x0, y0, c), b = src.at(x1, y0, c);
        float d = src.at(x0, y1, c), e = src.at(x1, y1, c);
        float top = a + (b - a) * tx;
        float bot = d + (e - d) * tx;
        out[c] = top + (bot - top) * ty;
    }
    return true;
}

inline void clamped_bilinear_sample(const ImagePlane& src, float fx, float fy, float* out)
{
    fx = std::clamp(fx, 0.0f, float(src.width - 1));
    fy = std::clamp(fy, 0.0f, float(src.height - 1));
    bilinear_sample(src, fx, fy, out);
}

// Backward warp: target pixel p samples the source at p - scale*mv(p). The
// motion field lives on the target frame. scale=0.5 realizes the half step.
inline WarpResult backward_warp(const ImagePlane& src, const MotionField& mv, float scale,
                                unsigned threads = 1)
{
    if (mv.channels != 2 || mv.width != src.width || mv.height != src.height)
        throw data_error("backward_warp: motion field must be 2-channel and aligned");
    WarpResult out;
    out.color = ImagePlane(src.width, src.height, src.channels, 0.0f);
    out.hole_mask = ImagePlane(src.width, src.height, 1, 0.0f);
    parallel_for(src.height, threads, [&](size_t y0, size_t y1) {
        std::vector<float> px_out(src.channels);
        for (size_t y = y0; y < y1; ++y)
            for (uint32_t x = 0; x < src.width; ++x) {
                float fx = float(x) - scale * mv.at(x, uint32_t(y), 0);
                float fy = float(y) - scale * mv.at(x, uint32_t(y), 1);
                if (bilinear_sample(src, fx, fy, px_out.data())) {
                    for (uint32_t c = 0; c < src.channels; ++c)
                        out.color.at(x, uint32_t(y), c) = px_out[c];
                    out.hole_mask.at(x, uint32_t(y)) = 1.0f;
                }
            }
    });
    return out;
}

// Same sampling with coordinates clamped to the frame: no holes. Used as the
// plain warp-only baseline so it is not penalized by black borders.
inline ImagePlane backward_warp_clamped(const ImagePlane& src, const MotionField& mv, float scale,
                                        unsigned threads = 1)
{
    if (mv.channels != 2 || mv.width != src.width || mv.height != src.height)
        throw data_error("backward_warp_clamped: motion field must be 2-channel and aligned");
    ImagePlane out(src.width, src.height, src.channels, 0.0f);
    parallel_for(src.height, threads, [&](size_t y0, size_t y1) {
        std::vector<float> px_out(src.channels);
        for (size_t y = y0; y < y1; ++y)
            for (uint32_t x = 0; x < src.width; ++x) {
                float fx = float(x) - scale * mv.at(x, uint32_t(y), 0);
                float fy = float(y) - scale * mv.at(x, uint32_t(y), 1);
                clamped_bilinear_sample(src, fx, fy, px_out.data());
                for (uint32_t c = 0; c < src.channels; ++c)
                    out.at(x, uint32_t(y), c) = px_out[c];
            }
    });
    return out;
}

// Nearest-neighbor backward warp for binary/categorical planes; keeps masks binary.
inline WarpResult backward_warp_nearest(const ImagePlane& src, const MotionField& mv, float scale)
{
    if (mv.channels != 2 || mv.width != src.width || mv.height != src.height)
        throw data_error("backward_warp_nearest: motion field must be 2-channel and aligned");
    WarpResult out;
    out.color = ImagePlane(src.width, src.height, src.channels, 0.0f);
    out.hole_mask = ImagePlane(src.width, src.height, 1, 0.0f);
    for (uint32_t y = 0; y < src.height; ++y)
        for (uint32_t x = 0; x < src.width; ++x) {
            float fx = float(x) - scale * mv.at(x, y, 0);
            float fy = float(y) - scale * mv.at(x, y, 1);
            int qx = int(std::lround(fx)), qy = int(std::lround(fy));
            if (qx < 0 || qy < 0 || qx >= int(src.width) || qy >= int(src.height))
                continue;
            for (uint32_t c = 0; c < src.channels; ++c)
                out.color.at(x, y, c) = src.at(uint32_t(qx), uint32_t(qy), c);
            out.hole_mask.at(x, y) = 1.0f;
        }
    return out;
}

// Forward warp: splat each source pixel to round(p + scale*mv(p)); collisions
// keep the nearer surface. The motion field lives on the source frame here.
inline WarpResult forward_warp(const ImagePlane& src, const MotionField& mv, const ImagePlane& depth,
                               float scale)
{
    if (mv.channels != 2 || mv.width != src.width || mv.height != src.height)
        throw data_error("forward_warp: motion field must be 2-channel and aligned");
    if (depth.channels != 1 || depth.width != src.width || depth.height != src.height)
        throw data_error("forward_warp: depth plane must be 1-channel and aligned");
    WarpResult out;
    out.color = ImagePlane(src.width, src.height, src.channels, 0.0f);
    out.hole_mask = ImagePlane(src.width, src.height, 1, 0.0f);
    ImagePlane zbuf(src.width, src.height, 1, std::numeric_limits<float>::max());
    for (uint32_t y = 0; y < src.height; ++y)
        for (uint32_t x = 0; x < src.width; ++x) {
            float tx = float(x) + scale * mv.at(x, y, 0);
            float ty = float(y) + scale * mv.at(x, y, 1);
            int qx = int(std::lround(tx)), qy = int(std::lround(ty));
            if (qx < 0 || qy < 0 || qx >= int(src.width) || qy >= int(src.height))
                continue;
            if (depth.at(x, y) < zbuf.at(uint32_t(qx), uint32_t(qy))) {
                zbuf.at(uint32_t(qx), uint32_t(qy)) = depth.at(x, y);
                for (uint32_t c = 0; c < src.channels; ++c)
                    out.color.at(uint32_t(qx), uint32_t(qy), c) = src.at(x, y, c);
                out.hole_mask.at(uint32_t(qx), uint32_t(qy)) = 1.0f;
            }
        }
    return out;
}

// Occlusion-aware motion repair. A pixel has no valid backward source when its
// sample leaves the frame, or when the sample lands inside the estimated
// previous-frame footprint of a strictly nearer stencil component (the
// classic ghost band behind a mover). Such pixels take a neighbor's motion by
// iterative dilation; a donor is accepted only if its motion produces an
// in-bounds sample outside every nearer stale footprint, preferring the donor
// with the greatest depth among acceptable ones. Non-hole pixels are never
// modified.
inline MotionField occlusion_motion_vectors(const MotionField& mv, const ImagePlane& depth,
                                            const ImagePlane& stencil, float scale = 1.0f)
{
    if (mv.channels != 2)
        throw data_error("occlusion_motion_vectors: motion field must be 2-channel");
    if (!depth.same_shape(ImagePlane(mv.width, mv.height, 1)) ||
        !stencil.same_shape(ImagePlane(mv.width, mv.height, 1)))
        throw data_error("occlusion_motion_vectors: planes must be aligned 1-channel");

    const int W = int(mv.width), H = int(mv.height);
    ComponentMap cm = connected_components(stencil);

    struct Comp {
        float mvx = 0, mvy = 0;
        float depth = std::numeric_limits<float>::max();
        size_t count = 0;
    };
    std::vector<Comp> comps(size_t(cm.count) + 1);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            int l = cm.label(uint32_t(x), uint32_t(y));
            if (l == 0)
                continue;
            Comp& c = comps[size_t(l)];
            c.mvx += mv.at(uint32_t(x), uint32_t(y), 0);
            c.mvy += mv.at(uint32_t(x), uint32_t(y), 1);
            c.depth = std::min(c.depth, depth.at(uint32_t(x), uint32_t(y)));
            ++c.count;
        }
    for (Comp& c : comps)
        if (c.count) {
            c.mvx /= float(c.count);
            c.mvy /= float(c.count);
        }

    // sample (fx,fy) lies in component l's previous-frame footprint when the
    // component, translated back by its own mean motion, covers it
    auto in_footprint = [&](int l, float fx, float fy) {
        const Comp& c = comps[size_t(l)];
        int sx = int(std::lround(fx + scale * c.mvx));
        int sy = int(std::lround(fy + scale * c.mvy));
        if (sx < 0 || sy < 0 || sx >= W || sy >= H)
            return false;
        return cm.label(uint32_t(sx), uint32_t(sy)) == l;
    };
    auto sample_ok = [&](int x, int y, float mx, float my) {
        float fx = float(x) - scale * mx, fy = float(y) - scale * my;
        if (!(fx >= 0.0f && fx <= float(W - 1) && fy >= 0.0f && fy <= float(H - 1)))
            return false;
        float dp = depth.at(uint32_t(x), uint32_t(y));
        int own = cm.label(uint32_t(x), uint32_t(y));
        for (int l = 1; l <= cm.count; ++l)
            if (l != own && comps[size_t(l)].depth < dp * 0.99f && in_footprint(l, fx, fy))
                return false;
        return true;
    };

    std::vector<uint8_t> hole(size_t(W) * H, 0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (!sample_ok(x, y, mv.at(uint32_t(x), uint32_t(y), 0), mv.at(uint32_t(x), uint32_t(y), 1)))
                hole[size_t(y) * W + x] = 1;

    MotionField out = mv;
    std::vector<uint8_t> valid(size_t(W) * H);
    for (size_t i = 0; i < valid.size(); ++i)
        valid[i] = !hole[i];

    static const int nb[8][2] = {{0, -1}, {1, -1}, {1, 0},  {1, 1},
                                 {0, 1},  {-1, 1}, {-1, 0}, {-1, -1}};
    // synchronous rings: each pass fills holes from the previous pass's valid set
    for (int phase = 0; phase < 2; ++phase) {
        bool progress = true;
        int guard = W + H + 2;
        while (progress && guard-- > 0) {
            progress = false;
            std::vector<std::pair<size_t, std::pair<float, float>>> fills;
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    size_t i = size_t(y) * W + x;
                    if (valid[i])
                        continue;
                    float best_depth = -1.0f;
                    float bx = 0, by = 0;
                    bool found = false;
                    for (auto& d : nb) {
                        int nx = x + d[0], ny = y + d[1];
                        if (nx < 0 || ny < 0 || nx >= W || ny >= H)
                            continue;
                        size_t ni = size_t(ny) * W + nx;
                        if (!valid[ni])
                            continue;
                        float mx = out.at(uint32_t(nx), uint32_t(ny), 0);
                        float my = out.at(uint32_t(nx), uint32_t(ny), 1);
                        if (phase == 0 && !sample_ok(x, y, mx, my))
                            continue;
                        float nd = depth.at(uint32_t(nx), uint32_t(ny));
                        if (nd > best_depth) {
                            best_depth = nd;
                            bx = mx;
                            by = my;
                            found = true;
                        }
                    }
                    if (found)
                        fills.push_back({i, {bx, by}});
                }
            for (auto& f : fills) {
                out.data[f.first * 2] = f.second.first;
                out.data[f.first * 2 + 1] = f.second.second;
                valid[f.first] = 1;
                progress = true;
            }
        }
    }
    return out;
}

// G-buffer-guided warp. Each target pixel gathers a k x k candidate window
// around its backward-warped position in the source and blends candidates with
// a joint Gaussian weight over distance, normal, depth and albedo agreement.
struct GuidedWarpParams {
    int k = 7;
    float sigma_s = 2.0f;       // px; <= 0 switches to nearest-sample mode
    float sigma_n = 0.3f;
    float sigma_d_rel = 0.05f;  // of the target depth range
    float sigma_a = 0.2f;
    float w_min = 1e-4f;
};

inline WarpResult gbuffer_guided_warp(const ImagePlane& src_color, const GBufferSet& src_g,
                                      const TargetGuide& tgt, float scale,
                                      const GuidedWarpParams& params = {}, unsigned threads = 1)
{
    const ImagePlane& mv = *tgt.motion_vector;
    if (mv.channels != 2 || mv.width != src_color.width || mv.height != src_color.height)
        throw data_error("gbuffer_guided_warp: motion field must be 2-channel and aligned");
    if (params.k < 3 || params.k % 2 == 0)
        throw config_error("gbuffer_guided_warp: window size must be odd and >= 3");

    const uint32_t W = src_color.width, H = src_color.height, C = src_color.channels;
    WarpResult out;
    out.color = ImagePlane(W, H, C, 0.0f);
    out.hole_mask = ImagePlane(W, H, 1, 0.0f);

    if (params.sigma_s <= 0.0f) {
        // nearest-sample limit
        parallel_for(H, threads, [&](size_t y0, size_t y1) {
            for (size_t y = y0; y < y1; ++y)
                for (uint32_t x = 0; x < W; ++x) {
                    float cx = float(x) - scale * mv.at(x, uint32_t(y), 0);
                    float cy = float(y) - scale * mv.at(x, uint32_t(y), 1);
                    int qx = int(std::lround(cx)), qy = int(std::lround(cy));
                    if (qx < 0 || qy < 0 || qx >= int(W) || qy >= int(H))
                        continue;
                    for (uint32_t c = 0; c < C; ++c)
                        out.color.at(x, uint32_t(y), c) = src_color.at(uint32_t(qx), uint32_t(qy), c);
                    out.hole_mask.at(x, uint32_t(y)) = 1.0f;
                }
        });
        return out;
    }

    float dmin = std::numeric_limits<float>::max(), dmax = -dmin;
    for (float v : tgt.depth->data) {
        dmin = std::min(dmin, v);
        dmax = std::max(dmax, v);
    }
    const float sigma_d = params.sigma_d_rel * std::max(dmax - dmin, 1e-3f);
    const float inv2ss = 0.5f / (params.sigma_s * params.sigma_s);
    const float inv2sn = 0.5f / (params.sigma_n * params.sigma_n);
    const float inv2sd = 0.5f / (sigma_d * sigma_d);
    const float inv2sa = 0.5f / (params.sigma_a * params.sigma_a);
    const int r = params.k / 2;

    parallel_for(H, threads, [&](size_t y0, size_t y1) {
        std::vector<float> acc(C);
        for (size_t yy = y0; yy < y1; ++yy) {
            uint32_t y = uint32_t(yy);
            for (uint32_t x = 0; x < W; ++x) {
                float cx = float(x) - scale * mv.at(x, y, 0);
                float cy = float(y) - scale * mv.at(x, y, 1);
                int ox = int(std::lround(cx)), oy = int(std::lround(cy));

                float tn0 = tgt.world_normal->at(x, y, 0), tn1 = tgt.world_normal->at(x, y, 1),
                      tn2 = tgt.world_normal->at(x, y, 2);
                float td = tgt.depth->at(x, y);
                float ta0 = tgt.base_color->at(x, y, 0), ta1 = tgt.base_color->at(x, y, 1),
                      ta2 = tgt.base_color->at(x, y, 2);

                std::fill(acc.begin(), acc.end(), 0.0f);
                float wsum = 0.0f;
                for (int dy = -r; dy <= r; ++dy) {
                    int qy = oy + dy;
                    if (qy < 0 || qy >= int(H))
                        continue;
                    for (int dx = -r; dx <= r; ++dx) {
                        int qx = ox + dx;
                        if (qx < 0 || qx >= int(W))
                            continue;
                        float ex = float(qx) - cx, ey = float(qy) - cy;
                        float e = (ex * ex + ey * ey) * inv2ss;
                        float n0 = src_g.world_normal.at(uint32_t(qx), uint32_t(qy), 0) - tn0;
                        float n1 = src_g.world_normal.at(uint32_t(qx), uint32_t(qy), 1) - tn1;
                        float n2 = src_g.world_normal.at(uint32_t(qx), uint32_t(qy), 2) - tn2;
                        e += (n0 * n0 + n1 * n1 + n2 * n2) * inv2sn;
                        float dd = td - src_g.depth.at(uint32_t(qx), uint32_t(qy));
                        e += dd * dd * inv2sd;
                        float a0 = src_g.base_color.at(uint32_t(qx), uint32_t(qy), 0) - ta0;
                        float a1 = src_g.base_color.at(uint32_t(qx), uint32_t(qy), 1) - ta1;
                        float a2 = src_g.base_color.at(uint32_t(qx), uint32_t(qy), 2) - ta2;
                        e += (a0 * a0 + a1 * a1 + a2 * a2) * inv2sa;
                        float w = std::exp(-e);
                        wsum += w;
                        for (uint32_t c = 0; c < C; ++c)
                            acc[c] += w * src_color.at(uint32_t(qx), uint32_t(qy), c);
                    }
                }
                if (wsum >= params.w_min) {
                    for (uint32_t c = 0; c < C; ++c)
                        out.color.at(x, y, c) = acc[c] / wsum;
                    out.hole_mask.at(x, y) = 1.0f;
                }
            }
        }
    });
    return out;
}

// plain backward warps of source depth and normal, used for mismatch detection
struct WarpedAttrs {
    WarpResult depth;
    WarpResult normal;
};

inline WarpedAttrs warp_attributes(const GBufferSet& src_g, const MotionField& mv, float scale,
                                   unsigned threads = 1)
{
    WarpedAttrs a;
    a.depth = backward_warp(src_g.depth, mv, scale, threads);
    a.normal = backward_warp(src_g.world_normal, mv, scale, threads);
    return a;
}

struct InvalidParams {
    float tau_d = 0.02f; // relative depth mismatch
    float tau_n = 0.9f;  // minimum normal agreement (dot product)
};

// 1 = consistent, 0 = invalid (unfilled, depth mismatch, or normal mismatch)
inline ImagePlane detect_invalid(const WarpedAttrs& warped, const TargetGuide& tgt,
                                 const InvalidParams& params = {})
{
    const ImagePlane& td = *tgt.depth;
    ImagePlane out(td.width, td.height, 1, 0.0f);
    for (uint32_t y = 0; y < td.height; ++y)
        for (uint32_t x = 0; x < td.width; ++x) {
            if (warped.depth.hole_mask.at(x, y) == 0.0f || warped.normal.hole_mask.at(x, y) == 0.0f)
                continue;
            float dw = warped.depth.color.at(x, y);
            float dt = td.at(x, y);
            if (std::fabs(dw - dt) > params.tau_d * std::max(dt, 1e-6f))
                continue;
            float nx = warped.normal.color.at(x, y, 0), ny = warped.normal.color.at(x, y, 1),
                  nz = warped.normal.color.at(x, y, 2);
            float len = std::sqrt(nx * nx + ny * ny + nz * nz);
            if (len < 1e-6f)
                continue;
            float dot = (nx * tgt.world_normal->at(x, y, 0) + ny * tgt.world_normal->at(x, y, 1) +
                         nz * tgt.world_normal->at(x, y, 2)) /
                        len;
            if (dot < params.tau_n)
                continue;
            out.at(x, y) = 1.0f;
        }
    return out;
}

} // namespace px

#endif
