#ifndef PATCHEX_SCENE_HPP
#define PATCHEX_SCENE_HPP

#include <array>
#include <cmath>
#include <optional>

#include "gbuffer.hpp"

namespace px {

// Deterministic 2.5D layered test scene renderer. Flat textured layers and
// moving textured sprites at constant depths, a directional light that casts
// sprite silhouette shadows onto whatever surface lies behind the caster, and
// a camera that pans across the world. Everything is a pure function of the
// spec and the timestamp, so re-rendering is bit-identical.

// two-octave value noise over an integer lattice, range [0,1)
inline float value_noise(uint64_t seed, float x, float y)
{
    float acc = 0.0f, amp = 0.6667f, freq = 1.0f;
    for (int oct = 0; oct < 2; ++oct) {
        float fx = x * freq, fy = y * freq;
        int64_t ix = int64_t(std::floor(fx)), iy = int64_t(std::floor(fy));
        float tx = fx - float(ix), ty = fy - float(iy);
        uint64_t s = seed + uint64_t(oct) * 0x9e3779b97f4a7c15ull;
        float v00 = hash01(s, ix, iy), v10 = hash01(s, ix + 1, iy);
        float v01 = hash01(s, ix, iy + 1), v11 = hash01(s, ix + 1, iy + 1);
        float top = v00 + (v10 - v00) * tx;
        float bot = v01 + (v11 - v01) * tx;
        acc += amp * (top + (bot - top) * ty);
        amp *= 0.5f;
        freq *= 2.0f;
    }
    return acc;
}

struct Material {
    uint64_t texture_seed = 1;
    float feature_px = 12.0f; // albedo noise feature size
    float metallic = 0.1f;
    float specular = 0.5f;
    float roughness = 0.7f;
};

struct Layer {
    float depth = 40.0f;
    Material mat;
    std::array<float, 3> normal = {0.0f, 0.0f, 1.0f};
    bool infinite = true;           // infinite plane, else a world-space rect
    float x0 = 0, y0 = 0, w = 0, h = 0;
};

enum class SpriteShape { rect, disc };

struct Sprite {
    SpriteShape shape = SpriteShape::disc;
    float w = 24.0f, h = 24.0f; // silhouette extent around the center
    float depth = 5.0f;
    Material mat;
    std::array<float, 3> normal = {0.0f, 0.0f, 1.0f};
    std::vector<float> traj_x{0.0f}; // polynomial coefficients, position(t) = sum c_k t^k
    std::vector<float> traj_y{0.0f};
};

struct LightSpec {
    float angle_deg = 45.0f;
    float slope_scale = 1.41421356f; // shadow offset per unit depth gap = slope*(cos,sin)
    float attenuation = 0.5f;        // shadowed color is scaled by (1 - attenuation)
    float elevation = 1.5f;          // z component of the shading direction
};

struct SceneSpec {
    uint32_t width = 320, height = 180;
    uint32_t frame_count = 8; // integer frames; emitted sequence has 2*frame_count-1 entries
    uint64_t seed = 1;
    float pan_x = 0.0f, pan_y = 0.0f; // camera pan per frame unit
    float ambient = 0.35f, diffuse = 0.65f;
    LightSpec light;
    std::vector<Layer> layers;
    std::vector<Sprite> sprites;
};

struct FrameRecord {
    double t = 0.0;
    ImagePlane color;
    GBufferSet g;
};

namespace detail {

inline float poly_eval(const std::vector<float>& c, double t)
{
    double acc = 0.0, p = 1.0;
    for (float k : c) {
        acc += double(k) * p;
        p *= t;
    }
    return float(acc);
}

inline std::array<float, 3> normalized(std::array<float, 3> n)
{
    float len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    if (len <= 0.0f)
        return {0.0f, 0.0f, 1.0f};
    return {n[0] / len, n[1] / len, n[2] / len};
}

struct SurfaceHit {
    float depth;
    const Material* mat;
    std::array<float, 3> normal;
    bool is_sprite;
    float local_x, local_y; // texture coordinates of the hit surface
    uint64_t surface_id;
};

inline bool sprite_covers(const Sprite& s, float cx, float cy, float px_, float py_)
{
    float dx = px_ - cx, dy = py_ - cy;
    if (s.shape == SpriteShape::rect)
        return std::fabs(dx) <= s.w * 0.5f && std::fabs(dy) <= s.h * 0.5f;
    float rx = s.w * 0.5f, ry = s.h * 0.5f;
    float ex = dx / rx, ey = dy / ry;
    return ex * ex + ey * ey <= 1.0f;
}

} // namespace detail

inline void validate_scene(const SceneSpec& spec)
{
    if (spec.width < 32 || spec.height < 32)
        throw config_error("scene: resolution below 32x32");
    if (spec.frame_count < 3)
        throw config_error("scene: frame_count must be >= 3");
    bool any_infinite = false;
    for (const Layer& l : spec.layers)
        any_infinite = any_infinite || l.infinite;
    if (!any_infinite)
        throw config_error("scene: an infinite base layer is required");
    double t_max = double(spec.frame_count - 1);
    for (size_t i = 0; i < spec.sprites.size(); ++i) {
        const Sprite& s = spec.sprites[i];
        if (s.depth <= 0.0f || s.w <= 0.0f || s.h <= 0.0f)
            throw config_error("scene: sprite depth and size must be positive");
        for (double t = 0.0; t <= t_max + 1e-9; t += 0.5) {
            float cx = detail::poly_eval(s.traj_x, t) - spec.pan_x * float(t);
            float cy = detail::poly_eval(s.traj_y, t) - spec.pan_y * float(t);
            if (cx < -2.0f * float(spec.width) || cx > 3.0f * float(spec.width) ||
                cy < -2.0f * float(spec.height) || cy > 3.0f * float(spec.height))
                throw data_error("scene: sprite trajectory leaves the working margin");
        }
    }
    for (const Layer& l : spec.layers)
        if (l.depth <= 0.0f)
            throw config_error("scene: layer depth must be positive");
}

// Renders color + G-buffers at t = 0, 0.5, 1, ... frame_count-1. Integer steps
// are the "rendered" inputs of the extrapolation task; half steps serve as
// ground truth.
inline std::vector<FrameRecord> render_sequence(const SceneSpec& spec, unsigned threads = 1)
{
    validate_scene(spec);

    const uint32_t W = spec.width, H = spec.height;
    const float ang = spec.light.angle_deg * 3.14159265358979323846f / 180.0f;
    const float lx = std::cos(ang), ly = std::sin(ang);
    const std::array<float, 3> shade_dir =
        detail::normalized({lx, ly, spec.light.elevation});

    std::vector<std::array<float, 3>> sprite_normals, layer_normals;
    for (const Sprite& s : spec.sprites)
        sprite_normals.push_back(detail::normalized(s.normal));
    for (const Layer& l : spec.layers)
        layer_normals.push_back(detail::normalized(l.normal));

    const size_t emitted = size_t(spec.frame_count) * 2 - 1;
    std::vector<FrameRecord> out(emitted);

    // albedo in [0.2, 0.95] keeps every demodulation denominator comfortably
    // above the divide guard
    auto albedo = [](const Material& m, float u, float v, uint32_t ch) {
        return 0.2f + 0.75f * value_noise(m.texture_seed + 0x517cc1b7ull * (ch + 1),
                                          u / m.feature_px, v / m.feature_px);
    };
    // per-surface light field rides with the surface so that exact-motion
    // warping reproduces it; range [0.75, 1.25]
    auto light_field = [&spec](uint64_t surface_id, float u, float v) {
        return 0.75f + 0.5f * value_noise(splitmix64(spec.seed ^ (surface_id * 0x9e3779b97f4a7c15ull)), u, v);
    };

    for (size_t fi = 0; fi < emitted; ++fi) {
        const double t = 0.5 * double(fi);
        const double t_prev = t - 1.0;
        FrameRecord& fr = out[fi];
        fr.t = t;
        fr.color = ImagePlane(W, H, 3);
        fr.g.base_color = ImagePlane(W, H, 3);
        fr.g.metallic = ImagePlane(W, H, 1);
        fr.g.specular = ImagePlane(W, H, 1);
        fr.g.roughness = ImagePlane(W, H, 1);
        fr.g.depth = ImagePlane(W, H, 1);
        fr.g.world_normal = ImagePlane(W, H, 3);
        fr.g.stencil = ImagePlane(W, H, 1);
        fr.g.motion_vector = ImagePlane(W, H, 2);
        fr.g.shadow_mask = ImagePlane(W, H, 1);
        fr.g.nov = ImagePlane(W, H, 1);

        // screen-space sprite centers now and one frame unit ago
        std::vector<std::array<float, 2>> centers(spec.sprites.size()), centers_prev(spec.sprites.size());
        for (size_t si = 0; si < spec.sprites.size(); ++si) {
            const Sprite& s = spec.sprites[si];
            centers[si] = {detail::poly_eval(s.traj_x, t) - spec.pan_x * float(t),
                           detail::poly_eval(s.traj_y, t) - spec.pan_y * float(t)};
            centers_prev[si] = {detail::poly_eval(s.traj_x, t_prev) - spec.pan_x * float(t_prev),
                                detail::poly_eval(s.traj_y, t_prev) - spec.pan_y * float(t_prev)};
        }

        parallel_for(H, threads, [&](size_t y0, size_t y1) {
            for (size_t yy = y0; yy < y1; ++yy) {
                uint32_t y = uint32_t(yy);
                for (uint32_t x = 0; x < W; ++x) {
                    const float sx = float(x), sy = float(y);
                    const float wx = sx + spec.pan_x * float(t);
                    const float wy = sy + spec.pan_y * float(t);

                    // nearest covering surface wins
                    detail::SurfaceHit hit{};
                    hit.depth = std::numeric_limits<float>::max();
                    int hit_sprite = -1;
                    for (size_t si = 0; si < spec.sprites.size(); ++si) {
                        const Sprite& s = spec.sprites[si];
                        if (s.depth < hit.depth &&
                            detail::sprite_covers(s, centers[si][0], centers[si][1], sx, sy)) {
                            hit.depth = s.depth;
                            hit.mat = &s.mat;
                            hit.normal = sprite_normals[si];
                            hit.is_sprite = true;
                            hit.local_x = sx - centers[si][0];
                            hit.local_y = sy - centers[si][1];
                            hit.surface_id = 0x5000 + si;
                            hit_sprite = int(si);
                        }
                    }
                    for (size_t li = 0; li < spec.layers.size(); ++li) {
                        const Layer& l = spec.layers[li];
                        if (l.depth >= hit.depth)
                            continue;
                        if (!l.infinite &&
                            !(wx >= l.x0 && wx <= l.x0 + l.w && wy >= l.y0 && wy <= l.y0 + l.h))
                            continue;
                        hit.depth = l.depth;
                        hit.mat = &l.mat;
                        hit.normal = layer_normals[li];
                        hit.is_sprite = false;
                        hit.local_x = wx;
                        hit.local_y = wy;
                        hit.surface_id = 0xB000 + li;
                        hit_sprite = -1;
                    }
                    assert(hit.mat != nullptr); // validate_scene guarantees an infinite layer

                    // shadow: a sprite strictly in front of the receiver casts its
                    // silhouette shifted by depth-gap * slope * (cos a, sin a)
                    float shadow = 0.0f;
                    for (size_t si = 0; si < spec.sprites.size(); ++si) {
                        const Sprite& s = spec.sprites[si];
                        if (s.depth >= hit.depth - 1e-4f || int(si) == hit_sprite)
                            continue;
                        float gap = hit.depth - s.depth;
                        float ox = gap * spec.light.slope_scale * lx;
                        float oy = gap * spec.light.slope_scale * ly;
                        if (detail::sprite_covers(s, centers[si][0], centers[si][1], sx - ox, sy - oy)) {
                            shadow = 1.0f;
                            break;
                        }
                    }

                    float lambert = hit.normal[0] * shade_dir[0] + hit.normal[1] * shade_dir[1] +
                                    hit.normal[2] * shade_dir[2];
                    float shade = spec.ambient + spec.diffuse * std::max(0.0f, lambert);
                    float field = light_field(hit.surface_id, hit.local_x / 32.0f, hit.local_y / 32.0f);
                    float irradiance = shade * field;

                    float met = hit.mat->metallic, spc = hit.mat->specular, rgh = hit.mat->roughness;
                    float shadow_factor = 1.0f - spec.light.attenuation * shadow;
                    for (uint32_t c = 0; c < 3; ++c) {
                        float alb = albedo(*hit.mat, hit.local_x, hit.local_y, c);
                        float response = alb + spc * 0.08f * (1.0f - met);
                        fr.g.base_color.at(x, y, c) = alb;
                        fr.color.at(x, y, c) = irradiance * shadow_factor * response;
                    }
                    fr.g.metallic.at(x, y) = met;
                    fr.g.specular.at(x, y) = spc;
                    fr.g.roughness.at(x, y) = rgh;
                    fr.g.depth.at(x, y) = hit.depth;
                    fr.g.world_normal.at(x, y, 0) = hit.normal[0];
                    fr.g.world_normal.at(x, y, 1) = hit.normal[1];
                    fr.g.world_normal.at(x, y, 2) = hit.normal[2];
                    fr.g.stencil.at(x, y) = hit.is_sprite ? 1.0f : 0.0f;
                    fr.g.shadow_mask.at(x, y) = shadow;
                    fr.g.nov.at(x, y) = std::clamp(hit.normal[2], 0.0f, 1.0f);

                    if (fi > 0) {
                        float mvx, mvy;
                        if (hit_sprite >= 0) {
                            mvx = centers[hit_sprite][0] - centers_prev[hit_sprite][0];
                            mvy = centers[hit_sprite][1] - centers_prev[hit_sprite][1];
                        } else {
                            mvx = -spec.pan_x;
                            mvy = -spec.pan_y;
                        }
                        // +0.0 keeps a zero pan from writing negative zeros
                        fr.g.motion_vector.at(x, y, 0) = mvx + 0.0f;
                        fr.g.motion_vector.at(x, y, 1) = mvy + 0.0f;
                    }
                }
            }
        });
    }
    return out;
}

} // namespace px

#endif
