#ifndef PATCHEX_BLEND_HPP
#define PATCHEX_BLEND_HPP

#include <algorithm>
#include <cmath>

#include "patchex/gbuffer.hpp"
#include "patchex/image.hpp"
#include "patchex/segment.hpp"

namespace px {

// Per-channel material response: base_color + specular * 0.08 * (1 - metallic).
// Dividing lit color by this recovers irradiance; multiplying restores color.
inline ImagePlane material_response(const ImagePlane& base_color, const ImagePlane& specular,
                                    const ImagePlane& metallic)
{
    if (base_color.channels != 3 || specular.channels != 1 || metallic.channels != 1)
        throw data_error("material_response: expected 3ch base_color, 1ch specular/metallic");
    if (base_color.width != specular.width || base_color.height != specular.height ||
        base_color.width != metallic.width || base_color.height != metallic.height)
        throw data_error("material_response: resolution mismatch");
    ImagePlane out(base_color.width, base_color.height, 3);
    for (uint32_t y = 0; y < out.height; ++y)
        for (uint32_t x = 0; x < out.width; ++x) {
            const float gloss = specular.at(x, y) * 0.08f * (1.0f - metallic.at(x, y));
            for (uint32_t c = 0; c < 3; ++c)
                out.at(x, y, c) = base_color.at(x, y, c) + gloss;
        }
    return out;
}

inline ImagePlane material_response(const GBufferSet& g)
{
    return material_response(g.base_color, g.specular, g.metallic);
}

inline ImagePlane material_response(const TargetGuide& g)
{
    return material_response(*g.base_color, *g.specular, *g.metallic);
}

// Divide lit color by the material response (guarded), yielding irradiance.
inline ImagePlane demodulate(const ImagePlane& color, const ImagePlane& response)
{
    return plane_div(color, response);
}

inline ImagePlane demodulate(const ImagePlane& color, const GBufferSet& g)
{
    return demodulate(color, material_response(g));
}

// Re-apply the material response.
inline ImagePlane modulate(const ImagePlane& irradiance, const ImagePlane& response)
{
    return plane_mul(irradiance, response);
}

inline ImagePlane modulate(const ImagePlane& irradiance, const GBufferSet& g)
{
    return modulate(irradiance, material_response(g));
}

// Darken by the shadow layer: out = shadeless * (1 - attenuation * shadow).
inline ImagePlane shadow_apply(const ImagePlane& shadeless, const ImagePlane& shadow,
                               float attenuation)
{
    if (shadow.channels != 1)
        throw data_error("shadow_apply: shadow must be 1ch");
    if (shadow.width != shadeless.width || shadow.height != shadeless.height)
        throw data_error("shadow_apply: resolution mismatch");
    ImagePlane out(shadeless.width, shadeless.height, shadeless.channels);
    for (uint32_t y = 0; y < out.height; ++y)
        for (uint32_t x = 0; x < out.width; ++x) {
            const float factor = 1.0f - attenuation * shadow.at(x, y);
            for (uint32_t c = 0; c < out.channels; ++c)
                out.at(x, y, c) = shadeless.at(x, y, c) * factor;
        }
    return out;
}

// Inverse of shadow_apply (guarded divide).
inline ImagePlane shadow_remove(const ImagePlane& shadowed, const ImagePlane& shadow,
                                float attenuation)
{
    if (shadow.channels != 1)
        throw data_error("shadow_remove: shadow must be 1ch");
    if (shadow.width != shadowed.width || shadow.height != shadowed.height)
        throw data_error("shadow_remove: resolution mismatch");
    ImagePlane out(shadowed.width, shadowed.height, shadowed.channels);
    for (uint32_t y = 0; y < out.height; ++y)
        for (uint32_t x = 0; x < out.width; ++x) {
            const float factor = std::max(1.0f - attenuation * shadow.at(x, y), 1e-6f);
            for (uint32_t c = 0; c < out.channels; ++c)
                out.at(x, y, c) = shadowed.at(x, y, c) / factor;
        }
    return out;
}

// Combine the three per-region frames: out = sum_i mask_i * frame_i.
// The masks must partition the frame exactly (one region per pixel).
inline ImagePlane blend_regions(const ImagePlane& fg, const ImagePlane& near_be,
                                const ImagePlane& far_be, const RegionMasks& masks)
{
    require_same_shape(fg, near_be, "blend_regions frames");
    require_same_shape(fg, far_be, "blend_regions frames");
    require_same_shape(masks.fg, masks.near_be, "blend_regions masks");
    require_same_shape(masks.fg, masks.far_be, "blend_regions masks");
    if (masks.fg.channels != 1)
        throw data_error("blend_regions: masks must be 1ch");
    if (masks.fg.width != fg.width || masks.fg.height != fg.height)
        throw data_error("blend_regions: mask/frame resolution mismatch");
    auto binary01 = [](float v) { return v == 0.0f || v == 1.0f; };
    ImagePlane out(fg.width, fg.height, fg.channels);
    for (uint32_t y = 0; y < out.height; ++y)
        for (uint32_t x = 0; x < out.width; ++x) {
            const float m1 = masks.fg.at(x, y);
            const float m2 = masks.near_be.at(x, y);
            const float m3 = masks.far_be.at(x, y);
            if (!binary01(m1) || !binary01(m2) || !binary01(m3) || m1 + m2 + m3 != 1.0f)
                throw data_error("blend_regions: masks do not partition the frame");
            for (uint32_t c = 0; c < out.channels; ++c)
                out.at(x, y, c) =
                    m1 * fg.at(x, y, c) + m2 * near_be.at(x, y, c) + m3 * far_be.at(x, y, c);
        }
    return out;
}

// Final assembly: blend the region outputs, darken by the predicted shadow,
// restore the target material response, clamp negatives at emission.
inline ImagePlane compose_final(const ImagePlane& fg, const ImagePlane& near_be,
                                const ImagePlane& far_be, const RegionMasks& masks,
                                const ImagePlane& shadow, float attenuation,
                                const TargetGuide& guide)
{
    ImagePlane out = blend_regions(fg, near_be, far_be, masks);
    out = shadow_apply(out, shadow, attenuation);
    out = modulate(out, material_response(guide));
    for (float& v : out.data)
        v = std::max(v, 0.0f);
    return out;
}

} // namespace px

#endif // PATCHEX_BLEND_HPP
