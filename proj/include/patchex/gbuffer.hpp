#ifndef PATCHEX_GBUFFER_HPP
#define PATCHEX_GBUFFER_HPP

#include "image.hpp"

namespace px {

// Per-frame auxiliary buffers produced by the renderer. motion_vector holds the
// screen-space displacement of the surface visible at each pixel over one full
// frame unit (position now minus position one frame ago, backward convention);
// the first emitted frame of a sequence is all-zero.
struct GBufferSet {
    ImagePlane base_color;    // 3ch albedo texture of the visible surface
    ImagePlane metallic;      // 1ch
    ImagePlane specular;      // 1ch
    ImagePlane roughness;     // 1ch
    ImagePlane depth;         // 1ch, > 0
    ImagePlane world_normal;  // 3ch, unit length
    ImagePlane stencil;       // 1ch, 1 on dynamic objects
    ImagePlane motion_vector; // 2ch
    ImagePlane shadow_mask;   // 1ch, [0,1]
    ImagePlane nov;           // 1ch, clamped normal-dot-view

    void validate() const
    {
        auto dims = [&](const ImagePlane& p, uint32_t c, const char* name) {
            if (p.width != base_color.width || p.height != base_color.height || p.channels != c)
                throw data_error(std::string("GBufferSet: bad shape for ") + name);
            if (!plane_all_finite(p))
                throw numeric_error(std::string("GBufferSet: non-finite values in ") + name);
        };
        dims(base_color, 3, "base_color");
        dims(metallic, 1, "metallic");
        dims(specular, 1, "specular");
        dims(roughness, 1, "roughness");
        dims(depth, 1, "depth");
        dims(world_normal, 3, "world_normal");
        dims(stencil, 1, "stencil");
        dims(motion_vector, 2, "motion_vector");
        dims(shadow_mask, 1, "shadow_mask");
        dims(nov, 1, "nov");
        for (float v : stencil.data)
            if (v != 0.0f && v != 1.0f)
                throw data_error("GBufferSet: stencil not binary");
        for (float v : depth.data)
            if (v <= 0.0f)
                throw data_error("GBufferSet: non-positive depth");
        for (float v : shadow_mask.data)
            if (v < 0.0f || v > 1.0f)
                throw data_error("GBufferSet: shadow_mask outside [0,1]");
        for (uint32_t y = 0; y < world_normal.height; ++y)
            for (uint32_t x = 0; x < world_normal.width; ++x) {
                float nx = world_normal.at(x, y, 0), ny = world_normal.at(x, y, 1),
                      nz = world_normal.at(x, y, 2);
                float len = std::sqrt(nx * nx + ny * ny + nz * nz);
                if (std::fabs(len - 1.0f) > 1e-4f)
                    throw data_error("GBufferSet: normal not unit length");
            }
    }
};

// Causality guard for extrapolation targets: the view a cheap mid-step geometry
// pass could supply. Deliberately has no shadow_mask and no color; those exist
// only for ground truth and may be read in evaluation/oracle paths alone.
struct TargetGuide {
    const ImagePlane* base_color = nullptr;
    const ImagePlane* metallic = nullptr;
    const ImagePlane* specular = nullptr;
    const ImagePlane* roughness = nullptr;
    const ImagePlane* depth = nullptr;
    const ImagePlane* world_normal = nullptr;
    const ImagePlane* stencil = nullptr;
    const ImagePlane* motion_vector = nullptr;
    const ImagePlane* nov = nullptr;
};

inline TargetGuide make_target_guide(const GBufferSet& g)
{
    TargetGuide t;
    t.base_color = &g.base_color;
    t.metallic = &g.metallic;
    t.specular = &g.specular;
    t.roughness = &g.roughness;
    t.depth = &g.depth;
    t.world_normal = &g.world_normal;
    t.stencil = &g.stencil;
    t.motion_vector = &g.motion_vector;
    t.nov = &g.nov;
    return t;
}

} // namespace px

#endif
