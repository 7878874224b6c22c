#ifndef PATCHEX_CORPUS_HPP
#define PATCHEX_CORPUS_HPP

#include "scene.hpp"

namespace px {

// Canonical synthetic sequences shared by the CLI, the tests, and the
// benchmark harness. Three scenes train the inpainting nets and two are held
// out for evaluation; the special-purpose scenes exercise disocclusion,
// camera pan, and the degenerate static case.

inline const std::vector<std::string>& corpus_scene_names()
{
    static const std::vector<std::string> names = {"train-a", "train-b", "train-c", "held-d",
                                                   "held-e"};
    return names;
}

inline bool corpus_scene_held_out(const std::string& name)
{
    return name == "held-d" || name == "held-e";
}

namespace detail {

// sprites sit on a tilted plane so their shading contrasts with the backdrop
inline Sprite corpus_sprite(SpriteShape shape, float size, float depth, float x0, float vx,
                            float y0, float vy, uint64_t tex)
{
    Sprite s;
    s.shape = shape;
    s.w = s.h = size;
    s.depth = depth;
    s.mat.texture_seed = tex;
    s.mat.feature_px = 9.0f;
    s.normal = {-0.6f, -0.6f, 0.52915026f};
    s.traj_x = {x0, vx};
    s.traj_y = {y0, vy};
    return s;
}

inline SceneSpec corpus_base(uint64_t seed, uint64_t bg_tex)
{
    SceneSpec s;
    s.width = 320;
    s.height = 180;
    s.frame_count = 12;
    s.seed = seed;
    Layer bg;
    bg.depth = 40.0f;
    bg.mat.texture_seed = bg_tex;
    bg.mat.feature_px = 14.0f;
    s.layers.push_back(bg);
    return s;
}

} // namespace detail

inline SceneSpec corpus_scene(const std::string& name)
{
    using detail::corpus_base;
    using detail::corpus_sprite;
    // Corpus sprites float just above their backgrounds so the 45-degree light
    // keeps each shadow within a few pixels of its caster; the segmentation
    // rectangles then cover sprite and shadow motion together.
    if (name == "train-a") {
        SceneSpec s = corpus_base(1001, 11);
        s.sprites.push_back(
            corpus_sprite(SpriteShape::disc, 34.0f, 37.0f, 70.0f, 1.5f, 80.0f, 1.0f, 101));
        return s;
    }
    if (name == "train-b") {
        SceneSpec s = corpus_base(1002, 12);
        Layer mid;
        mid.depth = 38.5f;
        mid.mat.texture_seed = 31;
        mid.infinite = false;
        mid.x0 = 180.0f;
        mid.y0 = 20.0f;
        mid.w = 110.0f;
        mid.h = 70.0f;
        s.layers.push_back(mid);
        s.sprites.push_back(
            corpus_sprite(SpriteShape::rect, 30.0f, 37.0f, 230.0f, -2.0f, 90.0f, 1.0f, 102));
        return s;
    }
    if (name == "train-c") {
        SceneSpec s = corpus_base(1003, 13);
        s.sprites.push_back(
            corpus_sprite(SpriteShape::disc, 28.0f, 36.5f, 60.0f, 3.0f, 60.0f, 0.0f, 103));
        s.sprites.push_back(
            corpus_sprite(SpriteShape::rect, 26.0f, 37.5f, 200.0f, 1.5f, 120.0f, -1.0f, 104));
        return s;
    }
    if (name == "held-d") {
        SceneSpec s = corpus_base(1004, 14);
        s.pan_x = 0.5f;
        s.sprites.push_back(
            corpus_sprite(SpriteShape::disc, 32.0f, 37.0f, 80.0f, 2.0f, 70.0f, 2.0f, 105));
        return s;
    }
    if (name == "held-e") {
        SceneSpec s = corpus_base(1005, 15);
        s.pan_x = 0.75f;
        s.sprites.push_back(
            corpus_sprite(SpriteShape::rect, 28.0f, 37.0f, 240.0f, -3.0f, 80.0f, 0.0f, 106));
        s.sprites.push_back(
            corpus_sprite(SpriteShape::disc, 26.0f, 38.0f, 90.0f, 1.0f, 100.0f, 1.5f, 107));
        return s;
    }
    if (name == "disocclusion") {
        // fast mover over a distant backdrop: the ghost band behind it is the
        // classic warping failure case
        SceneSpec s = corpus_base(1006, 16);
        s.width = 160;
        s.height = 120;
        s.frame_count = 3;
        s.sprites.push_back(
            corpus_sprite(SpriteShape::disc, 36.0f, 6.0f, 60.0f, 8.0f, 60.0f, 0.0f, 108));
        return s;
    }
    if (name == "static") {
        SceneSpec s = corpus_base(1007, 17);
        s.width = 160;
        s.height = 120;
        s.frame_count = 3;
        Sprite sp = corpus_sprite(SpriteShape::rect, 30.0f, 28.0f, 70.0f, 0.0f, 60.0f, 0.0f, 109);
        s.sprites.push_back(sp);
        return s;
    }
    if (name == "pan") {
        SceneSpec s = corpus_base(1008, 18);
        s.width = 160;
        s.height = 120;
        s.frame_count = 4;
        s.pan_x = 2.0f;
        s.pan_y = 1.0f;
        Sprite sp = corpus_sprite(SpriteShape::rect, 34.0f, 6.0f, 60.0f, 0.0f, 50.0f, 0.0f, 110);
        s.sprites.push_back(sp);
        return s;
    }
    throw config_error("unknown corpus scene: " + name);
}

// uniformly scale a scene description to another raster size (benchmarking at
// several resolutions); trajectories and feature sizes scale with it
inline SceneSpec scale_scene(SceneSpec s, float factor)
{
    if (!(factor > 0.0f))
        throw config_error("scale_scene: factor must be positive");
    s.width = uint32_t(std::lround(double(s.width) * factor));
    s.height = uint32_t(std::lround(double(s.height) * factor));
    s.pan_x *= factor;
    s.pan_y *= factor;
    for (Layer& l : s.layers) {
        l.mat.feature_px *= factor;
        l.x0 *= factor;
        l.y0 *= factor;
        l.w *= factor;
        l.h *= factor;
    }
    for (Sprite& sp : s.sprites) {
        sp.w *= factor;
        sp.h *= factor;
        sp.mat.feature_px *= factor;
        for (float& c : sp.traj_x)
            c *= factor;
        for (float& c : sp.traj_y)
            c *= factor;
    }
    return s;
}

} // namespace px

#endif
