#include <catch2/catch_amalgamated.hpp>

#include <patchex/scene.hpp>
#include <patchex/segment.hpp>

using namespace px;

namespace {

ImagePlane const_plane(uint32_t w, uint32_t h, float v) { return ImagePlane(w, h, 1, v); }

// independent 256-bin exhaustive search for the best between-class split
float oracle_otsu(const ImagePlane& p)
{
    float lo = p.data[0], hi = p.data[0];
    for (float v : p.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::array<double, 256> count{}, sum{};
    for (float v : p.data) {
        int b = std::min(255, int((v - lo) * (256.0f / (hi - lo))));
        count[size_t(b)] += 1.0;
        sum[size_t(b)] += double(b);
    }
    double best = -1.0;
    int best_k = 0;
    for (int k = 0; k < 255; ++k) {
        double w0 = 0, s0 = 0, w1 = 0, s1 = 0;
        for (int b = 0; b <= k; ++b) {
            w0 += count[size_t(b)];
            s0 += sum[size_t(b)];
        }
        for (int b = k + 1; b < 256; ++b) {
            w1 += count[size_t(b)];
            s1 += sum[size_t(b)];
        }
        if (w0 == 0 || w1 == 0)
            continue;
        double d = s0 / w0 - s1 / w1;
        double var = w0 * w1 * d * d;
        if (var > best) {
            best = var;
            best_k = k;
        }
    }
    return lo + float(best_k + 1) * (hi - lo) / 256.0f;
}

ImagePlane rect_stencil(uint32_t W, uint32_t H, Rect r)
{
    ImagePlane s(W, H, 1, 0.0f);
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x)
            s.at(uint32_t(x), uint32_t(y)) = 1.0f;
    return s;
}

} // namespace

TEST_CASE("temporal variation basics")
{
    SECTION("constant sequence is zero")
    {
        std::vector<ImagePlane> fs(4, const_plane(8, 8, 0.37f));
        ImagePlane t = temporal_variation(fs);
        for (float v : t.data)
            REQUIRE(v == 0.0f);
    }
    SECTION("alternating 0/1 pixel over 4 frames averages to 1")
    {
        std::vector<ImagePlane> fs;
        for (int i = 0; i < 4; ++i)
            fs.push_back(const_plane(4, 4, i % 2 ? 1.0f : 0.0f));
        ImagePlane t = temporal_variation(fs);
        REQUIRE(t.at(2, 2) == 1.0f); // (1/3)(1+1+1)
    }
    SECTION("matches the direct-summation oracle on random stacks")
    {
        rng r{41};
        std::vector<ImagePlane> fs;
        for (int i = 0; i < 5; ++i) {
            ImagePlane p(9, 7, 1);
            for (float& v : p.data)
                v = r.unit();
            fs.push_back(p);
        }
        ImagePlane t = temporal_variation(fs);
        for (uint32_t y = 0; y < 7; ++y)
            for (uint32_t x = 0; x < 9; ++x) {
                double acc = 0;
                for (int i = 1; i < 5; ++i)
                    acc += std::fabs(double(fs[size_t(i)].at(x, y)) - fs[size_t(i) - 1].at(x, y));
                REQUIRE(t.at(x, y) == Catch::Approx(acc / 4.0).margin(1e-7));
            }
    }
    SECTION("invariant under frame-order reversal")
    {
        rng r{42};
        std::vector<ImagePlane> fs;
        for (int i = 0; i < 6; ++i) {
            ImagePlane p(6, 5, 1);
            for (float& v : p.data)
                v = r.unit();
            fs.push_back(p);
        }
        ImagePlane fwd = temporal_variation(fs);
        std::reverse(fs.begin(), fs.end());
        ImagePlane bwd = temporal_variation(fs);
        REQUIRE(plane_max_abs_diff(fwd, bwd) < 1e-6f); // summation order may differ

    }
    SECTION("rejects degenerate input")
    {
        REQUIRE_THROWS_AS(temporal_variation({const_plane(4, 4, 0.0f)}), data_error);
        REQUIRE_THROWS_AS(temporal_variation({const_plane(4, 4, 0.0f), const_plane(5, 4, 0.0f)}),
                          data_error);
    }
    SECTION("color input reduces by luma")
    {
        ImagePlane a(2, 1, 3, 0.0f), b(2, 1, 3, 0.0f);
        b.at(0, 0, 0) = 1.0f; // red step: luma delta 0.299
        ImagePlane t = temporal_variation({a, b});
        REQUIRE(t.at(0, 0) == Catch::Approx(0.299).margin(1e-6));
    }
}

TEST_CASE("otsu threshold")
{
    SECTION("two clusters {0,0,0,1,1}")
    {
        ImagePlane p(5, 1, 1, 0.0f);
        p.at(3, 0) = 1.0f;
        p.at(4, 0) = 1.0f;
        float t = otsu_threshold(p);
        REQUIRE(t == oracle_otsu(p));
        int high = 0;
        for (float v : p.data)
            high += v > t;
        REQUIRE(high == 2);
        REQUIRE(t < 0.5f); // ties break toward the lower threshold
    }
    SECTION("bimodal gaussian mixture splits between the modes")
    {
        rng r{43};
        auto gauss = [&r](float mean, float sigma) {
            float u1 = std::max(r.unit(), 1e-7f), u2 = r.unit();
            return mean + sigma * std::sqrt(-2.0f * std::log(u1)) *
                              std::cos(6.2831853f * u2);
        };
        ImagePlane p(64, 64, 1);
        for (size_t i = 0; i < p.data.size(); ++i)
            p.data[i] = i % 2 ? gauss(0.2f, 0.05f) : gauss(0.8f, 0.05f);
        float t = otsu_threshold(p);
        REQUIRE(t == oracle_otsu(p));
        REQUIRE(t > 0.3f);
        REQUIRE(t < 0.7f);
    }
    SECTION("matches the exhaustive oracle on random planes")
    {
        rng r{44};
        for (int rep = 0; rep < 5; ++rep) {
            ImagePlane p(40, 30, 1);
            for (float& v : p.data)
                v = r.range(0.0f, 2.0f) * (r.unit() < 0.3f ? 1.0f : 0.1f);
            REQUIRE(otsu_threshold(p) == oracle_otsu(p));
        }
    }
    SECTION("constant plane is an error")
    {
        REQUIRE_THROWS_AS(otsu_threshold(const_plane(8, 8, 0.5f)), data_error);
    }
}

TEST_CASE("offline segmentation on a moving sprite covers the swept area")
{
    SceneSpec s;
    s.width = 128;
    s.height = 96;
    s.frame_count = 4;
    s.seed = 77;
    Layer bg;
    bg.depth = 40.0f;
    bg.mat.texture_seed = 5;
    s.layers.push_back(bg);
    Sprite sp;
    sp.shape = SpriteShape::disc;
    sp.w = sp.h = 20.0f;
    sp.depth = 28.0f;
    sp.mat.texture_seed = 9;
    // shaded away from the light: a dark disc against the bright backdrop, so
    // every pixel it sweeps sees a full-contrast transition
    sp.normal = {-0.6f, -0.6f, 0.52915026f};
    sp.traj_x = {30.0f, 6.0f};
    sp.traj_y = {40.0f, 2.0f};
    s.sprites.push_back(sp);
    auto seq = render_sequence(s);
    std::vector<ImagePlane> colors;
    for (const auto& fr : seq)
        colors.push_back(fr.color);

    OfflineSegmentation off = offline_segment(colors);

    // the sprite's analytic swept box, shrunk to dodge despeckle edge erosion
    int x0 = int(30 - 10) + 2, x1 = int(30 + 6 * 3 + 10) - 2;
    int y0 = int(40 - 10) + 2, y1 = int(40 + 2 * 3 + 10) - 2;
    REQUIRE(off.rect.x <= x0);
    REQUIRE(off.rect.y <= y0);
    REQUIRE(off.rect.x + off.rect.w >= x1);
    REQUIRE(off.rect.y + off.rect.h >= y1);

    // the fitted box must cover nearly all raw high-variation pixels
    size_t high = 0, covered = 0;
    for (uint32_t y = 0; y < s.height; ++y)
        for (uint32_t x = 0; x < s.width; ++x)
            if (off.high_mask.at(x, y) == 1.0f) {
                ++high;
                covered += off.rect.contains(int(x), int(y));
            }
    REQUIRE(high > 300);
    REQUIRE(double(covered) >= 0.99 * double(high));
}

TEST_CASE("offline segmentation on a static scene: empty variation, then an error")
{
    SceneSpec s;
    s.width = 64;
    s.height = 48;
    s.frame_count = 3;
    s.seed = 3;
    Layer bg;
    bg.depth = 40.0f;
    s.layers.push_back(bg);
    auto seq = render_sequence(s);
    std::vector<ImagePlane> colors;
    for (const auto& fr : seq)
        colors.push_back(fr.color);
    ImagePlane var = temporal_variation(colors);
    for (float v : var.data)
        REQUIRE(v == 0.0f);
    REQUIRE_THROWS_AS(offline_segment(colors), data_error);
}

TEST_CASE("rectangle expansion")
{
    const uint32_t W = 64, H = 64;
    Rect tight{10, 10, 20, 20};
    ImagePlane stencil = rect_stencil(W, H, tight);

    SECTION("pinned example: v=(2,3), k=2 grows 20x20 to 24x26 centered")
    {
        MotionField mv(W, H, 2, 0.0f);
        for (uint32_t y = 0; y < H; ++y)
            for (uint32_t x = 0; x < W; ++x) {
                mv.at(x, y, 0) = 2.0f;
                mv.at(x, y, 1) = -3.0f;
            }
        Rect r = expand_rect(tight, mv, stencil);
        REQUIRE(r.x == 8);
        REQUIRE(r.y == 7);
        REQUIRE(r.w == 24);
        REQUIRE(r.h == 26);
    }
    SECTION("zero motion leaves the rect unchanged")
    {
        MotionField mv(W, H, 2, 0.0f);
        Rect r = expand_rect(tight, mv, stencil);
        REQUIRE((r.x == 10 && r.y == 10 && r.w == 20 && r.h == 20));
    }
    SECTION("empty stencil passes the rect through")
    {
        MotionField mv(W, H, 2, 5.0f);
        Rect r = expand_rect(tight, mv, ImagePlane(W, H, 1, 0.0f));
        REQUIRE((r.x == 10 && r.w == 20));
        Rect e = expand_rect(Rect{}, mv, stencil);
        REQUIRE(e.empty());
    }
    SECTION("adversarial motion never escapes the frame")
    {
        rng r{45};
        for (int rep = 0; rep < 30; ++rep) {
            int x = int(r.below(40)), y = int(r.below(40));
            Rect t{x, y, 1 + int(r.below(uint32_t(64 - x))), 1 + int(r.below(uint32_t(64 - y)))};
            ImagePlane st = rect_stencil(W, H, t);
            MotionField mv(W, H, 2);
            for (float& v : mv.data)
                v = r.range(-500.0f, 500.0f);
            Rect e = expand_rect(t, mv, st);
            REQUIRE(e.x >= 0);
            REQUIRE(e.y >= 0);
            REQUIRE(e.w >= 1);
            REQUIRE(e.h >= 1);
            REQUIRE(e.x + e.w <= int(W));
            REQUIRE(e.y + e.h <= int(H));
        }
    }
    SECTION("larger motion never shrinks the rect")
    {
        rng r{46};
        for (int rep = 0; rep < 20; ++rep) {
            MotionField mv(W, H, 2);
            for (float& v : mv.data)
                v = r.range(-6.0f, 6.0f);
            MotionField mv2 = mv;
            for (float& v : mv2.data)
                v *= 2.0f;
            Rect a = expand_rect(tight, mv, stencil);
            Rect b = expand_rect(tight, mv2, stencil);
            REQUIRE(b.x <= a.x);
            REQUIRE(b.y <= a.y);
            REQUIRE(b.x + b.w >= a.x + a.w);
            REQUIRE(b.y + b.h >= a.y + a.h);
        }
    }
    SECTION("non-positive scaling factors are rejected")
    {
        MotionField mv(W, H, 2, 0.0f);
        SegmentationParams p;
        p.k_x = 0.0f;
        REQUIRE_THROWS_AS(expand_rect(tight, mv, stencil, p), config_error);
    }
}

TEST_CASE("region masks partition the frame exactly")
{
    const uint32_t W = 48, H = 36;
    SECTION("empty stencil: near is the rect, far the rest")
    {
        ImagePlane st(W, H, 1, 0.0f);
        RegionMasks m = make_masks(st, Rect{5, 5, 10, 8});
        for (uint32_t y = 0; y < H; ++y)
            for (uint32_t x = 0; x < W; ++x) {
                REQUIRE(m.fg.at(x, y) == 0.0f);
                bool in = x >= 5 && x < 15 && y >= 5 && y < 13;
                REQUIRE(m.near_be.at(x, y) == (in ? 1.0f : 0.0f));
                REQUIRE(m.far_be.at(x, y) == (in ? 0.0f : 1.0f));
            }
    }
    SECTION("whole-frame rect leaves no far region")
    {
        ImagePlane st = rect_stencil(W, H, Rect{10, 10, 6, 6});
        RegionMasks m = make_masks(st, Rect{0, 0, int(W), int(H)});
        for (float v : m.far_be.data)
            REQUIRE(v == 0.0f);
    }
    SECTION("random stencils and rects always sum to one")
    {
        rng r{47};
        for (int rep = 0; rep < 10; ++rep) {
            ImagePlane st(W, H, 1, 0.0f);
            for (float& v : st.data)
                v = r.unit() < 0.2f ? 1.0f : 0.0f;
            std::vector<Rect> rects = {
                Rect{int(r.below(W)), int(r.below(H)), 1 + int(r.below(20)), 1 + int(r.below(20))},
                Rect{int(r.below(W)), int(r.below(H)), 1 + int(r.below(20)), 1 + int(r.below(20))}};
            RegionMasks m = make_masks(st, rects);
            REQUIRE(plane_max_abs_diff(m.fg, st) == 0.0f); // fg is the stencil
            for (size_t i = 0; i < st.data.size(); ++i) {
                float sum = m.fg.data[i] + m.near_be.data[i] + m.far_be.data[i];
                REQUIRE(sum == 1.0f);
                REQUIRE((m.fg.data[i] == 0.0f || m.fg.data[i] == 1.0f));
                REQUIRE((m.near_be.data[i] == 0.0f || m.near_be.data[i] == 1.0f));
            }
        }
    }
    SECTION("per-component expansion partitions around two movers")
    {
        ImagePlane st(64, 48, 1, 0.0f);
        for (uint32_t y = 5; y < 12; ++y)
            for (uint32_t x = 5; x < 12; ++x)
                st.at(x, y) = 1.0f;
        for (uint32_t y = 30; y < 40; ++y)
            for (uint32_t x = 40; x < 52; ++x)
                st.at(x, y) = 1.0f;
        MotionField mv(64, 48, 2, 0.0f);
        for (uint32_t y = 0; y < 48; ++y)
            for (uint32_t x = 0; x < 64; ++x)
                mv.at(x, y, 0) = y < 20 ? 4.0f : 1.0f;
        RegionMasks m = segment_frame(st, mv);
        for (size_t i = 0; i < st.data.size(); ++i)
            REQUIRE(m.fg.data[i] + m.near_be.data[i] + m.far_be.data[i] == 1.0f);
        // the faster component gets the wider halo
        REQUIRE(m.near_be.at(2, 8) == 1.0f);   // 4px growth on each side
        REQUIRE(m.near_be.at(39, 35) == 1.0f); // 1px growth reaches here
        REQUIRE(m.far_be.at(37, 35) == 1.0f);  // but not this far
    }
}

TEST_CASE("expansion factor calibration")
{
    SECTION("exact linear data recovers the factor with perfect correlation")
    {
        std::vector<SequenceSummary> data;
        for (float v = 1.0f; v <= 5.0f; v += 1.0f)
            data.push_back({v, 0.5f * v, 2.0f * v, 2.0f * (0.5f * v)});
        Calibration c = calibrate_k(data);
        REQUIRE(c.k_x == Catch::Approx(2.0).margin(1e-6));
        REQUIRE(c.k_y == Catch::Approx(2.0).margin(1e-6));
        REQUIRE(c.r_x == Catch::Approx(1.0).margin(1e-6));
        REQUIRE(c.r_y == Catch::Approx(1.0).margin(1e-6));
        REQUIRE_FALSE(c.low_correlation);
    }
    SECTION("uncorrelated noise is flagged")
    {
        rng r{48};
        std::vector<SequenceSummary> data;
        for (int i = 0; i < 40; ++i)
            data.push_back({r.range(1.0f, 5.0f), r.range(1.0f, 5.0f), r.range(-10.0f, 10.0f),
                            r.range(-10.0f, 10.0f)});
        Calibration c = calibrate_k(data);
        REQUIRE(std::fabs(c.r_x) < 0.3f);
        REQUIRE(c.low_correlation);
    }
    SECTION("degenerate regression is an error")
    {
        std::vector<SequenceSummary> data = {{2.0f, 2.0f, 4.0f, 4.0f}, {2.0f, 2.0f, 4.0f, 4.0f}};
        REQUIRE_THROWS_AS(calibrate_k(data), numeric_error);
    }
}

TEST_CASE("calibration on rendered sequences correlates strongly")
{
    std::vector<SequenceSummary> summaries;
    for (float v : {2.0f, 4.0f, 6.0f}) {
        SceneSpec s;
        s.width = 160;
        s.height = 100;
        s.frame_count = 3;
        s.seed = uint64_t(100 + v);
        Layer bg;
        bg.depth = 40.0f;
        bg.mat.texture_seed = 31;
        s.layers.push_back(bg);
        Sprite sp;
        sp.shape = SpriteShape::disc;
        sp.w = sp.h = 24.0f;
        sp.depth = 30.0f;
        sp.mat.texture_seed = 13;
        sp.normal = {-0.6f, -0.6f, 0.52915026f}; // dark against the backdrop
        sp.traj_x = {40.0f, v};
        sp.traj_y = {50.0f, 0.6f * v};
        s.sprites.push_back(sp);
        auto seq = render_sequence(s);
        std::vector<ImagePlane> colors, stencils, mvs;
        for (const auto& fr : seq) {
            colors.push_back(fr.color);
            stencils.push_back(fr.g.stencil);
            mvs.push_back(fr.g.motion_vector);
        }
        summaries.push_back(summarize_sequence(colors, stencils, mvs));
    }
    Calibration c = calibrate_k(summaries);
    INFO("k=(" << c.k_x << "," << c.k_y << ") r=(" << c.r_x << "," << c.r_y << ")");
    REQUIRE(c.r_x > 0.6f);
    REQUIRE(c.r_y > 0.6f);
    REQUIRE(c.k_x > 0.5f);
    REQUIRE(c.k_y > 0.5f);
    REQUIRE_FALSE(c.low_correlation);
}
