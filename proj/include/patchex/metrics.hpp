#ifndef PATCHEX_METRICS_HPP
#define PATCHEX_METRICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "patchex/image.hpp"

namespace px {

// Peak signal-to-noise ratio in dB over all channels; +inf for identical inputs.
inline double psnr(const ImagePlane& a, const ImagePlane& b, double max_val = 1.0)
{
    require_same_shape(a, b, "psnr");
    double se = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        se += d * d;
    }
    const double mse = se / double(a.data.size());
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(max_val * max_val / mse);
}

namespace detail {

struct SsimKernel {
    int radius;
    std::vector<double> w; // (2r+1)^2 unnormalized Gaussian taps
    SsimKernel(int r, double sigma) : radius(r), w(size_t((2 * r + 1) * (2 * r + 1)))
    {
        const int k = 2 * r + 1;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                w[size_t((dy + r) * k + (dx + r))] =
                    std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
};

} // namespace detail

// Mean structural similarity: 11x11 Gaussian window (sigma 1.5) centered on every
// pixel, taps falling outside the frame dropped and the window renormalized.
// Multi-channel inputs average the per-channel scores. Dynamic range is 1.
inline double ssim(const ImagePlane& a, const ImagePlane& b)
{
    require_same_shape(a, b, "ssim");
    static const detail::SsimKernel kernel(5, 1.5);
    const double c1 = 0.01 * 0.01;
    const double c2 = 0.03 * 0.03;
    const int k = 2 * kernel.radius + 1;
    double total = 0.0;
    size_t windows = 0;
    for (uint32_t c = 0; c < a.channels; ++c)
        for (uint32_t y = 0; y < a.height; ++y)
            for (uint32_t x = 0; x < a.width; ++x) {
                double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
                for (int dy = -kernel.radius; dy <= kernel.radius; ++dy) {
                    const int py = int(y) + dy;
                    if (py < 0 || py >= int(a.height))
                        continue;
                    for (int dx = -kernel.radius; dx <= kernel.radius; ++dx) {
                        const int px_ = int(x) + dx;
                        if (px_ < 0 || px_ >= int(a.width))
                            continue;
                        const double w = kernel.w[size_t((dy + kernel.radius) * k + dx + kernel.radius)];
                        const double va = a.at(uint32_t(px_), uint32_t(py), c);
                        const double vb = b.at(uint32_t(px_), uint32_t(py), c);
                        sw += w;
                        sx += w * va;
                        sy += w * vb;
                        sxx += w * va * va;
                        syy += w * vb * vb;
                        sxy += w * va * vb;
                    }
                }
                const double mx = sx / sw;
                const double my = sy / sw;
                const double vx = sxx / sw - mx * mx;
                const double vy = syy / sw - my * my;
                const double cov = sxy / sw - mx * my;
                total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                         ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++windows;
            }
    return total / double(windows);
}

// --- per-frame quality CSV ---

struct FrameScore {
    int frame_index = 0;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

namespace detail {

inline std::string fmt_double(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace detail

inline std::string frame_metrics_csv(const std::vector<FrameScore>& scores)
{
    std::string out = "frame_index,psnr_db,ssim\n";
    for (const FrameScore& s : scores) {
        out += std::to_string(s.frame_index);
        out += ',';
        out += detail::fmt_double(s.psnr_db);
        out += ',';
        out += detail::fmt_double(s.ssim);
        out += '\n';
    }
    return out;
}

// --- stage timing ---

constexpr int kStageCount = 5;

enum class Stage { gbuffer_io = 0, warping, preprocessing, inference, blending };

inline const char* stage_name(int stage)
{
    static const std::array<const char*, kStageCount> names = {"gbuffer/io", "warping",
                                                               "preprocessing", "inference",
                                                               "blending"};
    return names.at(size_t(stage));
}

// Per-stage wall-clock samples, one entry per measured iteration.
struct StageTimings {
    std::array<std::vector<double>, kStageCount> ms;

    void add(Stage s, double value_ms) { ms[size_t(s)].push_back(value_ms); }
};

// Nearest-rank percentile of a sample set, q in (0, 1].
inline double percentile_nearest_rank(std::vector<double> v, double q)
{
    if (v.empty())
        throw data_error("percentile of empty sample set");
    std::sort(v.begin(), v.end());
    const size_t rank = size_t(std::ceil(q * double(v.size())));
    return v[std::max<size_t>(rank, 1) - 1];
}

inline std::string stage_timing_csv(const StageTimings& t)
{
    std::string out = "stage,median_ms,p90_ms\n";
    for (int s = 0; s < kStageCount; ++s) {
        if (t.ms[size_t(s)].empty())
            throw data_error("stage timing: no samples for stage");
        out += stage_name(s);
        out += ',';
        out += detail::fmt_double(percentile_nearest_rank(t.ms[size_t(s)], 0.5));
        out += ',';
        out += detail::fmt_double(percentile_nearest_rank(t.ms[size_t(s)], 0.9));
        out += '\n';
    }
    return out;
}

// --- power-law fit ---

struct PowerLawFit {
    double a = 0.0;  // multiplier
    double b = 0.0;  // exponent
    double r2 = 0.0; // coefficient of determination in log-log space
};

// Least-squares fit of y = a * x^b through log-log linear regression.
inline PowerLawFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& ys)
{
    if (xs.size() != ys.size())
        throw data_error("fit_power_law: size mismatch");
    if (xs.size() < 3)
        throw data_error("fit_power_law: need at least 3 points");
    const size_t n = xs.size();
    std::vector<double> lx(n), ly(n);
    for (size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw data_error("fit_power_law: points must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = lx[i] - mx;
        const double dy = ly[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0)
        throw numeric_error("fit_power_law: degenerate abscissae");
    PowerLawFit fit;
    fit.b = sxy / sxx;
    fit.a = std::exp(my - fit.b * mx);
    fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

} // namespace px

#endif // PATCHEX_METRICS_HPP
