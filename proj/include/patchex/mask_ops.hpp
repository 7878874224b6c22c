#ifndef PATCHEX_MASK_OPS_HPP
#define PATCHEX_MASK_OPS_HPP

#include <deque>

#include "image.hpp"

namespace px {

struct Rect {
    int x = 0, y = 0, w = 0, h = 0;
    bool empty() const { return w <= 0 || h <= 0; }
    bool contains(int px_, int py_) const
    {
        return px_ >= x && px_ < x + w && py_ >= y && py_ < y + h;
    }
};

// 8-connected components of a binary mask; label 0 = background, labels start at 1
struct ComponentMap {
    std::vector<int> labels; // per pixel
    int count = 0;
    uint32_t width = 0, height = 0;
    int label(uint32_t x, uint32_t y) const { return labels[size_t(y) * width + x]; }
};

inline ComponentMap connected_components(const ImagePlane& mask)
{
    assert(mask.channels == 1);
    ComponentMap cm;
    cm.width = mask.width;
    cm.height = mask.height;
    cm.labels.assign(mask.pixel_count(), 0);
    int next = 0;
    std::deque<std::pair<uint32_t, uint32_t>> queue;
    for (uint32_t sy = 0; sy < mask.height; ++sy)
        for (uint32_t sx = 0; sx < mask.width; ++sx) {
            if (mask.at(sx, sy) == 0.0f || cm.labels[size_t(sy) * mask.width + sx] != 0)
                continue;
            ++next;
            cm.labels[size_t(sy) * mask.width + sx] = next;
            queue.emplace_back(sx, sy);
            while (!queue.empty()) {
                auto [x, y] = queue.front();
                queue.pop_front();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int nx = int(x) + dx, ny = int(y) + dy;
                        if (nx < 0 || ny < 0 || nx >= int(mask.width) || ny >= int(mask.height))
                            continue;
                        size_t ni = size_t(ny) * mask.width + nx;
                        if (mask.data[ni * mask.channels] != 0.0f && cm.labels[ni] == 0) {
                            cm.labels[ni] = next;
                            queue.emplace_back(uint32_t(nx), uint32_t(ny));
                        }
                    }
            }
        }
    cm.count = next;
    return cm;
}

inline Rect mask_bbox(const ImagePlane& mask, float threshold = 0.5f)
{
    assert(mask.channels == 1);
    int x0 = int(mask.width), y0 = int(mask.height), x1 = -1, y1 = -1;
    for (uint32_t y = 0; y < mask.height; ++y)
        for (uint32_t x = 0; x < mask.width; ++x)
            if (mask.at(x, y) > threshold) {
                x0 = std::min(x0, int(x));
                y0 = std::min(y0, int(y));
                x1 = std::max(x1, int(x));
                y1 = std::max(y1, int(y));
            }
    if (x1 < 0)
        return {};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

inline ImagePlane dilate_mask(const ImagePlane& mask, int radius)
{
    assert(mask.channels == 1);
    ImagePlane out(mask.width, mask.height, 1, 0.0f);
    for (uint32_t y = 0; y < mask.height; ++y)
        for (uint32_t x = 0; x < mask.width; ++x) {
            if (mask.at(x, y) == 0.0f)
                continue;
            int xa = std::max(0, int(x) - radius), xb = std::min(int(mask.width) - 1, int(x) + radius);
            int ya = std::max(0, int(y) - radius), yb = std::min(int(mask.height) - 1, int(y) + radius);
            for (int yy = ya; yy <= yb; ++yy)
                for (int xx = xa; xx <= xb; ++xx)
                    out.at(uint32_t(xx), uint32_t(yy)) = 1.0f;
        }
    return out;
}

// 3x3 majority vote with border clamping; removes isolated speckle
inline ImagePlane majority3x3(const ImagePlane& mask)
{
    assert(mask.channels == 1);
    ImagePlane out(mask.width, mask.height, 1, 0.0f);
    for (uint32_t y = 0; y < mask.height; ++y)
        for (uint32_t x = 0; x < mask.width; ++x) {
            int ones = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int nx = std::clamp(int(x) + dx, 0, int(mask.width) - 1);
                    int ny = std::clamp(int(y) + dy, 0, int(mask.height) - 1);
                    ones += mask.at(uint32_t(nx), uint32_t(ny)) != 0.0f;
                }
            out.at(x, y) = ones >= 5 ? 1.0f : 0.0f;
        }
    return out;
}

} // namespace px

#endif
