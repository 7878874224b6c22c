#ifndef PATCHEX_TENSOR_HPP
#define PATCHEX_TENSOR_HPP

#include <cassert>
#include <cstdint>
#include <vector>

#include "patchex/image.hpp"

namespace px {

// Dense NCHW activation/value buffer for the network stack. Templated on the
// scalar so production runs in f32 while numeric checks run in f64.
template <typename T>
struct Tensor {
    uint32_t n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(uint32_t n_, uint32_t c_, uint32_t h_, uint32_t w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_), v(size_t(n_) * c_ * h_ * w_, fill)
    {
        assert(n_ > 0 && c_ > 0 && h_ > 0 && w_ > 0);
    }

    size_t size() const { return v.size(); }

    bool same_shape(const Tensor& o) const
    {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    T& at(uint32_t ni, uint32_t ci, uint32_t yi, uint32_t xi)
    {
        assert(ni < n && ci < c && yi < h && xi < w);
        return v[((size_t(ni) * c + ci) * h + yi) * w + xi];
    }

    T at(uint32_t ni, uint32_t ci, uint32_t yi, uint32_t xi) const
    {
        assert(ni < n && ci < c && yi < h && xi < w);
        return v[((size_t(ni) * c + ci) * h + yi) * w + xi];
    }
};

// stack single-channel-compatible planes into one sample [1, sum(c), H, W]
template <typename T>
inline Tensor<T> tensor_from_planes(const std::vector<const ImagePlane*>& planes)
{
    if (planes.empty())
        throw data_error("tensor_from_planes: no planes");
    uint32_t channels = 0;
    for (const ImagePlane* p : planes) {
        if (p->width != planes[0]->width || p->height != planes[0]->height)
            throw data_error("tensor_from_planes: resolution mismatch");
        channels += p->channels;
    }
    Tensor<T> t(1, channels, planes[0]->height, planes[0]->width);
    uint32_t co = 0;
    for (const ImagePlane* p : planes) {
        for (uint32_t c = 0; c < p->channels; ++c, ++co)
            for (uint32_t y = 0; y < p->height; ++y)
                for (uint32_t x = 0; x < p->width; ++x)
                    t.at(0, co, y, x) = T(p->at(x, y, c));
    }
    return t;
}

// extract a channel range of one sample back into an interleaved plane
template <typename T>
inline ImagePlane planes_from_tensor(const Tensor<T>& t, uint32_t ni, uint32_t c0,
                                     uint32_t channels)
{
    assert(ni < t.n && c0 + channels <= t.c);
    ImagePlane p(t.w, t.h, channels);
    for (uint32_t c = 0; c < channels; ++c)
        for (uint32_t y = 0; y < t.h; ++y)
            for (uint32_t x = 0; x < t.w; ++x)
                p.at(x, y, c) = float(t.at(ni, c0 + c, y, x));
    return p;
}

} // namespace px

#endif // PATCHEX_TENSOR_HPP
