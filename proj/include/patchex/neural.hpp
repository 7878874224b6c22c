#ifndef PATCHEX_NEURAL_HPP
#define PATCHEX_NEURAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "patchex/tensor.hpp"
#include "patchex/warp.hpp"

namespace px {

// ---- primitive layers -------------------------------------------------

// Plain 2D convolution with zero padding, direct summation, NCHW.
template <typename T>
struct Conv2d {
    uint32_t in_ch = 0, out_ch = 0, k = 3, stride = 1, pad = 1;
    std::vector<T> w; // out_ch * in_ch * k * k
    std::vector<T> b; // out_ch
    std::vector<T> gw, gb;
    Tensor<T> x; // cached forward input

    Conv2d() = default;
    Conv2d(uint32_t in, uint32_t out, uint32_t stride_)
        : in_ch(in), out_ch(out), stride(stride_), w(size_t(out) * in * 9), b(out),
          gw(w.size()), gb(b.size())
    {
    }

    size_t params() const { return w.size() + b.size(); }

    // Kaiming-uniform fan-in, zero biases; draw order is part of the contract
    void init(rng& r)
    {
        const T bound = T(std::sqrt(6.0 / double(in_ch * k * k)));
        for (T& v : w)
            v = T(r.range(float(-bound), float(bound)));
        for (T& v : b)
            v = T(0);
    }

    void zero_grad()
    {
        std::fill(gw.begin(), gw.end(), T(0));
        std::fill(gb.begin(), gb.end(), T(0));
    }

    Tensor<T> forward(const Tensor<T>& in)
    {
        if (in.c != in_ch)
            throw data_error("conv: channel mismatch");
        x = in;
        const uint32_t oh = (in.h + 2 * pad - k) / stride + 1;
        const uint32_t ow = (in.w + 2 * pad - k) / stride + 1;
        Tensor<T> out(in.n, out_ch, oh, ow);
        for (uint32_t n = 0; n < in.n; ++n)
            for (uint32_t oc = 0; oc < out_ch; ++oc)
                for (uint32_t oy = 0; oy < oh; ++oy)
                    for (uint32_t ox = 0; ox < ow; ++ox) {
                        T acc = b[oc];
                        const int iy0 = int(oy * stride) - int(pad);
                        const int ix0 = int(ox * stride) - int(pad);
                        for (uint32_t ic = 0; ic < in_ch; ++ic)
                            for (uint32_t ky = 0; ky < k; ++ky) {
                                const int iy = iy0 + int(ky);
                                if (iy < 0 || iy >= int(in.h))
                                    continue;
                                const T* row = &in.v[((size_t(n) * in.c + ic) * in.h +
                                                      uint32_t(iy)) *
                                                     in.w];
                                const T* wrow = &w[((size_t(oc) * in_ch + ic) * k + ky) * k];
                                for (uint32_t kx = 0; kx < k; ++kx) {
                                    const int ix = ix0 + int(kx);
                                    if (ix < 0 || ix >= int(in.w))
                                        continue;
                                    acc += wrow[kx] * row[uint32_t(ix)];
                                }
                            }
                        out.at(n, oc, oy, ox) = acc;
                    }
        return out;
    }

    // accumulates gw/gb, returns gradient w.r.t. the cached input
    Tensor<T> backward(const Tensor<T>& dout)
    {
        Tensor<T> dx(x.n, x.c, x.h, x.w);
        for (uint32_t n = 0; n < dout.n; ++n)
            for (uint32_t oc = 0; oc < out_ch; ++oc)
                for (uint32_t oy = 0; oy < dout.h; ++oy)
                    for (uint32_t ox = 0; ox < dout.w; ++ox) {
                        const T g = dout.at(n, oc, oy, ox);
                        if (g == T(0))
                            continue;
                        gb[oc] += g;
                        const int iy0 = int(oy * stride) - int(pad);
                        const int ix0 = int(ox * stride) - int(pad);
                        for (uint32_t ic = 0; ic < in_ch; ++ic)
                            for (uint32_t ky = 0; ky < k; ++ky) {
                                const int iy = iy0 + int(ky);
                                if (iy < 0 || iy >= int(x.h))
                                    continue;
                                const T* xrow =
                                    &x.v[((size_t(n) * x.c + ic) * x.h + uint32_t(iy)) * x.w];
                                T* dxrow =
                                    &dx.v[((size_t(n) * x.c + ic) * x.h + uint32_t(iy)) * x.w];
                                const size_t wbase = ((size_t(oc) * in_ch + ic) * k + ky) * k;
                                for (uint32_t kx = 0; kx < k; ++kx) {
                                    const int ix = ix0 + int(kx);
                                    if (ix < 0 || ix >= int(x.w))
                                        continue;
                                    gw[wbase + kx] += g * xrow[uint32_t(ix)];
                                    dxrow[uint32_t(ix)] += g * w[wbase + kx];
                                }
                            }
                    }
        return dx;
    }
};

// Gated convolution: out = sigmoid(conv_g(x)) * conv_f(x), elementwise.
template <typename T>
struct GatedConv {
    Conv2d<T> feat, gate;
    Tensor<T> a;    // conv_f output
    Tensor<T> gate_act; // sigmoid(conv_g) output, in (0,1)

    GatedConv() = default;
    GatedConv(uint32_t in, uint32_t out, uint32_t stride)
        : feat(in, out, stride), gate(in, out, stride)
    {
    }

    size_t params() const { return feat.params() + gate.params(); }

    void init(rng& r)
    {
        feat.init(r);
        gate.init(r);
    }

    void zero_grad()
    {
        feat.zero_grad();
        gate.zero_grad();
    }

    Tensor<T> forward(const Tensor<T>& in)
    {
        a = feat.forward(in);
        gate_act = gate.forward(in);
        for (T& v : gate_act.v)
            v = T(1) / (T(1) + std::exp(-v));
        Tensor<T> out = a;
        for (size_t i = 0; i < out.v.size(); ++i)
            out.v[i] *= gate_act.v[i];
        return out;
    }

    Tensor<T> backward(const Tensor<T>& dout)
    {
        Tensor<T> da = dout, dz = dout;
        for (size_t i = 0; i < dout.v.size(); ++i) {
            const T s = gate_act.v[i];
            da.v[i] = dout.v[i] * s;
            dz.v[i] = dout.v[i] * a.v[i] * s * (T(1) - s);
        }
        Tensor<T> dx = feat.backward(da);
        Tensor<T> dx2 = gate.backward(dz);
        for (size_t i = 0; i < dx.v.size(); ++i)
            dx.v[i] += dx2.v[i];
        return dx;
    }
};

// ---- shape plumbing ----------------------------------------------------

// nearest-neighbor 2x upsample cropped to an exact target size
template <typename T>
inline Tensor<T> upsample_to(const Tensor<T>& in, uint32_t th, uint32_t tw)
{
    if (th < in.h || th > 2 * in.h || tw < in.w || tw > 2 * in.w)
        throw data_error("upsample_to: target size out of range");
    Tensor<T> out(in.n, in.c, th, tw);
    for (uint32_t n = 0; n < in.n; ++n)
        for (uint32_t c = 0; c < in.c; ++c)
            for (uint32_t y = 0; y < th; ++y)
                for (uint32_t x = 0; x < tw; ++x)
                    out.at(n, c, y, x) = in.at(n, c, y / 2, x / 2);
    return out;
}

template <typename T>
inline Tensor<T> upsample_to_backward(const Tensor<T>& dout, uint32_t ih, uint32_t iw)
{
    Tensor<T> din(dout.n, dout.c, ih, iw);
    for (uint32_t n = 0; n < dout.n; ++n)
        for (uint32_t c = 0; c < dout.c; ++c)
            for (uint32_t y = 0; y < dout.h; ++y)
                for (uint32_t x = 0; x < dout.w; ++x)
                    din.at(n, c, y / 2, x / 2) += dout.at(n, c, y, x);
    return din;
}

template <typename T>
inline Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b)
{
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw data_error("concat: shape mismatch");
    Tensor<T> out(a.n, a.c + b.c, a.h, a.w);
    for (uint32_t n = 0; n < a.n; ++n) {
        for (uint32_t c = 0; c < a.c; ++c)
            for (uint32_t y = 0; y < a.h; ++y)
                for (uint32_t x = 0; x < a.w; ++x)
                    out.at(n, c, y, x) = a.at(n, c, y, x);
        for (uint32_t c = 0; c < b.c; ++c)
            for (uint32_t y = 0; y < a.h; ++y)
                for (uint32_t x = 0; x < a.w; ++x)
                    out.at(n, a.c + c, y, x) = b.at(n, c, y, x);
    }
    return out;
}

template <typename T>
inline void split_channels(const Tensor<T>& d, uint32_t ca, Tensor<T>& da, Tensor<T>& db)
{
    da = Tensor<T>(d.n, ca, d.h, d.w);
    db = Tensor<T>(d.n, d.c - ca, d.h, d.w);
    for (uint32_t n = 0; n < d.n; ++n) {
        for (uint32_t c = 0; c < ca; ++c)
            for (uint32_t y = 0; y < d.h; ++y)
                for (uint32_t x = 0; x < d.w; ++x)
                    da.at(n, c, y, x) = d.at(n, c, y, x);
        for (uint32_t c = ca; c < d.c; ++c)
            for (uint32_t y = 0; y < d.h; ++y)
                for (uint32_t x = 0; x < d.w; ++x)
                    db.at(n, c - ca, y, x) = d.at(n, c, y, x);
    }
}

template <typename T>
inline void add_inplace(Tensor<T>& a, const Tensor<T>& b)
{
    assert(a.same_shape(b));
    for (size_t i = 0; i < a.v.size(); ++i)
        a.v[i] += b.v[i];
}

// ---- network topologies --------------------------------------------------

// Encoder-decoder recipe: enc_ch per level (first level stride 1, deeper levels
// stride 2), optional stride-1 bottleneck, skip concats on the way up, plain
// 3x3 head to out_ch.
struct NetRecipe {
    std::string id;
    uint32_t in_ch = 7;
    std::vector<uint32_t> enc_ch;
    bool bottleneck = false;
    uint32_t out_ch = 3;
};

// full-size inpainting net for the dynamic-object region
inline NetRecipe fg_recipe() { return {"fg", 7, {16, 32, 64}, false, 3}; }

// smaller net for the near-background rectangles
inline NetRecipe near_recipe() { return {"near", 7, {8, 16}, true, 3}; }

// thumb-sized net for numeric checks (same structure, ~1k params)
inline NetRecipe tiny_recipe() { return {"tiny", 7, {3, 4}, false, 3}; }

template <typename T>
struct Network {
    NetRecipe recipe;
    std::vector<GatedConv<T>> enc;
    std::vector<GatedConv<T>> mid; // zero or one bottleneck layer
    std::vector<GatedConv<T>> dec; // execution order, deepest level first
    Conv2d<T> head;

    // forward caches
    std::vector<Tensor<T>> skip;
    std::vector<std::array<uint32_t, 2>> preup;

    Network(const NetRecipe& r, uint64_t seed) : recipe(r)
    {
        if (r.enc_ch.size() < 2)
            throw config_error("network: need at least two encoder levels");
        const size_t levels = r.enc_ch.size();
        enc.emplace_back(r.in_ch, r.enc_ch[0], 1);
        for (size_t i = 1; i < levels; ++i)
            enc.emplace_back(r.enc_ch[i - 1], r.enc_ch[i], 2);
        if (r.bottleneck)
            mid.emplace_back(r.enc_ch[levels - 1], r.enc_ch[levels - 1], 1);
        for (size_t j = 0; j + 1 < levels; ++j) {
            const size_t lvl = levels - 2 - j;
            const uint32_t cur = j == 0 ? r.enc_ch[levels - 1] : r.enc_ch[lvl + 1];
            dec.emplace_back(cur + r.enc_ch[lvl], r.enc_ch[lvl], 1);
        }
        head = Conv2d<T>(r.enc_ch[0], r.out_ch, 1);
        rng rr(seed);
        for (auto& l : enc)
            l.init(rr);
        for (auto& l : mid)
            l.init(rr);
        for (auto& l : dec)
            l.init(rr);
        head.init(rr);
    }

    size_t param_count() const
    {
        size_t total = head.params();
        for (const auto& l : enc)
            total += l.params();
        for (const auto& l : mid)
            total += l.params();
        for (const auto& l : dec)
            total += l.params();
        return total;
    }

    void zero_grad()
    {
        for (auto& l : enc)
            l.zero_grad();
        for (auto& l : mid)
            l.zero_grad();
        for (auto& l : dec)
            l.zero_grad();
        head.zero_grad();
    }

    // fixed traversal order shared by the checkpoint format and the optimizer
    template <typename Fn>
    void for_each_param(Fn fn)
    {
        auto conv = [&](Conv2d<T>& c) {
            fn(c.w, c.gw);
            fn(c.b, c.gb);
        };
        for (auto& l : enc) {
            conv(l.feat);
            conv(l.gate);
        }
        for (auto& l : mid) {
            conv(l.feat);
            conv(l.gate);
        }
        for (auto& l : dec) {
            conv(l.feat);
            conv(l.gate);
        }
        conv(head);
    }

    template <typename Fn>
    void for_each_param(Fn fn) const
    {
        const_cast<Network*>(this)->for_each_param(
            [&](std::vector<T>& w, std::vector<T>& g) { fn(std::as_const(w), std::as_const(g)); });
    }

    Tensor<T> forward(const Tensor<T>& x)
    {
        const size_t levels = enc.size();
        skip.resize(levels);
        Tensor<T> a = x;
        for (size_t i = 0; i < levels; ++i) {
            a = enc[i].forward(a);
            skip[i] = a;
        }
        for (auto& m : mid)
            a = m.forward(a);
        preup.clear();
        for (size_t j = 0; j + 1 < levels; ++j) {
            const size_t lvl = levels - 2 - j;
            preup.push_back({a.h, a.w});
            Tensor<T> u = upsample_to(a, skip[lvl].h, skip[lvl].w);
            a = concat_channels(u, skip[lvl]);
            a = dec[j].forward(a);
        }
        return head.forward(a);
    }

    // returns gradient w.r.t. the input; parameter gradients accumulate
    Tensor<T> backward(const Tensor<T>& dpred)
    {
        const size_t levels = enc.size();
        std::vector<Tensor<T>> dskip(levels);
        Tensor<T> d = head.backward(dpred);
        for (size_t j = levels - 1; j-- > 0;) {
            const size_t lvl = levels - 2 - j;
            d = dec[j].backward(d);
            const uint32_t cur = j == 0 ? recipe.enc_ch[levels - 1] : recipe.enc_ch[lvl + 1];
            Tensor<T> du, ds;
            split_channels(d, cur, du, ds);
            if (dskip[lvl].v.empty())
                dskip[lvl] = ds;
            else
                add_inplace(dskip[lvl], ds);
            d = upsample_to_backward(du, preup[j][0], preup[j][1]);
        }
        for (size_t m = mid.size(); m-- > 0;)
            d = mid[m].backward(d);
        for (size_t i = levels; i-- > 0;) {
            if (!dskip[i].v.empty())
                add_inplace(d, dskip[i]);
            d = enc[i].backward(d);
        }
        return d;
    }
};

// ---- frozen feature extractor ---------------------------------------------

// Three conv+ReLU stages (8/16/32 channels, stride 2 between stages) with
// weights drawn once from a fixed seed and never trained; stands in for a
// pretrained perceptual backbone at this scale.
constexpr uint64_t kExtractorSeed = 0xFEED;

template <typename T>
struct FeatureExtractor {
    Conv2d<T> c1, c2, c3;
    std::array<Tensor<T>, 3> act; // post-ReLU caches of the latest pass

    explicit FeatureExtractor(uint64_t seed = kExtractorSeed)
        : c1(3, 8, 1), c2(8, 16, 2), c3(16, 32, 2)
    {
        rng r(seed);
        c1.init(r);
        c2.init(r);
        c3.init(r);
    }

    std::array<Tensor<T>, 3> features(const Tensor<T>& img)
    {
        auto relu = [](Tensor<T>& t) {
            for (T& v : t.v)
                v = v > T(0) ? v : T(0);
        };
        act[0] = c1.forward(img);
        relu(act[0]);
        act[1] = c2.forward(act[0]);
        relu(act[1]);
        act[2] = c3.forward(act[1]);
        relu(act[2]);
        return act;
    }

    // gradient w.r.t. the image of the latest features() pass; weights frozen
    Tensor<T> backward(const std::array<Tensor<T>, 3>& dphi)
    {
        auto relu_bwd = [](Tensor<T>& d, const Tensor<T>& a) {
            for (size_t i = 0; i < d.v.size(); ++i)
                if (a.v[i] <= T(0))
                    d.v[i] = T(0);
        };
        Tensor<T> d = dphi[2];
        relu_bwd(d, act[2]);
        d = c3.backward(d);
        add_inplace(d, dphi[1]);
        relu_bwd(d, act[1]);
        d = c2.backward(d);
        add_inplace(d, dphi[0]);
        relu_bwd(d, act[0]);
        return c1.backward(d);
    }
};

// ---- loss -------------------------------------------------------------

struct LossWeights {
    float l1 = 1.0f;
    float hole = 0.5f;
    float valid = 0.5f;
    float perceptual = 0.1f;
    float style = 0.01f;
};

template <typename T>
struct LossResult {
    T value = T(0);
    Tensor<T> dpred;
};

// Masked L1 pixel terms plus perceptual and Gram-style terms through the
// frozen extractor. hole is 1 on valid pixels, 0 in holes. All terms are means
// over their elements, so the loss is batch-permutation invariant.
template <typename T>
LossResult<T> compute_loss(const Tensor<T>& pred, const Tensor<T>& truth, const Tensor<T>& hole,
                           const LossWeights& wt, FeatureExtractor<T>& feat)
{
    if (!pred.same_shape(truth))
        throw data_error("loss: pred/truth shape mismatch");
    if (pred.c != 3)
        throw data_error("loss: expected 3-channel prediction");
    if (hole.n != pred.n || hole.c != 1 || hole.h != pred.h || hole.w != pred.w)
        throw data_error("loss: hole mask shape mismatch");

    // accumulate at one precision level above T so the reported value is
    // steady enough for finite-difference probing
    using acc_t = std::conditional_t<std::is_same_v<T, float>, double, long double>;
    LossResult<T> res;
    res.dpred = Tensor<T>(pred.n, pred.c, pred.h, pred.w);
    acc_t value = 0;
    const acc_t inv_m = acc_t(1) / acc_t(pred.size());
    auto sign = [](T d) { return d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0)); };

    for (uint32_t n = 0; n < pred.n; ++n)
        for (uint32_t c = 0; c < 3; ++c)
            for (uint32_t y = 0; y < pred.h; ++y)
                for (uint32_t x = 0; x < pred.w; ++x) {
                    const T d = pred.at(n, c, y, x) - truth.at(n, c, y, x);
                    const T m = hole.at(n, 0, y, x);
                    const T coeff = T(wt.l1) + T(wt.hole) * (T(1) - m) + T(wt.valid) * m;
                    value += acc_t(coeff) * std::abs(acc_t(d)) * inv_m;
                    res.dpred.at(n, c, y, x) = coeff * sign(d) * T(inv_m);
                }

    if (wt.perceptual > 0.0f || wt.style > 0.0f) {
        // truth features first so the extractor caches belong to pred
        std::array<Tensor<T>, 3> phi_t = feat.features(truth);
        std::array<Tensor<T>, 3> phi_p = feat.features(pred);
        std::array<Tensor<T>, 3> dphi;
        for (int s = 0; s < 3; ++s) {
            const Tensor<T>& p = phi_p[size_t(s)];
            const Tensor<T>& t = phi_t[size_t(s)];
            dphi[size_t(s)] = Tensor<T>(p.n, p.c, p.h, p.w);
            const acc_t inv = acc_t(1) / acc_t(p.size());
            if (wt.perceptual > 0.0f)
                for (size_t i = 0; i < p.v.size(); ++i) {
                    const T d = p.v[i] - t.v[i];
                    value += acc_t(wt.perceptual) * std::abs(acc_t(d)) * inv;
                    dphi[size_t(s)].v[i] += T(wt.perceptual) * sign(d) * T(inv);
                }
            if (wt.style > 0.0f) {
                const uint32_t C = p.c, HW = p.h * p.w;
                const acc_t inv_f = acc_t(1) / acc_t(C * HW); // Gram normalizer
                const acc_t inv_g = acc_t(1) / acc_t(size_t(p.n) * C * C);
                std::vector<acc_t> gp(size_t(C) * C), gt(size_t(C) * C);
                for (uint32_t n = 0; n < p.n; ++n) {
                    const size_t base = size_t(n) * C * HW;
                    for (uint32_t c1 = 0; c1 < C; ++c1)
                        for (uint32_t c2 = 0; c2 <= c1; ++c2) {
                            acc_t ap = 0, at = 0;
                            const T* p1 = &p.v[base + size_t(c1) * HW];
                            const T* p2 = &p.v[base + size_t(c2) * HW];
                            const T* t1 = &t.v[base + size_t(c1) * HW];
                            const T* t2 = &t.v[base + size_t(c2) * HW];
                            for (uint32_t i = 0; i < HW; ++i) {
                                ap += acc_t(p1[i]) * acc_t(p2[i]);
                                at += acc_t(t1[i]) * acc_t(t2[i]);
                            }
                            gp[size_t(c1) * C + c2] = gp[size_t(c2) * C + c1] = ap * inv_f;
                            gt[size_t(c1) * C + c2] = gt[size_t(c2) * C + c1] = at * inv_f;
                        }
                    std::vector<acc_t> dg(size_t(C) * C);
                    for (uint32_t c1 = 0; c1 < C; ++c1)
                        for (uint32_t c2 = 0; c2 < C; ++c2) {
                            const acc_t d = gp[size_t(c1) * C + c2] - gt[size_t(c1) * C + c2];
                            value += acc_t(wt.style) * std::abs(d) * inv_g;
                            dg[size_t(c1) * C + c2] =
                                acc_t(wt.style) * (d > 0 ? acc_t(1) : (d < 0 ? acc_t(-1) : acc_t(0))) * inv_g;
                        }
                    // dF = (dG + dG^T) F / (C*HW)
                    for (uint32_t c1 = 0; c1 < C; ++c1) {
                        T* out = &dphi[size_t(s)].v[base + size_t(c1) * HW];
                        for (uint32_t c2 = 0; c2 < C; ++c2) {
                            const acc_t coeff =
                                (dg[size_t(c1) * C + c2] + dg[size_t(c2) * C + c1]) * inv_f;
                            if (coeff == acc_t(0))
                                continue;
                            const T* src = &p.v[base + size_t(c2) * HW];
                            for (uint32_t i = 0; i < HW; ++i)
                                out[i] += T(coeff * acc_t(src[i]));
                        }
                    }
                }
            }
        }
        Tensor<T> dimg = feat.backward(dphi);
        add_inplace(res.dpred, dimg);
    }

    res.value = T(value);
    return res;
}

// ---- network inputs -----------------------------------------------------

// 8-neighbor local binary pattern: bit b set when that neighbor >= center,
// clockwise from the top-left, borders clamped, normalized by /255.
inline ImagePlane lbp_map(const ImagePlane& gray)
{
    if (gray.channels != 1)
        throw data_error("lbp_map: expected single channel");
    static const int off[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {1, 0},
                                  {1, 1},   {0, 1},  {-1, 1}, {-1, 0}};
    ImagePlane out(gray.width, gray.height, 1);
    for (uint32_t y = 0; y < gray.height; ++y)
        for (uint32_t x = 0; x < gray.width; ++x) {
            const float center = gray.at(x, y);
            uint32_t code = 0;
            for (int b = 0; b < 8; ++b) {
                const uint32_t nx = uint32_t(
                    std::clamp(int(x) + off[b][0], 0, int(gray.width) - 1));
                const uint32_t ny = uint32_t(
                    std::clamp(int(y) + off[b][1], 0, int(gray.height) - 1));
                if (gray.at(nx, ny) >= center)
                    code |= 1u << b;
            }
            out.at(x, y) = float(code) / 255.0f;
        }
    return out;
}

// 7-channel network input: warped RGB, hole mask, roughness, metallic,
// LBP of the warped luma.
inline Tensor<float> assemble_input(const WarpResult& warped, const ImagePlane& roughness,
                                    const ImagePlane& metallic)
{
    if (warped.color.channels != 3)
        throw data_error("assemble_input: expected RGB warp");
    ImagePlane lbp = lbp_map(luma(warped.color));
    return tensor_from_planes<float>(
        {&warped.color, &warped.hole_mask, &roughness, &metallic, &lbp});
}

inline Tensor<float> assemble_input(const WarpResult& warped, const TargetGuide& guide)
{
    return assemble_input(warped, *guide.roughness, *guide.metallic);
}

// Residual parameterization shared by training and inference: the network
// predicts a correction on top of the warped color, which is the leading
// channels of its own input.
template <typename T>
void add_color_residual(Tensor<T>& pred, const Tensor<T>& input)
{
    if (pred.n != input.n || pred.h != input.h || pred.w != input.w || input.c < pred.c)
        throw data_error("add_color_residual: shape mismatch");
    for (uint32_t n = 0; n < pred.n; ++n)
        for (uint32_t c = 0; c < pred.c; ++c)
            for (uint32_t y = 0; y < pred.h; ++y)
                for (uint32_t x = 0; x < pred.w; ++x)
                    pred.at(n, c, y, x) += input.at(n, c, y, x);
}

// Keep warped values wherever they are valid; network output fills only the
// holes inside its region.
inline ImagePlane composite_prediction(const ImagePlane& warped, const ImagePlane& pred,
                                       const ImagePlane& hole_mask, const ImagePlane& region)
{
    require_same_shape(warped, pred, "composite_prediction");
    if (hole_mask.width != warped.width || hole_mask.height != warped.height ||
        hole_mask.channels != 1 || region.channels != 1 ||
        region.width != warped.width || region.height != warped.height)
        throw data_error("composite_prediction: mask shape mismatch");
    ImagePlane out = warped;
    for (uint32_t y = 0; y < out.height; ++y)
        for (uint32_t x = 0; x < out.width; ++x)
            if (region.at(x, y) > 0.5f && hole_mask.at(x, y) < 0.5f)
                for (uint32_t c = 0; c < out.channels; ++c)
                    out.at(x, y, c) = pred.at(x, y, c);
    return out;
}

// ---- checkpoints ------------------------------------------------------
// magic "PXNN", u32 version, recipe (id, channels, bottleneck), then every
// parameter tensor in traversal order as u64 count + f32 little-endian data.

inline void save_network(const std::filesystem::path& path, const Network<float>& net)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw data_error("save_network: cannot open " + path.string());
    os.write("PXNN", 4);
    put_u32le(os, 1);
    put_u32le(os, uint32_t(net.recipe.id.size()));
    os.write(net.recipe.id.data(), std::streamsize(net.recipe.id.size()));
    put_u32le(os, net.recipe.in_ch);
    put_u32le(os, net.recipe.out_ch);
    put_u32le(os, uint32_t(net.recipe.enc_ch.size()));
    for (uint32_t c : net.recipe.enc_ch)
        put_u32le(os, c);
    put_u32le(os, net.recipe.bottleneck ? 1 : 0);
    size_t tensors = 0;
    net.for_each_param([&](const std::vector<float>&, const std::vector<float>&) { ++tensors; });
    put_u32le(os, uint32_t(tensors));
    net.for_each_param([&](const std::vector<float>& w, const std::vector<float>&) {
        put_u64le(os, w.size());
        for (float v : w)
            put_f32le(os, v);
    });
    if (!os)
        throw data_error("save_network: short write to " + path.string());
}

inline Network<float> load_network(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw data_error("load_network: cannot open " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "PXNN", 4) != 0)
        throw data_error("load_network: malformed header in " + path.string());
    uint32_t version = 0, id_len = 0;
    if (!get_u32le(is, version) || version != 1 || !get_u32le(is, id_len) || id_len > 64)
        throw data_error("load_network: malformed header in " + path.string());
    std::string id(id_len, '\0');
    if (!is.read(id.data(), id_len))
        throw data_error("load_network: malformed header in " + path.string());
    NetRecipe recipe;
    recipe.id = id;
    uint32_t enc_count = 0, bottleneck = 0;
    if (!get_u32le(is, recipe.in_ch) || !get_u32le(is, recipe.out_ch) ||
        !get_u32le(is, enc_count) || enc_count < 2 || enc_count > 16)
        throw data_error("load_network: malformed recipe in " + path.string());
    recipe.enc_ch.resize(enc_count);
    for (uint32_t& c : recipe.enc_ch)
        if (!get_u32le(is, c) || c == 0)
            throw data_error("load_network: malformed recipe in " + path.string());
    if (!get_u32le(is, bottleneck))
        throw data_error("load_network: malformed recipe in " + path.string());
    recipe.bottleneck = bottleneck != 0;

    Network<float> net(recipe, 0);
    uint32_t tensors = 0;
    size_t expect = 0;
    net.for_each_param([&](std::vector<float>&, std::vector<float>&) { ++expect; });
    if (!get_u32le(is, tensors) || tensors != expect)
        throw data_error("load_network: layer manifest mismatch in " + path.string());
    bool ok = true;
    net.for_each_param([&](std::vector<float>& w, std::vector<float>&) {
        uint64_t count = 0;
        if (!ok || !get_u64le(is, count) || count != w.size()) {
            ok = false;
            return;
        }
        for (float& v : w)
            if (!get_f32le(is, v)) {
                ok = false;
                return;
            }
    });
    if (!ok)
        throw data_error("load_network: parameter payload mismatch in " + path.string());
    return net;
}

} // namespace px

#endif // PATCHEX_NEURAL_HPP
