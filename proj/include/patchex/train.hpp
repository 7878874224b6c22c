#ifndef PATCHEX_TRAIN_HPP
#define PATCHEX_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "patchex/neural.hpp"

namespace px {

struct TrainConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
    uint32_t epochs = 100;
    uint32_t batch = 16;
    uint64_t seed = 1;
    bool cosine_lr = true; // anneal lr to ~0 across the epoch budget
    LossWeights loss;
};

// one training triple; every tensor has batch dimension 1
struct TrainSample {
    Tensor<float> input; // network input channels
    Tensor<float> truth; // ground-truth RGB
    Tensor<float> hole;  // 1 = valid, 0 = hole
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> curve;
    size_t train_count = 0;
    size_t val_count = 0;
};

struct AdamState {
    std::vector<std::vector<float>> m, v;
    uint64_t t = 0;

    void init(Network<float>& net)
    {
        m.clear();
        v.clear();
        net.for_each_param([&](std::vector<float>& w, std::vector<float>&) {
            m.emplace_back(w.size(), 0.0f);
            v.emplace_back(w.size(), 0.0f);
        });
    }

    void step(Network<float>& net, const TrainConfig& cfg, float lr_scale = 1.0f)
    {
        ++t;
        const float lr = cfg.lr * lr_scale;
        const float corr1 = 1.0f - float(std::pow(double(cfg.beta1), double(t)));
        const float corr2 = 1.0f - float(std::pow(double(cfg.beta2), double(t)));
        size_t k = 0;
        net.for_each_param([&](std::vector<float>& w, std::vector<float>& g) {
            std::vector<float>& mk = m[k];
            std::vector<float>& vk = v[k];
            ++k;
            for (size_t i = 0; i < w.size(); ++i) {
                mk[i] = cfg.beta1 * mk[i] + (1.0f - cfg.beta1) * g[i];
                vk[i] = cfg.beta2 * vk[i] + (1.0f - cfg.beta2) * g[i] * g[i];
                const float mhat = mk[i] / corr1;
                const float vhat = vk[i] / corr2;
                w[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
            }
        });
    }
};

// seeded shuffle, then 80:20 split (sizes rounded, never an empty train side)
inline std::pair<std::vector<size_t>, std::vector<size_t>> split_dataset(size_t count,
                                                                         uint64_t seed)
{
    if (count == 0)
        throw data_error("split_dataset: empty dataset");
    std::vector<size_t> idx(count);
    std::iota(idx.begin(), idx.end(), size_t(0));
    rng r(seed);
    r.shuffle(idx);
    size_t train_count = size_t(std::llround(0.8 * double(count)));
    train_count = std::max<size_t>(1, std::min(train_count, count));
    std::vector<size_t> train(idx.begin(), idx.begin() + std::ptrdiff_t(train_count));
    std::vector<size_t> val(idx.begin() + std::ptrdiff_t(train_count), idx.end());
    return {std::move(train), std::move(val)};
}

namespace detail {

inline void stack_batch(const std::vector<TrainSample>& data, const std::vector<size_t>& order,
                        size_t b0, size_t b1, Tensor<float>& xb, Tensor<float>& tb,
                        Tensor<float>& hb)
{
    const TrainSample& first = data[order[b0]];
    const uint32_t bn = uint32_t(b1 - b0);
    xb = Tensor<float>(bn, first.input.c, first.input.h, first.input.w);
    tb = Tensor<float>(bn, first.truth.c, first.truth.h, first.truth.w);
    hb = Tensor<float>(bn, first.hole.c, first.hole.h, first.hole.w);
    for (size_t i = b0; i < b1; ++i) {
        const TrainSample& s = data[order[i]];
        if (!s.input.same_shape(first.input) || !s.truth.same_shape(first.truth) ||
            !s.hole.same_shape(first.hole))
            throw data_error("train: samples must share one crop size");
        const size_t bi = i - b0;
        std::copy(s.input.v.begin(), s.input.v.end(),
                  xb.v.begin() + std::ptrdiff_t(bi * s.input.size()));
        std::copy(s.truth.v.begin(), s.truth.v.end(),
                  tb.v.begin() + std::ptrdiff_t(bi * s.truth.size()));
        std::copy(s.hole.v.begin(), s.hole.v.end(),
                  hb.v.begin() + std::ptrdiff_t(bi * s.hole.size()));
    }
}

inline double eval_loss(Network<float>& net, const std::vector<TrainSample>& data,
                        const std::vector<size_t>& order, uint32_t batch,
                        const LossWeights& wts, FeatureExtractor<float>& feat)
{
    double acc = 0.0;
    Tensor<float> xb, tb, hb;
    for (size_t b0 = 0; b0 < order.size(); b0 += batch) {
        const size_t b1 = std::min(order.size(), b0 + batch);
        stack_batch(data, order, b0, b1, xb, tb, hb);
        Tensor<float> pred = net.forward(xb);
        add_color_residual(pred, xb);
        LossResult<float> l = compute_loss(pred, tb, hb, wts, feat);
        acc += double(l.value) * double(b1 - b0);
    }
    return acc / double(order.size());
}

} // namespace detail

// Deterministic Adam training loop: seeded 80:20 split, seeded per-epoch
// shuffle, batched steps, optional cosine lr decay, end-of-epoch train and
// validation losses.  The network is fit as a residual on top of the warped
// color channels of its input.
inline TrainResult train_network(Network<float>& net, const std::vector<TrainSample>& data,
                                 const TrainConfig& cfg, FeatureExtractor<float>& feat)
{
    if (data.empty())
        throw data_error("train: empty dataset");
    if (cfg.batch == 0 || cfg.epochs == 0)
        throw config_error("train: batch and epochs must be positive");
    for (const TrainSample& s : data)
        if (s.input.c != net.recipe.in_ch || s.truth.c != net.recipe.out_ch || s.hole.c != 1 ||
            s.input.n != 1 || s.truth.h != s.input.h || s.truth.w != s.input.w ||
            s.hole.h != s.input.h || s.hole.w != s.input.w)
            throw data_error("train: malformed sample");

    auto [train_idx, val_idx] = split_dataset(data.size(), cfg.seed);
    TrainResult result;
    result.train_count = train_idx.size();
    result.val_count = val_idx.size();

    AdamState opt;
    opt.init(net);
    rng shuffler(cfg.seed ^ 0x5eedf00dULL);
    Tensor<float> xb, tb, hb;
    for (uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffler.shuffle(train_idx);
        const float lr_scale =
            cfg.cosine_lr
                ? float(0.5 * (1.0 + std::cos(std::numbers::pi * double(epoch) / double(cfg.epochs))))
                : 1.0f;
        for (size_t b0 = 0; b0 < train_idx.size(); b0 += cfg.batch) {
            const size_t b1 = std::min(train_idx.size(), b0 + cfg.batch);
            detail::stack_batch(data, train_idx, b0, b1, xb, tb, hb);
            net.zero_grad();
            Tensor<float> pred = net.forward(xb);
            add_color_residual(pred, xb);
            LossResult<float> l = compute_loss(pred, tb, hb, cfg.loss, feat);
            if (!std::isfinite(l.value))
                throw numeric_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(b0 / cfg.batch));
            net.backward(l.dpred);
            opt.step(net, cfg, lr_scale);
        }
        // end-of-epoch losses, so the curve reflects the model state and not
        // the shuffle order the batches happened to arrive in
        EpochStats stats;
        stats.train_loss = detail::eval_loss(net, data, train_idx, cfg.batch, cfg.loss, feat);
        stats.val_loss = val_idx.empty()
                             ? stats.train_loss
                             : detail::eval_loss(net, data, val_idx, cfg.batch, cfg.loss, feat);
        result.curve.push_back(stats);
    }
    return result;
}

} // namespace px

#endif // PATCHEX_TRAIN_HPP
