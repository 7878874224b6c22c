#ifndef PATCHEX_CONFIG_HPP
#define PATCHEX_CONFIG_HPP

#include "pipeline.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace px {

// Every tunable the tool accepts from a JSON config file. Parsing is strict:
// unknown keys and wrong types are configuration errors, so typos fail loudly
// instead of silently running on defaults.
struct ToolConfig {
    PipelineConfig pipe;
    TrainConfig fg_train;
    TrainConfig near_train;
    uint32_t crop = 64;
    uint32_t crops_per_region = 2;
};

namespace detail {

inline void require_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                         const std::string& where)
{
    if (!obj.is_object())
        throw config_error("config: '" + where + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw config_error("config: unknown key '" + where + "." + it.key() + "'");
}

template <typename T>
void fetch(const nlohmann::json& obj, const char* key, T& out, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end())
        return;
    // json's own get<> coerces booleans to numbers; require the natural type
    const bool ok = std::is_same_v<T, bool> ? it->is_boolean()
                    : std::is_arithmetic_v<T> ? it->is_number()
                                              : true;
    if (!ok)
        throw config_error("config: '" + where + "." + key + "' has the wrong type");
    try {
        out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error("config: '" + where + "." + key + "' has the wrong type");
    }
}

inline void parse_train(const nlohmann::json& obj, TrainConfig& t, const std::string& where)
{
    require_keys(obj, {"lr", "beta1", "beta2", "eps", "epochs", "batch", "seed", "cosine_lr"},
                 where);
    fetch(obj, "lr", t.lr, where);
    fetch(obj, "beta1", t.beta1, where);
    fetch(obj, "beta2", t.beta2, where);
    fetch(obj, "eps", t.eps, where);
    fetch(obj, "epochs", t.epochs, where);
    fetch(obj, "batch", t.batch, where);
    fetch(obj, "seed", t.seed, where);
    fetch(obj, "cosine_lr", t.cosine_lr, where);
}

} // namespace detail

inline ToolConfig parse_config(const nlohmann::json& root)
{
    using detail::fetch;
    detail::require_keys(root,
                         {"scale", "threads", "foveated", "shadow_partition", "region_pad",
                          "warp", "invalid", "segmentation", "loss", "train"},
                         "config");
    ToolConfig c;
    fetch(root, "scale", c.pipe.scale, "config");
    fetch(root, "threads", c.pipe.threads, "config");
    fetch(root, "foveated", c.pipe.foveated, "config");
    fetch(root, "shadow_partition", c.pipe.shadow_partition, "config");
    fetch(root, "region_pad", c.pipe.region_pad, "config");
    if (!(c.pipe.scale > 0.0f && c.pipe.scale < 1.0f))
        throw config_error("config: scale must lie in (0, 1)");
    if (c.pipe.threads < 1)
        throw config_error("config: threads must be at least 1");

    if (auto it = root.find("warp"); it != root.end()) {
        detail::require_keys(*it, {"k", "sigma_s", "sigma_n", "sigma_d_rel", "sigma_a", "w_min"},
                             "warp");
        fetch(*it, "k", c.pipe.warp.k, "warp");
        fetch(*it, "sigma_s", c.pipe.warp.sigma_s, "warp");
        fetch(*it, "sigma_n", c.pipe.warp.sigma_n, "warp");
        fetch(*it, "sigma_d_rel", c.pipe.warp.sigma_d_rel, "warp");
        fetch(*it, "sigma_a", c.pipe.warp.sigma_a, "warp");
        fetch(*it, "w_min", c.pipe.warp.w_min, "warp");
    }
    if (auto it = root.find("invalid"); it != root.end()) {
        detail::require_keys(*it, {"tau_d", "tau_n"}, "invalid");
        fetch(*it, "tau_d", c.pipe.invalid.tau_d, "invalid");
        fetch(*it, "tau_n", c.pipe.invalid.tau_n, "invalid");
    }
    if (auto it = root.find("segmentation"); it != root.end()) {
        detail::require_keys(*it, {"k_x", "k_y"}, "segmentation");
        fetch(*it, "k_x", c.pipe.seg.k_x, "segmentation");
        fetch(*it, "k_y", c.pipe.seg.k_y, "segmentation");
    }

    LossWeights loss;
    if (auto it = root.find("loss"); it != root.end()) {
        detail::require_keys(*it, {"l1", "hole", "valid", "perceptual", "style"}, "loss");
        fetch(*it, "l1", loss.l1, "loss");
        fetch(*it, "hole", loss.hole, "loss");
        fetch(*it, "valid", loss.valid, "loss");
        fetch(*it, "perceptual", loss.perceptual, "loss");
        fetch(*it, "style", loss.style, "loss");
    }
    c.fg_train.loss = loss;
    c.near_train.loss = loss;

    if (auto it = root.find("train"); it != root.end()) {
        detail::require_keys(*it, {"fg", "near", "crop", "crops_per_region"}, "train");
        if (auto fg = it->find("fg"); fg != it->end())
            detail::parse_train(*fg, c.fg_train, "train.fg");
        if (auto nr = it->find("near"); nr != it->end())
            detail::parse_train(*nr, c.near_train, "train.near");
        fetch(*it, "crop", c.crop, "train");
        fetch(*it, "crops_per_region", c.crops_per_region, "train");
    }
    return c;
}

inline ToolConfig load_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw config_error("config: cannot open " + path.string());
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(root);
}

// Stable fingerprint of the effective settings, recorded in run manifests so
// two runs are comparable only when their hashes agree.
inline std::string config_hash(const ToolConfig& c)
{
    nlohmann::ordered_json j;
    j["scale"] = c.pipe.scale;
    j["foveated"] = c.pipe.foveated;
    j["shadow_partition"] = c.pipe.shadow_partition;
    j["region_pad"] = c.pipe.region_pad;
    j["warp"] = {c.pipe.warp.k, c.pipe.warp.sigma_s, c.pipe.warp.sigma_n, c.pipe.warp.sigma_d_rel,
                 c.pipe.warp.sigma_a, c.pipe.warp.w_min};
    j["invalid"] = {c.pipe.invalid.tau_d, c.pipe.invalid.tau_n};
    j["segmentation"] = {c.pipe.seg.k_x, c.pipe.seg.k_y};
    j["loss"] = {c.fg_train.loss.l1, c.fg_train.loss.hole, c.fg_train.loss.valid,
                 c.fg_train.loss.perceptual, c.fg_train.loss.style};
    j["train"] = {c.fg_train.lr, c.fg_train.epochs, c.fg_train.batch, c.fg_train.seed,
                  c.near_train.lr, c.near_train.epochs, c.near_train.batch, c.near_train.seed,
                  c.crop, c.crops_per_region};
    const std::string s = j.dump();
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(s.data(), s.size())));
    return buf;
}

} // namespace px

#endif
