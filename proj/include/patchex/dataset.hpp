#ifndef PATCHEX_DATASET_HPP
#define PATCHEX_DATASET_HPP

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "scene.hpp"

namespace px {

// On-disk layout: <dir>/manifest.json plus one directory per emitted frame
// (frame_00000, frame_00001, ...) holding color.pfex and the ten G-buffer
// planes. The color plane is linear radiance and doubles as the pre-tonemap
// HDR color; there is no separate buffer for it.

inline const std::vector<std::string>& dataset_buffer_names()
{
    static const std::vector<std::string> names = {
        "color",        "base_color", "metallic",      "specular",    "roughness", "depth",
        "world_normal", "stencil",    "motion_vector", "shadow_mask", "nov"};
    return names;
}

struct DatasetManifest {
    uint32_t width = 0, height = 0;
    uint32_t emitted_frames = 0;
    uint32_t integer_frames = 0;
    double time_step = 0.5;
    uint64_t seed = 0;
    float shadow_attenuation = 0.5f;
    std::vector<std::string> buffers;
};

inline std::string frame_dir_name(uint32_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%05u", index);
    return buf;
}

inline void write_dataset(const std::filesystem::path& dir, const std::vector<FrameRecord>& frames,
                          const SceneSpec& spec, bool overwrite = false)
{
    namespace fs = std::filesystem;
    if (frames.empty())
        throw data_error("write_dataset: no frames");
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!overwrite)
            throw data_error("write_dataset: " + dir.string() + " exists and is not empty");
        fs::remove_all(dir);
    }
    fs::create_directories(dir);

    nlohmann::ordered_json m;
    m["width"] = frames[0].color.width;
    m["height"] = frames[0].color.height;
    m["emitted_frames"] = uint32_t(frames.size());
    m["integer_frames"] = uint32_t((frames.size() + 1) / 2);
    m["time_step"] = 0.5;
    m["seed"] = spec.seed;
    m["shadow_attenuation"] = spec.light.attenuation;
    m["buffers"] = dataset_buffer_names();
    std::ofstream mo(dir / "manifest.json");
    mo << m.dump(2) << "\n";
    if (!mo)
        throw data_error("write_dataset: cannot write manifest");

    for (uint32_t i = 0; i < frames.size(); ++i) {
        const FrameRecord& fr = frames[i];
        fs::path fd = dir / frame_dir_name(i);
        fs::create_directories(fd);
        write_plane(fd / "color.pfex", fr.color);
        write_plane(fd / "base_color.pfex", fr.g.base_color);
        write_plane(fd / "metallic.pfex", fr.g.metallic);
        write_plane(fd / "specular.pfex", fr.g.specular);
        write_plane(fd / "roughness.pfex", fr.g.roughness);
        write_plane(fd / "depth.pfex", fr.g.depth);
        write_plane(fd / "world_normal.pfex", fr.g.world_normal);
        write_plane(fd / "stencil.pfex", fr.g.stencil);
        write_plane(fd / "motion_vector.pfex", fr.g.motion_vector);
        write_plane(fd / "shadow_mask.pfex", fr.g.shadow_mask);
        write_plane(fd / "nov.pfex", fr.g.nov);
    }
}

inline DatasetManifest read_manifest(const std::filesystem::path& dir)
{
    std::ifstream is(dir / "manifest.json");
    if (!is)
        throw data_error("read_manifest: cannot open " + (dir / "manifest.json").string());
    nlohmann::json m;
    try {
        is >> m;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("read_manifest: bad json: ") + e.what());
    }
    DatasetManifest out;
    try {
        out.width = m.at("width").get<uint32_t>();
        out.height = m.at("height").get<uint32_t>();
        out.emitted_frames = m.at("emitted_frames").get<uint32_t>();
        out.integer_frames = m.at("integer_frames").get<uint32_t>();
        out.time_step = m.at("time_step").get<double>();
        out.seed = m.at("seed").get<uint64_t>();
        out.shadow_attenuation = m.at("shadow_attenuation").get<float>();
        out.buffers = m.at("buffers").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("read_manifest: missing field: ") + e.what());
    }
    return out;
}

inline FrameRecord read_frame(const std::filesystem::path& dir, uint32_t index)
{
    namespace fs = std::filesystem;
    fs::path fd = dir / frame_dir_name(index);
    FrameRecord fr;
    fr.t = 0.5 * index;
    fr.color = read_plane(fd / "color.pfex");
    fr.g.base_color = read_plane(fd / "base_color.pfex");
    fr.g.metallic = read_plane(fd / "metallic.pfex");
    fr.g.specular = read_plane(fd / "specular.pfex");
    fr.g.roughness = read_plane(fd / "roughness.pfex");
    fr.g.depth = read_plane(fd / "depth.pfex");
    fr.g.world_normal = read_plane(fd / "world_normal.pfex");
    fr.g.stencil = read_plane(fd / "stencil.pfex");
    fr.g.motion_vector = read_plane(fd / "motion_vector.pfex");
    fr.g.shadow_mask = read_plane(fd / "shadow_mask.pfex");
    fr.g.nov = read_plane(fd / "nov.pfex");
    return fr;
}

} // namespace px

#endif
