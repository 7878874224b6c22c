#ifndef PATCHEX_IMAGE_HPP
#define PATCHEX_IMAGE_HPP

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "common.hpp"

namespace px {

// Row-major, channel-interleaved f32 image. The single container every module
// shares; motion fields are 2-channel planes, masks 1-channel.
struct ImagePlane {
    uint32_t width = 0;
    uint32_t height = 0;
    uint32_t channels = 0;
    std::vector<float> data;

    ImagePlane() = default;
    ImagePlane(uint32_t w, uint32_t h, uint32_t c, float fill = 0.0f)
        : width(w), height(h), channels(c), data(size_t(w) * h * c, fill)
    {
        assert(w > 0 && h > 0 && c > 0);
    }

    size_t index(uint32_t x, uint32_t y, uint32_t c = 0) const
    {
        return (size_t(y) * width + x) * channels + c;
    }
    float& at(uint32_t x, uint32_t y, uint32_t c = 0) { return data[index(x, y, c)]; }
    float at(uint32_t x, uint32_t y, uint32_t c = 0) const { return data[index(x, y, c)]; }

    size_t value_count() const { return data.size(); }
    size_t pixel_count() const { return size_t(width) * height; }
    bool same_shape(const ImagePlane& o) const
    {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

using MotionField = ImagePlane; // 2 channels: x and y displacement, backward convention

inline void require_same_shape(const ImagePlane& a, const ImagePlane& b, const char* what)
{
    if (!a.same_shape(b))
        throw data_error(std::string(what) + ": plane shapes differ");
}

// ---- arithmetic ----

inline ImagePlane plane_add(const ImagePlane& a, const ImagePlane& b)
{
    require_same_shape(a, b, "plane_add");
    ImagePlane out = a;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] += b.data[i];
    return out;
}

inline ImagePlane plane_sub(const ImagePlane& a, const ImagePlane& b)
{
    require_same_shape(a, b, "plane_sub");
    ImagePlane out = a;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] -= b.data[i];
    return out;
}

inline ImagePlane plane_mul(const ImagePlane& a, const ImagePlane& b)
{
    require_same_shape(a, b, "plane_mul");
    ImagePlane out = a;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] *= b.data[i];
    return out;
}

inline ImagePlane plane_scale(const ImagePlane& a, float s)
{
    ImagePlane out = a;
    for (float& v : out.data)
        v *= s;
    return out;
}

// sign-preserving denominator guard: |d| is never allowed below 1e-6
inline float guarded(float d)
{
    if (d >= 0.0f)
        return std::max(d, 1e-6f);
    return std::min(d, -1e-6f);
}

inline ImagePlane plane_div(const ImagePlane& a, const ImagePlane& b)
{
    require_same_shape(a, b, "plane_div");
    ImagePlane out = a;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] /= guarded(b.data[i]);
    return out;
}

inline float plane_max_abs_diff(const ImagePlane& a, const ImagePlane& b)
{
    require_same_shape(a, b, "plane_max_abs_diff");
    float m = 0.0f;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

inline double plane_mean_abs_diff(const ImagePlane& a, const ImagePlane& b)
{
    require_same_shape(a, b, "plane_mean_abs_diff");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        s += std::fabs(double(a.data[i]) - double(b.data[i]));
    return a.data.empty() ? 0.0 : s / double(a.data.size());
}

inline ImagePlane extract_channel(const ImagePlane& a, uint32_t c)
{
    assert(c < a.channels);
    ImagePlane out(a.width, a.height, 1);
    for (uint32_t y = 0; y < a.height; ++y)
        for (uint32_t x = 0; x < a.width; ++x)
            out.at(x, y) = a.at(x, y, c);
    return out;
}

// Rec.601 luma
inline ImagePlane luma(const ImagePlane& rgb)
{
    if (rgb.channels == 1)
        return rgb;
    if (rgb.channels < 3)
        throw data_error("luma: need 1 or >=3 channels");
    ImagePlane out(rgb.width, rgb.height, 1);
    for (uint32_t y = 0; y < rgb.height; ++y)
        for (uint32_t x = 0; x < rgb.width; ++x)
            out.at(x, y) = 0.299f * rgb.at(x, y, 0) + 0.587f * rgb.at(x, y, 1) + 0.114f * rgb.at(x, y, 2);
    return out;
}

inline ImagePlane clamp01(const ImagePlane& a)
{
    ImagePlane out = a;
    for (float& v : out.data)
        v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

inline bool plane_all_finite(const ImagePlane& a)
{
    for (float v : a.data)
        if (!std::isfinite(v))
            return false;
    return true;
}

// ---- PFEX plane files ----
// magic "PFEX", u32 version=1, u32 width/height/channels, then w*h*c f32,
// little-endian, row-major, channel-interleaved. Round trips are bit-exact.

namespace detail {
constexpr uint64_t pfex_value_cap = uint64_t(1) << 28; // 1 GiB of f32 payload
}

inline void write_plane(const std::filesystem::path& path, const ImagePlane& p)
{
    if (p.width == 0 || p.height == 0 || p.channels == 0)
        throw data_error("write_plane: empty plane");
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw data_error("write_plane: cannot open " + path.string());
    os.write("PFEX", 4);
    put_u32le(os, 1);
    put_u32le(os, p.width);
    put_u32le(os, p.height);
    put_u32le(os, p.channels);
    static_assert(sizeof(float) == 4);
    // payload is raw f32; the host is little-endian (checked in tests via the
    // scalar helpers), so one bulk write preserves the byte-exact contract
    std::vector<unsigned char> buf(p.data.size() * 4);
    std::memcpy(buf.data(), p.data.data(), buf.size());
    os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
    if (!os)
        throw data_error("write_plane: short write to " + path.string());
}

inline ImagePlane read_plane(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw data_error("read_plane: cannot open " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "PFEX", 4) != 0)
        throw data_error("read_plane: malformed header in " + path.string());
    uint32_t version, w, h, c;
    if (!get_u32le(is, version) || !get_u32le(is, w) || !get_u32le(is, h) || !get_u32le(is, c))
        throw data_error("read_plane: malformed header in " + path.string());
    if (version != 1)
        throw data_error("read_plane: unsupported version in " + path.string());
    if (w == 0 || h == 0 || c == 0)
        throw data_error("read_plane: malformed header in " + path.string());
    uint64_t n = uint64_t(w) * h * c;
    if (n > detail::pfex_value_cap)
        throw data_error("read_plane: size overflow in " + path.string());
    ImagePlane p(w, h, c);
    std::vector<unsigned char> buf(size_t(n) * 4);
    if (!is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size())))
        throw data_error("read_plane: truncated payload in " + path.string());
    if (is.peek() != std::char_traits<char>::eof())
        throw data_error("read_plane: trailing bytes in " + path.string());
    std::memcpy(p.data.data(), buf.data(), buf.size());
    return p;
}

// ---- 8-bit quantization and PNG export ----

// clamp to [0,1], then round half up: 0.5 -> 128
inline std::vector<uint8_t> quantize8(const ImagePlane& p, bool clamp = true)
{
    std::vector<uint8_t> out(p.data.size());
    for (size_t i = 0; i < p.data.size(); ++i) {
        float v = p.data[i];
        if (clamp)
            v = std::clamp(v, 0.0f, 1.0f);
        out[i] = uint8_t(std::floor(v * 255.0f + 0.5f));
    }
    return out;
}

namespace detail {

inline uint32_t crc32(const unsigned char* data, size_t len, uint32_t crc = 0)
{
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t n = 0; n < 256; ++n) {
            uint32_t c = n;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[n] = c;
        }
        return t;
    }();
    crc ^= 0xffffffffu;
    for (size_t i = 0; i < len; ++i)
        crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

inline uint32_t adler32(const unsigned char* data, size_t len)
{
    uint32_t a = 1, b = 0;
    for (size_t i = 0; i < len; ++i) {
        a = (a + data[i]) % 65521;
        b = (b + a) % 65521;
    }
    return (b << 16) | a;
}

inline void png_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& body)
{
    auto put_be = [&out](uint32_t v) {
        out.push_back(uint8_t(v >> 24));
        out.push_back(uint8_t(v >> 16));
        out.push_back(uint8_t(v >> 8));
        out.push_back(uint8_t(v));
    };
    put_be(uint32_t(body.size()));
    std::vector<uint8_t> td;
    td.insert(td.end(), type, type + 4);
    td.insert(td.end(), body.begin(), body.end());
    out.insert(out.end(), td.begin(), td.end());
    put_be(crc32(td.data(), td.size()));
}

} // namespace detail

// Self-contained PNG encoder (preview output only): zlib stream made of
// uncompressed deflate blocks, so no external compression library is needed.
inline std::vector<uint8_t> to_png8(const ImagePlane& p, bool clamp = true)
{
    if (p.channels != 1 && p.channels != 3 && p.channels != 4)
        throw data_error("to_png8: channels must be 1, 3 or 4");
    std::vector<uint8_t> pix = quantize8(p, clamp);

    // raw scanline stream: each row prefixed with filter byte 0
    std::vector<unsigned char> raw;
    raw.reserve((size_t(p.width) * p.channels + 1) * p.height);
    for (uint32_t y = 0; y < p.height; ++y) {
        raw.push_back(0);
        const uint8_t* row = pix.data() + size_t(y) * p.width * p.channels;
        raw.insert(raw.end(), row, row + size_t(p.width) * p.channels);
    }

    std::vector<uint8_t> idat;
    idat.push_back(0x78); // zlib header, 32k window, no compression preset
    idat.push_back(0x01);
    size_t off = 0;
    do {
        size_t n = std::min<size_t>(65535, raw.size() - off);
        bool final = off + n == raw.size();
        idat.push_back(final ? 1 : 0); // BFINAL, BTYPE=00 (stored)
        idat.push_back(uint8_t(n & 0xff));
        idat.push_back(uint8_t(n >> 8));
        idat.push_back(uint8_t(~n & 0xff));
        idat.push_back(uint8_t((~n >> 8) & 0xff));
        idat.insert(idat.end(), raw.begin() + off, raw.begin() + off + n);
        off += n;
    } while (off < raw.size());
    uint32_t ad = detail::adler32(raw.data(), raw.size());
    idat.push_back(uint8_t(ad >> 24));
    idat.push_back(uint8_t(ad >> 16));
    idat.push_back(uint8_t(ad >> 8));
    idat.push_back(uint8_t(ad));

    std::vector<uint8_t> ihdr;
    auto put_be = [&ihdr](uint32_t v) {
        ihdr.push_back(uint8_t(v >> 24));
        ihdr.push_back(uint8_t(v >> 16));
        ihdr.push_back(uint8_t(v >> 8));
        ihdr.push_back(uint8_t(v));
    };
    put_be(p.width);
    put_be(p.height);
    ihdr.push_back(8); // bit depth
    ihdr.push_back(p.channels == 1 ? 0 : p.channels == 3 ? 2 : 6);
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);

    std::vector<uint8_t> out = {137, 80, 78, 71, 13, 10, 26, 10};
    detail::png_chunk(out, "IHDR", ihdr);
    detail::png_chunk(out, "IDAT", idat);
    detail::png_chunk(out, "IEND", {});
    return out;
}

inline void write_png(const std::filesystem::path& path, const ImagePlane& p, bool clamp = true)
{
    std::vector<uint8_t> bytes = to_png8(p, clamp);
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw data_error("write_png: cannot open " + path.string());
    os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

} // namespace px

#endif
