#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <opencv2/imgcodecs.hpp>

#include "patchex/image.hpp"

namespace fs = std::filesystem;

static fs::path temp_dir()
{
    fs::path d = fs::temp_directory_path() / "px_test_image";
    fs::create_directories(d);
    return d;
}

static px::ImagePlane random_plane(uint32_t w, uint32_t h, uint32_t c, uint64_t seed, float lo = -4.0f,
                                   float hi = 4.0f)
{
    px::ImagePlane p(w, h, c);
    px::rng r(seed);
    for (float& v : p.data)
        v = r.range(lo, hi);
    return p;
}

TEST_CASE("pfex round trip is bit-exact")
{
    px::ImagePlane p = random_plane(37, 21, 3, 99);
    p.data[5] = 0.0f;
    p.data[6] = -0.0f;
    p.data[7] = std::numeric_limits<float>::denorm_min();
    fs::path f = temp_dir() / "rt.pfex";
    px::write_plane(f, p);
    px::ImagePlane q = px::read_plane(f);
    REQUIRE(q.width == p.width);
    REQUIRE(q.height == p.height);
    REQUIRE(q.channels == p.channels);
    REQUIRE(std::memcmp(q.data.data(), p.data.data(), p.data.size() * 4) == 0);

    // writing the re-read plane reproduces the file byte for byte
    fs::path f2 = temp_dir() / "rt2.pfex";
    px::write_plane(f2, q);
    std::ifstream a(f, std::ios::binary), b(f2, std::ios::binary);
    std::vector<char> ba((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::vector<char> bb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    REQUIRE(ba == bb);
}

TEST_CASE("pfex reader rejects malformed input")
{
    fs::path d = temp_dir();

    SECTION("bad magic")
    {
        std::ofstream os(d / "bad_magic.pfex", std::ios::binary);
        os << "NOPE" << std::string(16, '\0');
        os.close();
        REQUIRE_THROWS_AS(px::read_plane(d / "bad_magic.pfex"), px::data_error);
    }
    SECTION("truncated payload")
    {
        px::ImagePlane p(8, 8, 1, 0.5f);
        px::write_plane(d / "trunc.pfex", p);
        fs::resize_file(d / "trunc.pfex", 20 + 8 * 8 * 4 - 7);
        REQUIRE_THROWS_AS(px::read_plane(d / "trunc.pfex"), px::data_error);
    }
    SECTION("trailing bytes")
    {
        px::ImagePlane p(8, 8, 1, 0.5f);
        px::write_plane(d / "trail.pfex", p);
        std::ofstream os(d / "trail.pfex", std::ios::binary | std::ios::app);
        os << "xx";
        os.close();
        REQUIRE_THROWS_AS(px::read_plane(d / "trail.pfex"), px::data_error);
    }
    SECTION("size overflow")
    {
        std::ofstream os(d / "huge.pfex", std::ios::binary);
        os << "PFEX";
        px::put_u32le(os, 1);
        px::put_u32le(os, 1u << 16);
        px::put_u32le(os, 1u << 16);
        px::put_u32le(os, 64);
        os.close();
        REQUIRE_THROWS_AS(px::read_plane(d / "huge.pfex"), px::data_error);
    }
    SECTION("zero dimension")
    {
        std::ofstream os(d / "zero.pfex", std::ios::binary);
        os << "PFEX";
        px::put_u32le(os, 1);
        px::put_u32le(os, 0);
        px::put_u32le(os, 4);
        px::put_u32le(os, 1);
        os.close();
        REQUIRE_THROWS_AS(px::read_plane(d / "zero.pfex"), px::data_error);
    }
    SECTION("wrong version")
    {
        std::ofstream os(d / "ver.pfex", std::ios::binary);
        os << "PFEX";
        px::put_u32le(os, 7);
        px::put_u32le(os, 1);
        px::put_u32le(os, 1);
        px::put_u32le(os, 1);
        px::put_f32le(os, 1.0f);
        os.close();
        REQUIRE_THROWS_AS(px::read_plane(d / "ver.pfex"), px::data_error);
    }
}

TEST_CASE("quantization rounds half up after clamping")
{
    px::ImagePlane p(4, 1, 1);
    p.at(0, 0) = 0.5f;
    p.at(1, 0) = -0.25f;
    p.at(2, 0) = 2.0f;
    p.at(3, 0) = 1.0f;
    auto q = px::quantize8(p);
    REQUIRE(q[0] == 128); // 0.5*255 = 127.5 -> 128
    REQUIRE(q[1] == 0);
    REQUIRE(q[2] == 255);
    REQUIRE(q[3] == 255);
}

TEST_CASE("png bytes decode to the quantized pixels")
{
    for (uint32_t ch : {1u, 3u}) {
        px::ImagePlane p = random_plane(23, 17, ch, 7, 0.0f, 1.0f);
        auto png = px::to_png8(p);
        auto q = px::quantize8(p);
        cv::Mat encoded(1, int(png.size()), CV_8UC1, png.data());
        cv::Mat m = cv::imdecode(encoded, cv::IMREAD_UNCHANGED);
        REQUIRE(!m.empty());
        REQUIRE(m.cols == int(p.width));
        REQUIRE(m.rows == int(p.height));
        REQUIRE(m.channels() == int(ch));
        for (uint32_t y = 0; y < p.height; ++y)
            for (uint32_t x = 0; x < p.width; ++x)
                for (uint32_t c = 0; c < ch; ++c) {
                    // OpenCV loads 3-channel PNG as BGR
                    uint32_t cc = ch == 3 ? 2 - c : c;
                    uint8_t got = m.ptr<uint8_t>(int(y))[x * ch + cc];
                    REQUIRE(int(got) == int(q[p.index(x, y, c)]));
                }
    }
    px::ImagePlane two(4, 4, 2);
    REQUIRE_THROWS_AS(px::to_png8(two), px::data_error);
}

TEST_CASE("arithmetic helpers preserve shape and values")
{
    px::ImagePlane a = random_plane(9, 5, 2, 1);
    px::ImagePlane b = random_plane(9, 5, 2, 2);
    auto s = px::plane_add(a, b);
    auto d = px::plane_sub(s, b);
    REQUIRE(s.same_shape(a));
    REQUIRE(px::plane_max_abs_diff(d, a) < 1e-5f);

    // a*b/b == a under the guard when |b| stays clear of the epsilon
    px::ImagePlane c = random_plane(9, 5, 2, 3, 0.5f, 2.0f);
    auto back = px::plane_div(px::plane_mul(a, c), c);
    REQUIRE(px::plane_max_abs_diff(back, a) < 1e-5f);

    px::ImagePlane wrong(5, 9, 2);
    REQUIRE_THROWS_AS(px::plane_add(a, wrong), px::data_error);
}

TEST_CASE("guarded divide never produces non-finite values")
{
    px::ImagePlane num(3, 1, 1, 1.0f);
    px::ImagePlane den(3, 1, 1);
    den.at(0, 0) = 0.0f;
    den.at(1, 0) = 1e-9f;
    den.at(2, 0) = -1e-9f;
    auto q = px::plane_div(num, den);
    REQUIRE(px::plane_all_finite(q));
    REQUIRE(q.at(0, 0) == Catch::Approx(1e6));
    REQUIRE(q.at(2, 0) == Catch::Approx(-1e6));
}

TEST_CASE("luma uses 0.299/0.587/0.114")
{
    px::ImagePlane p(1, 1, 3);
    p.at(0, 0, 0) = 1.0f;
    p.at(0, 0, 1) = 0.5f;
    p.at(0, 0, 2) = 0.25f;
    auto l = px::luma(p);
    REQUIRE(l.at(0, 0) == Catch::Approx(0.299 + 0.587 * 0.5 + 0.114 * 0.25).epsilon(1e-6));
}
