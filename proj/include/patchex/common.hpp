#ifndef PATCHEX_COMMON_HPP
#define PATCHEX_COMMON_HPP

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace px {

// error classes map to CLI exit codes: config 2, data 3, numeric 4
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- little-endian scalar io (file formats are explicitly little-endian) ----

inline void put_u32le(std::ostream& os, uint32_t v)
{
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64le(std::ostream& os, uint64_t v)
{
    put_u32le(os, static_cast<uint32_t>(v & 0xffffffffu));
    put_u32le(os, static_cast<uint32_t>(v >> 32));
}

inline void put_f32le(std::ostream& os, float v)
{
    uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32le(os, u);
}

inline bool get_u32le(std::istream& is, uint32_t& v)
{
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        return false;
    v = uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) | (uint32_t(b[3]) << 24);
    return true;
}

inline bool get_u64le(std::istream& is, uint64_t& v)
{
    uint32_t lo, hi;
    if (!get_u32le(is, lo) || !get_u32le(is, hi))
        return false;
    v = uint64_t(lo) | (uint64_t(hi) << 32);
    return true;
}

inline bool get_f32le(std::istream& is, float& v)
{
    uint32_t u;
    if (!get_u32le(is, u))
        return false;
    std::memcpy(&v, &u, 4);
    return true;
}

// ---- deterministic rng ----
// splitmix64-based: fully specified here so sequences are identical across
// platforms and standard library versions (std distributions are not portable).

inline uint64_t splitmix64(uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// hash of integer lattice coordinates -> [0,1), for procedural textures
inline float hash01(uint64_t seed, int64_t x, int64_t y)
{
    uint64_t h = splitmix64(seed ^ splitmix64(uint64_t(x) * 0x9e3779b97f4a7c15ull ^ uint64_t(y)));
    return float(h >> 40) * (1.0f / 16777216.0f);
}

struct rng {
    uint64_t state;

    explicit rng(uint64_t seed = 1) : state(seed) {}

    uint64_t next()
    {
        state += 0x9e3779b97f4a7c15ull;
        uint64_t x = state;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    // uniform in [0, n), unbiased enough for shuffles and crop jitter
    uint32_t below(uint32_t n) { return n ? uint32_t(next() % n) : 0; }

    // uniform in [0, 1)
    float unit() { return float(next() >> 40) * (1.0f / 16777216.0f); }

    float range(float lo, float hi) { return lo + (hi - lo) * unit(); }

    template <typename T>
    void shuffle(std::vector<T>& v)
    {
        for (size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(uint32_t(i))]);
    }
};

// ---- parallel row loop ----
// Chunks [0,n) into contiguous ranges, one per worker. Workers write disjoint
// outputs, so results are byte-identical for every thread count.

template <typename Fn>
void parallel_for(size_t n, unsigned threads, Fn&& fn)
{
    if (threads <= 1 || n < 2) {
        fn(size_t(0), n);
        return;
    }
    unsigned workers = threads;
    if (size_t(workers) > n)
        workers = unsigned(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        size_t begin = size_t(w) * chunk;
        size_t end = begin + chunk < n ? begin + chunk : n;
        if (begin >= end)
            break;
        pool.emplace_back([=, &fn] { fn(begin, end); });
    }
    for (auto& t : pool)
        t.join();
}

// FNV-1a over raw bytes, used for config hashes in run manifests
inline uint64_t fnv1a(const void* data, size_t len)
{
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace px

#endif
