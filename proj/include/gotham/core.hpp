#pragma once

// Shared primitives: simulated time, deterministic RNG streams, IPv4/MAC
// value types and byte-order aware buffer readers/writers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gotham {

// ---------------------------------------------------------------------------
// Time. The virtual clock runs in integer microseconds from scenario start.
// ---------------------------------------------------------------------------

using SimTime = std::int64_t;  // microseconds

constexpr SimTime kMicro = 1;
constexpr SimTime kMilli = 1000;
constexpr SimTime kSecond = 1000000;

constexpr SimTime seconds(double s) { return static_cast<SimTime>(s * 1e6); }
constexpr SimTime millis(double ms) { return static_cast<SimTime>(ms * 1e3); }

// Epoch used when rendering simulated timestamps as wall-clock values
// (pcap headers, log lines). 2025-01-01T00:00:00Z.
constexpr std::int64_t kEpochSeconds = 1735689600;

inline std::string format_iso8601(SimTime t) {
    std::int64_t total = kEpochSeconds + t / kSecond;
    std::int64_t us = t % kSecond;
    // Civil-time conversion, days since 1970-01-01.
    std::int64_t days = total / 86400;
    std::int64_t secs = total % 86400;
    std::int64_t z = days + 719468;
    std::int64_t era = z / 146097;
    std::int64_t doe = z - era * 146097;
    std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    std::int64_t y = yoe + era * 400;
    std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    std::int64_t mp = (5 * doy + 2) / 153;
    std::int64_t d = doy - (153 * mp + 2) / 5 + 1;
    std::int64_t m = mp + (mp < 10 ? 3 : -9);
    y += (m <= 2);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04lld-%02lld-%02lldT%02lld:%02lld:%02lld.%06lldZ",
                  static_cast<long long>(y), static_cast<long long>(m), static_cast<long long>(d),
                  static_cast<long long>(secs / 3600), static_cast<long long>((secs / 60) % 60),
                  static_cast<long long>(secs % 60), static_cast<long long>(us));
    return buf;
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG. xoshiro256** seeded via splitmix64. All simulation
// randomness flows through named streams derived from the scenario seed so
// results are reproducible bit for bit.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

class Rng {
public:
    Rng() : Rng(0) {}
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) w = splitmix64(sm);
    }
    // Derives an independent stream for a named component.
    Rng fork(const std::string& name) const {
        std::uint64_t h = fnv1a64(name);
        for (auto w : state_) h = fnv1a64(&w, sizeof(w), h);
        return Rng(h);
    }

    std::uint64_t u64() {
        std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(u64() >> 32); }

    // Unbiased bounded draw (Lemire).
    std::uint32_t below(std::uint32_t bound) {
        if (bound == 0) return 0;
        std::uint64_t m = static_cast<std::uint64_t>(u32()) * bound;
        auto lo = static_cast<std::uint32_t>(m);
        if (lo < bound) {
            std::uint32_t t = (0u - bound) % bound;
            while (lo < t) {
                m = static_cast<std::uint64_t>(u32()) * bound;
                lo = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }
    // [lo, hi] inclusive
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint32_t>(hi - lo + 1)));
    }
    double uniform() { return (u64() >> 11) * (1.0 / 9007199254740992.0); }  // [0,1)
    bool chance(double p) { return uniform() < p; }
    // Marsaglia polar method with cached spare.
    double gaussian(double mean, double stddev) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        double u, v, s;
        do {
            u = uniform() * 2.0 - 1.0;
            v = uniform() * 2.0 - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        s = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * s;
        have_spare_ = true;
        return mean + stddev * u * s;
    }
    void fill(std::uint8_t* out, std::size_t n) {
        while (n >= 8) {
            std::uint64_t w = u64();
            std::memcpy(out, &w, 8);
            out += 8;
            n -= 8;
        }
        if (n) {
            std::uint64_t w = u64();
            std::memcpy(out, &w, n);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> state_{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// IPv4 + MAC value types
// ---------------------------------------------------------------------------

struct Ipv4 {
    std::uint32_t v = 0;  // host byte order

    constexpr Ipv4() = default;
    constexpr explicit Ipv4(std::uint32_t host_order) : v(host_order) {}
    constexpr Ipv4(unsigned a, unsigned b, unsigned c, unsigned d)
        : v((a << 24) | (b << 16) | (c << 8) | d) {}

    auto operator<=>(const Ipv4&) const = default;

    std::string str() const {
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (v >> 24) & 0xff, (v >> 16) & 0xff,
                      (v >> 8) & 0xff, v & 0xff);
        return buf;
    }
    static std::optional<Ipv4> parse(const std::string& s) {
        unsigned a, b, c, d;
        char tail;
        if (std::sscanf(s.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail) != 4) return std::nullopt;
        if (a > 255 || b > 255 || c > 255 || d > 255) return std::nullopt;
        return Ipv4(a, b, c, d);
    }
};

struct Prefix {
    Ipv4 base;
    int len = 0;  // 0..32

    auto operator<=>(const Prefix&) const = default;

    std::uint32_t mask() const {
        return len == 0 ? 0u : (len == 32 ? 0xffffffffu : ~((1u << (32 - len)) - 1));
    }
    bool contains(Ipv4 a) const { return (a.v & mask()) == (base.v & mask()); }
    Prefix canonical() const { return Prefix{Ipv4(base.v & mask()), len}; }
    std::string str() const { return base.str() + "/" + std::to_string(len); }
    static std::optional<Prefix> parse(const std::string& s) {
        auto slash = s.find('/');
        if (slash == std::string::npos) return std::nullopt;
        auto addr = Ipv4::parse(s.substr(0, slash));
        if (!addr) return std::nullopt;
        int len = -1;
        try {
            len = std::stoi(s.substr(slash + 1));
        } catch (...) {
            return std::nullopt;
        }
        if (len < 0 || len > 32) return std::nullopt;
        return Prefix{*addr, len};
    }
};

struct Mac {
    std::array<std::uint8_t, 6> b{};

    auto operator<=>(const Mac&) const = default;

    bool is_broadcast() const {
        return b[0] == 0xff && b[1] == 0xff && b[2] == 0xff && b[3] == 0xff && b[4] == 0xff &&
               b[5] == 0xff;
    }
    bool is_multicast() const { return (b[0] & 1) != 0; }
    std::string str() const {
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x", b[0], b[1], b[2], b[3],
                      b[4], b[5]);
        return buf;
    }
    static Mac broadcast() { return Mac{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}}; }
    // Locally administered unicast address derived from an ordinal.
    static Mac local(std::uint32_t ordinal, std::uint8_t iface = 0) {
        return Mac{{0x02, 0x47, static_cast<std::uint8_t>((ordinal >> 16) & 0xff),
                    static_cast<std::uint8_t>((ordinal >> 8) & 0xff),
                    static_cast<std::uint8_t>(ordinal & 0xff), iface}};
    }
    static std::optional<Mac> parse(const std::string& s) {
        Mac m;
        unsigned v[6];
        char tail;
        if (std::sscanf(s.c_str(), "%x:%x:%x:%x:%x:%x%c", &v[0], &v[1], &v[2], &v[3], &v[4], &v[5],
                        &tail) != 6)
            return std::nullopt;
        for (int i = 0; i < 6; ++i) {
            if (v[i] > 255) return std::nullopt;
            m.b[i] = static_cast<std::uint8_t>(v[i]);
        }
        return m;
    }
};

// ---------------------------------------------------------------------------
// Byte buffers
// ---------------------------------------------------------------------------

using Bytes = std::vector<std::uint8_t>;

inline Bytes to_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(const Bytes& b) { return std::string(b.begin(), b.end()); }

// Network byte order writer.
class ByteWriter {
public:
    explicit ByteWriter(Bytes& out) : out_(out) {}
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }
    void u64(std::uint64_t v) {
        u32(static_cast<std::uint32_t>(v >> 32));
        u32(static_cast<std::uint32_t>(v));
    }
    void raw(const void* p, std::size_t n) {
        const auto* c = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), c, c + n);
    }
    void raw(const Bytes& b) { raw(b.data(), b.size()); }
    void str(const std::string& s) { raw(s.data(), s.size()); }
    std::size_t size() const { return out_.size(); }
    // Patch helpers for length fields known only after the body is written.
    void patch_u16(std::size_t offset, std::uint16_t v) {
        out_[offset] = static_cast<std::uint8_t>(v >> 8);
        out_[offset + 1] = static_cast<std::uint8_t>(v);
    }

private:
    Bytes& out_;
};

// Network byte order reader. All accessors fail soft by setting a
// truncation flag; callers check ok() once at the end.
class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t len) : data_(data), len_(len) {}
    explicit ByteReader(const Bytes& b) : ByteReader(b.data(), b.size()) {}

    std::uint8_t u8() { return take(1) ? data_[pos_ - 1] : 0; }
    std::uint16_t u16() {
        if (!take(2)) return 0;
        return static_cast<std::uint16_t>((data_[pos_ - 2] << 8) | data_[pos_ - 1]);
    }
    std::uint32_t u32() {
        std::uint32_t hi = u16(), lo = u16();
        return (hi << 16) | lo;
    }
    std::uint64_t u64() {
        std::uint64_t hi = u32(), lo = u32();
        return (hi << 32) | lo;
    }
    Bytes raw(std::size_t n) {
        if (!take(n)) return {};
        return Bytes(data_ + pos_ - n, data_ + pos_);
    }
    std::string str(std::size_t n) {
        if (!take(n)) return {};
        return std::string(reinterpret_cast<const char*>(data_) + pos_ - n, n);
    }
    void skip(std::size_t n) { take(n); }
    std::size_t remaining() const { return ok_ ? len_ - pos_ : 0; }
    std::size_t pos() const { return pos_; }
    bool ok() const { return ok_; }

private:
    bool take(std::size_t n) {
        if (!ok_ || len_ - pos_ < n) {
            ok_ = false;
            return false;
        }
        pos_ += n;
        return true;
    }
    const std::uint8_t* data_;
    std::size_t len_;
    std::size_t pos_ = 0;
    bool ok_ = true;
};

// ---------------------------------------------------------------------------
// Misc string helpers
// ---------------------------------------------------------------------------

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto p = s.find(sep, start);
        if (p == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, p - start));
        start = p + 1;
    }
    return out;
}

inline bool starts_with(const std::string& s, const std::string& p) {
    return s.size() >= p.size() && s.compare(0, p.size(), p) == 0;
}

}  // namespace gotham
