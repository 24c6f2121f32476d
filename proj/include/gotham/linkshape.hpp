#pragma once

// Per-direction link QoS emulation: token-bucket bandwidth shaping, fixed
// delay with uniform jitter, probabilistic loss and corruption, and a small
// BPF-style filter deciding which frames the impairments apply to.

#include <gotham/wire.hpp>

#include <variant>

namespace gotham::linkshape {

// ---------------------------------------------------------------------------
// Filter expressions: conjunctions of `tcp|udp|icmp`, `host A`, `port N`.
// An empty expression matches everything.
// ---------------------------------------------------------------------------

struct ProtoTerm {
    std::uint8_t proto;  // wire::kProtoTcp / kProtoUdp / kProtoIcmp
    bool operator==(const ProtoTerm&) const = default;
};
struct HostTerm {
    Ipv4 addr;
    bool operator==(const HostTerm&) const = default;
};
struct PortTerm {
    std::uint16_t port;
    bool operator==(const PortTerm&) const = default;
};

using FilterTerm = std::variant<ProtoTerm, HostTerm, PortTerm>;

struct FilterExpr {
    std::vector<FilterTerm> terms;

    bool operator==(const FilterExpr&) const = default;
    bool match_all() const { return terms.empty(); }

    // Total predicate: a frame matches iff every term matches. Non-IP
    // frames only match the empty filter.
    bool matches(const Bytes& frame) const {
        if (terms.empty()) return true;
        auto ip = wire::parse_ipv4(frame);
        if (!ip) return false;
        std::uint16_t sport = 0, dport = 0;
        bool has_ports = false;
        if (ip->proto == wire::kProtoTcp) {
            if (auto t = wire::parse_tcp(frame, *ip)) {
                sport = t->src_port;
                dport = t->dst_port;
                has_ports = true;
            }
        } else if (ip->proto == wire::kProtoUdp) {
            if (auto u = wire::parse_udp(frame, *ip)) {
                sport = u->src_port;
                dport = u->dst_port;
                has_ports = true;
            }
        }
        for (const auto& term : terms) {
            bool ok = std::visit(
                [&](const auto& t) -> bool {
                    using T = std::decay_t<decltype(t)>;
                    if constexpr (std::is_same_v<T, ProtoTerm>) {
                        return ip->proto == t.proto;
                    } else if constexpr (std::is_same_v<T, HostTerm>) {
                        return ip->src == t.addr || ip->dst == t.addr;
                    } else {
                        return has_ports && (sport == t.port || dport == t.port);
                    }
                },
                term);
            if (!ok) return false;
        }
        return true;
    }
};

inline std::string print_filter(const FilterExpr& f) {
    std::string out;
    for (const auto& term : f.terms) {
        if (!out.empty()) out += " and ";
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, ProtoTerm>) {
                    out += t.proto == wire::kProtoTcp   ? "tcp"
                           : t.proto == wire::kProtoUdp ? "udp"
                                                        : "icmp";
                } else if constexpr (std::is_same_v<T, HostTerm>) {
                    out += "host " + t.addr.str();
                } else {
                    out += "port " + std::to_string(t.port);
                }
            },
            term);
    }
    return out;
}

// Parses the documented subset; throws Error with the byte position of the
// offending token on syntax errors.
inline FilterExpr parse_filter(const std::string& expr) {
    FilterExpr f;
    struct Tok {
        std::string text;
        std::size_t pos;
    };
    std::vector<Tok> toks;
    std::size_t i = 0;
    while (i < expr.size()) {
        while (i < expr.size() && std::isspace(static_cast<unsigned char>(expr[i]))) ++i;
        if (i >= expr.size()) break;
        std::size_t start = i;
        while (i < expr.size() && !std::isspace(static_cast<unsigned char>(expr[i]))) ++i;
        toks.push_back({expr.substr(start, i - start), start});
    }
    if (toks.empty()) return f;

    auto fail = [&](const Tok& t, const std::string& why) -> void {
        throw Error("filter: " + why + " at position " + std::to_string(t.pos) + ": '" + t.text +
                    "'");
    };
    std::size_t k = 0;
    while (k < toks.size()) {
        const Tok& t = toks[k];
        if (t.text == "tcp") {
            f.terms.push_back(ProtoTerm{wire::kProtoTcp});
            ++k;
        } else if (t.text == "udp") {
            f.terms.push_back(ProtoTerm{wire::kProtoUdp});
            ++k;
        } else if (t.text == "icmp") {
            f.terms.push_back(ProtoTerm{wire::kProtoIcmp});
            ++k;
        } else if (t.text == "host") {
            if (k + 1 >= toks.size()) fail(t, "expected address after 'host'");
            auto addr = Ipv4::parse(toks[k + 1].text);
            if (!addr) fail(toks[k + 1], "bad address");
            f.terms.push_back(HostTerm{*addr});
            k += 2;
        } else if (t.text == "port") {
            if (k + 1 >= toks.size()) fail(t, "expected number after 'port'");
            char* end = nullptr;
            long v = std::strtol(toks[k + 1].text.c_str(), &end, 10);
            if (*end != '\0' || v < 0 || v > 65535) fail(toks[k + 1], "bad port");
            f.terms.push_back(PortTerm{static_cast<std::uint16_t>(v)});
            k += 2;
        } else {
            fail(t, "unknown token");
        }
        if (k < toks.size()) {
            if (toks[k].text != "and") fail(toks[k], "expected 'and'");
            ++k;
            if (k >= toks.size()) fail(toks[toks.size() - 1], "dangling 'and'");
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// QoS profile + shaper
// ---------------------------------------------------------------------------

struct QosProfile {
    std::optional<std::uint64_t> rate_bps;  // absent = unlimited
    std::uint64_t bucket_bytes = 0;         // 0 = auto (see effective_bucket)
    double delay_ms = 0.0;
    double jitter_ms = 0.0;
    double loss_pct = 0.0;
    double corrupt_pct = 0.0;
    std::uint64_t queue_bytes = 1500000;    // shaper backlog cap, ~1000 full frames
    FilterExpr filter;                      // empty = shape everything

    bool operator==(const QosProfile&) const = default;

    bool is_noop() const {
        return !rate_bps && delay_ms == 0 && jitter_ms == 0 && loss_pct == 0 && corrupt_pct == 0;
    }
    void validate() const {
        if (loss_pct < 0 || loss_pct > 100) throw Error("qos: loss_pct outside [0,100]");
        if (corrupt_pct < 0 || corrupt_pct > 100) throw Error("qos: corrupt_pct outside [0,100]");
        if (delay_ms < 0 || jitter_ms < 0) throw Error("qos: negative delay/jitter");
        if (delay_ms > 0 && jitter_ms > delay_ms)
            throw Error("qos: jitter_ms exceeds delay_ms");
        if (rate_bps && *rate_bps == 0) throw Error("qos: zero rate");
    }
};

// Bucket depth default: max(10 full-size frames, 5 ms at line rate).
inline std::uint64_t effective_bucket(const QosProfile& p) {
    if (p.bucket_bytes > 0) return p.bucket_bytes;
    std::uint64_t burst = p.rate_bps ? (*p.rate_bps / 8) / 200 : 0;
    return std::max<std::uint64_t>(15000, burst);
}

// Bucket state. `tokens` may run negative: the magnitude is the committed
// backlog in bytes, and a frame departs when the balance returns to zero.
struct ShaperState {
    double tokens = 0.0;           // bytes, <= bucket
    SimTime last_refill = 0;
    SimTime last_departure = 0;    // FIFO clamp
    bool primed = false;           // bucket starts full on first use
    Rng rng;

    explicit ShaperState(Rng r = Rng(0)) : rng(std::move(r)) {}
};

enum class ShapeStatus { delivered, dropped_loss, dropped_queue };

struct ShapeOutcome {
    ShapeStatus status = ShapeStatus::delivered;
    SimTime departure = 0;
    Bytes frame;
    bool corrupted = false;
};

// Applies the profile to one frame arriving at `arrival`. Frames that do
// not match the filter pass through untouched. Must be called in arrival
// order per direction (the kernel guarantees this).
inline ShapeOutcome shape_frame(const Bytes& frame, SimTime arrival, const QosProfile& profile,
                                ShaperState& state) {
    ShapeOutcome out;
    out.frame = frame;
    out.departure = std::max(arrival, state.last_departure);
    if (!profile.filter.matches(frame)) {
        state.last_departure = out.departure;
        return out;
    }
    if (profile.loss_pct > 0 && state.rng.chance(profile.loss_pct / 100.0)) {
        out.status = ShapeStatus::dropped_loss;
        return out;
    }
    SimTime depart = arrival;
    if (profile.rate_bps) {
        double rate = static_cast<double>(*profile.rate_bps) / 8e6;  // bytes per microsecond
        double bucket = static_cast<double>(effective_bucket(profile));
        if (!state.primed) {
            state.tokens = bucket;
            state.last_refill = arrival;
            state.primed = true;
        }
        state.tokens = std::min(
            bucket, state.tokens + rate * static_cast<double>(arrival - state.last_refill));
        state.last_refill = arrival;
        if (-state.tokens > static_cast<double>(profile.queue_bytes)) {
            out.status = ShapeStatus::dropped_queue;
            return out;
        }
        state.tokens -= static_cast<double>(frame.size());
        if (state.tokens < 0) depart = arrival + static_cast<SimTime>(std::ceil(-state.tokens / rate));
    }
    depart += static_cast<SimTime>(profile.delay_ms * 1000.0);
    if (profile.jitter_ms > 0) {
        double j = (state.rng.uniform() * 2.0 - 1.0) * profile.jitter_ms * 1000.0;
        depart += static_cast<SimTime>(j);
    }
    // FIFO per direction: clamp so departures never reorder.
    depart = std::max(depart, state.last_departure);
    depart = std::max(depart, arrival);
    state.last_departure = depart;
    out.departure = depart;
    if (profile.corrupt_pct > 0 && state.rng.chance(profile.corrupt_pct / 100.0)) {
        // Flip one byte of the IP payload; checksums left stale on purpose.
        std::size_t lo = wire::kEthHeader, hi = out.frame.size();
        if (auto ip = wire::parse_ipv4(out.frame)) {
            lo = ip->payload_off;
            hi = std::min(hi, ip->payload_off + ip->payload_len);
        }
        if (hi > lo) {
            std::size_t idx = lo + state.rng.below(static_cast<std::uint32_t>(hi - lo));
            out.frame[idx] ^= 0xff;
            out.corrupted = true;
        }
    }
    return out;
}

// Spec-shaped convenience wrapper: absent result = dropped.
inline std::optional<std::pair<SimTime, Bytes>> shape(const Bytes& frame, SimTime arrival,
                                                      const QosProfile& profile,
                                                      ShaperState& state) {
    auto out = shape_frame(frame, arrival, profile, state);
    if (out.status != ShapeStatus::delivered) return std::nullopt;
    return std::make_pair(out.departure, std::move(out.frame));
}

}  // namespace gotham::linkshape
