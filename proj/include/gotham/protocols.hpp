#pragma once

// Application protocol codecs. Encoders produce bytes that standard
// dissectors recognize; decoders are total (structured error, never a
// crash) and invert encode on its image. classify() maps a captured frame
// to the protocol label of its deepest recognized layer.

#include <gotham/wire.hpp>

#include <variant>

namespace gotham::protocols {

// Well-known ports used across the scenario.
constexpr std::uint16_t kPortDns = 53;
constexpr std::uint16_t kPortNtp = 123;
constexpr std::uint16_t kPortMqtt = 1883;
constexpr std::uint16_t kPortMqttTls = 8883;
constexpr std::uint16_t kPortCoap = 5683;
constexpr std::uint16_t kPortCoapDtls = 5684;
constexpr std::uint16_t kPortRtsp = 8554;
constexpr std::uint16_t kPortTelnet = 23;
constexpr std::uint16_t kPortTelnetAlt = 2323;
constexpr std::uint16_t kPortHttp = 80;
constexpr std::uint16_t kPortMiraiCnc = 23;     // bot <-> C&C, telnet-look
constexpr std::uint16_t kPortMiraiReport = 48101;
constexpr std::uint16_t kPortMerlinHttp = 80;
constexpr std::uint16_t kPortMerlinTls = 443;
// RTP media rides UDP in this range: even = rtp, odd = rtcp.
constexpr std::uint16_t kRtpPortLo = 6000;
constexpr std::uint16_t kRtpPortHi = 6999;

// ---------------------------------------------------------------------------
// Message types
// ---------------------------------------------------------------------------

enum class MqttType : std::uint8_t {
    Connect = 1,
    Connack = 2,
    Publish = 3,
    Puback = 4,
    Subscribe = 8,
    Suback = 9,
    Pingreq = 12,
    Pingresp = 13,
    Disconnect = 14,
};

struct MqttMsg {
    MqttType type = MqttType::Pingreq;
    std::string client_id;
    std::optional<std::pair<std::string, std::string>> credentials;
    std::uint16_t keepalive_s = 60;
    bool clean_session = true;
    std::string topic;    // PUBLISH topic or SUBSCRIBE filter
    Bytes payload;
    std::uint8_t qos = 0;
    std::uint16_t packet_id = 0;
    std::uint8_t connack_rc = 0;
    bool session_present = false;

    bool operator==(const MqttMsg&) const = default;
};

enum class CoapType : std::uint8_t { Con = 0, Non = 1, Ack = 2, Rst = 3 };

// CoAP code registry values: GET = 0.01, 2.05 Content, 4.04 Not Found.
enum class CoapCode : std::uint8_t { Empty = 0x00, Get = 0x01, Content = 0x45, NotFound = 0x84 };

struct CoapMsg {
    CoapType type = CoapType::Con;
    CoapCode code = CoapCode::Get;
    std::uint16_t message_id = 0;
    Bytes token;                 // <= 8 bytes
    std::string uri_path;        // "/a/b"; empty for responses
    std::optional<std::uint16_t> content_format;
    Bytes payload;

    bool operator==(const CoapMsg&) const = default;
};

struct DnsRecord {
    std::string name;
    Ipv4 addr;
    std::uint32_t ttl = 300;
    bool operator==(const DnsRecord&) const = default;
};

struct DnsMsg {
    std::uint16_t id = 0;
    bool is_response = false;
    std::uint8_t rcode = 0;  // 0 ok, 3 NXDOMAIN
    std::string qname;
    std::vector<DnsRecord> answers;

    bool operator==(const DnsMsg&) const = default;
};

struct NtpMsg {
    std::uint8_t mode = 3;  // 3 client, 4 server
    std::uint8_t stratum = 0;
    std::uint64_t origin_ts = 0;
    std::uint64_t receive_ts = 0;
    std::uint64_t transmit_ts = 0;

    bool operator==(const NtpMsg&) const = default;
};

struct RtpPacket {
    std::uint8_t payload_type = 96;
    bool marker = false;
    std::uint16_t seq = 0;
    std::uint32_t ts = 0;
    std::uint32_t ssrc = 0;
    Bytes payload;

    bool operator==(const RtpPacket&) const = default;
};

// RTCP sender report, no report blocks.
struct RtcpSenderReport {
    std::uint32_t ssrc = 0;
    std::uint64_t ntp_ts = 0;
    std::uint32_t rtp_ts = 0;
    std::uint32_t packet_count = 0;
    std::uint32_t octet_count = 0;

    bool operator==(const RtcpSenderReport&) const = default;
};

enum class RtspMethod : std::uint8_t { Options, Describe, Setup, Play, Teardown };

inline const char* rtsp_method_str(RtspMethod m) {
    switch (m) {
        case RtspMethod::Options: return "OPTIONS";
        case RtspMethod::Describe: return "DESCRIBE";
        case RtspMethod::Setup: return "SETUP";
        case RtspMethod::Play: return "PLAY";
        case RtspMethod::Teardown: return "TEARDOWN";
    }
    return "OPTIONS";
}

struct RtspMsg {
    bool is_request = true;
    RtspMethod method = RtspMethod::Options;
    std::string uri;
    int status = 200;
    std::uint32_t cseq = 1;
    std::string session;       // empty when absent
    std::string transport;     // SETUP header, empty when absent
    std::string content_type;  // e.g. application/sdp
    std::string body;

    bool operator==(const RtspMsg&) const = default;
};

// TLS/DTLS record envelope wrapping opaque bytes. No real cryptography:
// the body is keystream-shaped, the header is dissector-valid.
struct TlsEnvelope {
    std::uint8_t record_type = 23;  // 20..23
    bool dtls = false;
    std::uint16_t epoch = 0;        // dtls only
    std::uint64_t seq = 0;          // dtls only, 48-bit
    Bytes body;

    bool operator==(const TlsEnvelope&) const = default;
};

using ProtocolMessage = std::variant<MqttMsg, CoapMsg, DnsMsg, NtpMsg, RtpPacket,
                                     RtcpSenderReport, RtspMsg, TlsEnvelope>;

enum class ProtoHint { mqtt, coap, dns, ntp, rtp, rtcp, rtsp, tls, dtls };

template <typename T>
struct Decoded {
    std::optional<T> value;
    std::string error;
    explicit operator bool() const { return value.has_value(); }
    const T& operator*() const { return *value; }
};

// ---------------------------------------------------------------------------
// MQTT 3.1.1
// ---------------------------------------------------------------------------

constexpr std::uint32_t kMqttMaxRemaining = 268435455;

inline void mqtt_remaining_length(ByteWriter& w, std::uint32_t len) {
    if (len > kMqttMaxRemaining) throw Error("mqtt: remaining length overflow");
    do {
        std::uint8_t d = len % 128;
        len /= 128;
        if (len > 0) d |= 0x80;
        w.u8(d);
    } while (len > 0);
}

inline void mqtt_string(ByteWriter& w, const std::string& s) {
    if (s.size() > 0xffff) throw Error("mqtt: string too long");
    w.u16(static_cast<std::uint16_t>(s.size()));
    w.str(s);
}

inline Bytes encode(const MqttMsg& m) {
    Bytes var;
    ByteWriter v(var);
    std::uint8_t flags = 0;
    switch (m.type) {
        case MqttType::Connect: {
            mqtt_string(v, "MQTT");
            v.u8(4);  // protocol level 3.1.1
            std::uint8_t cf = 0;
            if (m.clean_session) cf |= 0x02;
            if (m.credentials) cf |= 0xc0;
            v.u8(cf);
            v.u16(m.keepalive_s);
            mqtt_string(v, m.client_id);
            if (m.credentials) {
                mqtt_string(v, m.credentials->first);
                mqtt_string(v, m.credentials->second);
            }
            break;
        }
        case MqttType::Connack:
            v.u8(m.session_present ? 1 : 0);
            v.u8(m.connack_rc);
            break;
        case MqttType::Publish:
            flags = static_cast<std::uint8_t>(m.qos << 1);
            mqtt_string(v, m.topic);
            if (m.qos > 0) v.u16(m.packet_id);
            v.raw(m.payload);
            break;
        case MqttType::Puback:
            v.u16(m.packet_id);
            break;
        case MqttType::Subscribe:
            flags = 0x02;
            v.u16(m.packet_id);
            mqtt_string(v, m.topic);
            v.u8(m.qos);
            break;
        case MqttType::Suback:
            v.u16(m.packet_id);
            v.u8(m.qos);
            break;
        case MqttType::Pingreq:
        case MqttType::Pingresp:
        case MqttType::Disconnect:
            break;
    }
    Bytes out;
    ByteWriter w(out);
    w.u8(static_cast<std::uint8_t>((static_cast<std::uint8_t>(m.type) << 4) | flags));
    mqtt_remaining_length(w, static_cast<std::uint32_t>(var.size()));
    w.raw(var);
    return out;
}

// Reads a remaining-length varint; returns false on truncation/overflow.
inline bool mqtt_read_remaining(ByteReader& r, std::uint32_t& len, std::string& err) {
    len = 0;
    std::uint32_t mult = 1;
    for (int i = 0;; ++i) {
        if (i == 4) {
            err = "mqtt: remaining length overflow";
            return false;
        }
        std::uint8_t d = r.u8();
        if (!r.ok()) {
            err = "mqtt: truncated remaining length";
            return false;
        }
        len += (d & 0x7f) * mult;
        if (!(d & 0x80)) return true;
        mult *= 128;
    }
}

inline std::optional<std::string> mqtt_read_string(ByteReader& r) {
    std::uint16_t n = r.u16();
    if (!r.ok()) return std::nullopt;
    auto s = r.str(n);
    if (!r.ok()) return std::nullopt;
    return s;
}

inline Decoded<MqttMsg> decode_mqtt(const Bytes& b) {
    ByteReader r(b);
    std::uint8_t h = r.u8();
    if (!r.ok()) return {std::nullopt, "mqtt: truncated"};
    std::uint32_t rem = 0;
    std::string err;
    if (!mqtt_read_remaining(r, rem, err)) return {std::nullopt, err};
    if (r.remaining() < rem) return {std::nullopt, "mqtt: truncated body"};
    MqttMsg m;
    auto type_val = h >> 4;
    std::uint8_t flags = h & 0x0f;
    switch (type_val) {
        case 1: {
            m.type = MqttType::Connect;
            auto proto = mqtt_read_string(r);
            if (!proto || *proto != "MQTT") return {std::nullopt, "mqtt: bad protocol name"};
            if (r.u8() != 4) return {std::nullopt, "mqtt: unsupported protocol level"};
            std::uint8_t cf = r.u8();
            m.clean_session = cf & 0x02;
            m.keepalive_s = r.u16();
            auto cid = mqtt_read_string(r);
            if (!cid) return {std::nullopt, "mqtt: truncated client id"};
            m.client_id = *cid;
            if (cf & 0x80) {
                auto u = mqtt_read_string(r);
                auto p = (cf & 0x40) ? mqtt_read_string(r) : std::optional<std::string>("");
                if (!u || !p) return {std::nullopt, "mqtt: truncated credentials"};
                m.credentials = {*u, *p};
            }
            break;
        }
        case 2:
            m.type = MqttType::Connack;
            m.session_present = r.u8() & 1;
            m.connack_rc = r.u8();
            break;
        case 3: {
            m.type = MqttType::Publish;
            m.qos = (flags >> 1) & 0x03;
            if (m.qos > 2) return {std::nullopt, "mqtt: invalid qos"};
            std::size_t start = r.pos();
            auto topic = mqtt_read_string(r);
            if (!topic) return {std::nullopt, "mqtt: truncated topic"};
            m.topic = *topic;
            if (m.qos > 0) m.packet_id = r.u16();
            std::size_t consumed = r.pos() - start;
            if (rem < consumed) return {std::nullopt, "mqtt: bad length"};
            m.payload = r.raw(rem - consumed);
            break;
        }
        case 4:
            m.type = MqttType::Puback;
            m.packet_id = r.u16();
            break;
        case 8: {
            m.type = MqttType::Subscribe;
            m.packet_id = r.u16();
            auto topic = mqtt_read_string(r);
            if (!topic) return {std::nullopt, "mqtt: truncated filter"};
            m.topic = *topic;
            m.qos = r.u8();
            break;
        }
        case 9:
            m.type = MqttType::Suback;
            m.packet_id = r.u16();
            m.qos = r.u8();
            break;
        case 12: m.type = MqttType::Pingreq; break;
        case 13: m.type = MqttType::Pingresp; break;
        case 14: m.type = MqttType::Disconnect; break;
        default:
            return {std::nullopt, "mqtt: unknown packet type"};
    }
    if (!r.ok()) return {std::nullopt, "mqtt: truncated"};
    return {m, ""};
}

// Topic filter match with + and # wildcards (MQTT 3.1.1 semantics).
inline bool topic_matches(const std::string& filter, const std::string& topic) {
    auto fp = split(filter, '/');
    auto tp = split(topic, '/');
    std::size_t i = 0;
    for (; i < fp.size(); ++i) {
        if (fp[i] == "#") return true;
        if (i >= tp.size()) return false;
        if (fp[i] == "+") continue;
        if (fp[i] != tp[i]) return false;
    }
    return i == tp.size();
}

// ---------------------------------------------------------------------------
// CoAP (RFC 7252 base header + Uri-Path/Content-Format options)
// ---------------------------------------------------------------------------

constexpr std::uint16_t kCoapOptUriPath = 11;
constexpr std::uint16_t kCoapOptContentFormat = 12;

inline std::uint8_t coap_option_nibble(std::uint32_t v) {
    if (v < 13) return static_cast<std::uint8_t>(v);
    return v < 269 ? 13 : 14;
}

inline void coap_option(ByteWriter& w, std::uint16_t delta, const Bytes& value) {
    std::uint8_t dn = coap_option_nibble(delta);
    std::uint8_t ln = coap_option_nibble(static_cast<std::uint32_t>(value.size()));
    w.u8(static_cast<std::uint8_t>((dn << 4) | ln));
    if (dn == 13) w.u8(static_cast<std::uint8_t>(delta - 13));
    if (dn == 14) w.u16(static_cast<std::uint16_t>(delta - 269));
    if (ln == 13) w.u8(static_cast<std::uint8_t>(value.size() - 13));
    if (ln == 14) w.u16(static_cast<std::uint16_t>(value.size() - 269));
    w.raw(value);
}

inline Bytes encode(const CoapMsg& m) {
    if (m.token.size() > 8) throw Error("coap: token too long");
    Bytes out;
    ByteWriter w(out);
    w.u8(static_cast<std::uint8_t>(0x40 | (static_cast<std::uint8_t>(m.type) << 4) |
                                   m.token.size()));
    w.u8(static_cast<std::uint8_t>(m.code));
    w.u16(m.message_id);
    w.raw(m.token);
    std::uint16_t last = 0;
    if (!m.uri_path.empty()) {
        for (const auto& seg : split(m.uri_path, '/')) {
            if (seg.empty()) continue;
            coap_option(w, static_cast<std::uint16_t>(kCoapOptUriPath - last), to_bytes(seg));
            last = kCoapOptUriPath;
        }
    }
    if (m.content_format) {
        Bytes cf;
        if (*m.content_format > 0xff) {
            cf.push_back(static_cast<std::uint8_t>(*m.content_format >> 8));
        }
        cf.push_back(static_cast<std::uint8_t>(*m.content_format & 0xff));
        coap_option(w, static_cast<std::uint16_t>(kCoapOptContentFormat - last), cf);
        last = kCoapOptContentFormat;
    }
    if (!m.payload.empty()) {
        w.u8(0xff);
        w.raw(m.payload);
    }
    return out;
}

inline Decoded<CoapMsg> decode_coap(const Bytes& b) {
    ByteReader r(b);
    std::uint8_t h = r.u8();
    if (!r.ok()) return {std::nullopt, "coap: truncated"};
    if ((h >> 6) != 1) return {std::nullopt, "coap: bad version"};
    CoapMsg m;
    m.type = static_cast<CoapType>((h >> 4) & 0x03);
    std::uint8_t tkl = h & 0x0f;
    if (tkl > 8) return {std::nullopt, "coap: bad token length"};
    m.code = static_cast<CoapCode>(r.u8());
    m.message_id = r.u16();
    m.token = r.raw(tkl);
    if (!r.ok()) return {std::nullopt, "coap: truncated header"};
    std::uint32_t opt = 0;
    while (r.remaining() > 0) {
        std::uint8_t ob = r.u8();
        if (ob == 0xff) {
            m.payload = r.raw(r.remaining());
            break;
        }
        std::uint32_t delta = ob >> 4, len = ob & 0x0f;
        if (delta == 15 || len == 15) return {std::nullopt, "coap: reserved option nibble"};
        if (delta == 13) delta = 13 + r.u8();
        if (delta == 14) delta = 269 + r.u16();
        if (len == 13) len = 13 + r.u8();
        if (len == 14) len = 269 + r.u16();
        opt += delta;
        Bytes val = r.raw(len);
        if (!r.ok()) return {std::nullopt, "coap: truncated option"};
        if (opt == kCoapOptUriPath) {
            m.uri_path += "/" + to_string(val);
        } else if (opt == kCoapOptContentFormat) {
            std::uint16_t cf = 0;
            for (auto byte : val) cf = static_cast<std::uint16_t>((cf << 8) | byte);
            m.content_format = cf;
        }
        // other options ignored
    }
    if (!r.ok()) return {std::nullopt, "coap: truncated"};
    return {m, ""};
}

// ---------------------------------------------------------------------------
// DNS (A queries/responses)
// ---------------------------------------------------------------------------

inline void dns_qname(ByteWriter& w, const std::string& name) {
    for (const auto& label : split(name, '.')) {
        if (label.empty()) continue;
        if (label.size() > 63) throw Error("dns: label too long");
        w.u8(static_cast<std::uint8_t>(label.size()));
        w.str(label);
    }
    w.u8(0);
}

inline Bytes encode(const DnsMsg& m) {
    Bytes out;
    ByteWriter w(out);
    w.u16(m.id);
    std::uint16_t flags = 0;
    if (m.is_response) flags |= 0x8000 | 0x0400;  // QR, AA
    flags |= 0x0100;                              // RD
    flags |= m.rcode & 0x0f;
    w.u16(flags);
    w.u16(1);  // questions
    w.u16(static_cast<std::uint16_t>(m.answers.size()));
    w.u16(0);
    w.u16(0);
    dns_qname(w, m.qname);
    w.u16(1);  // A
    w.u16(1);  // IN
    for (const auto& rec : m.answers) {
        w.u16(0xc00c);  // pointer to the question name
        w.u16(1);
        w.u16(1);
        w.u32(rec.ttl);
        w.u16(4);
        w.u32(rec.addr.v);
    }
    return out;
}

inline std::optional<std::string> dns_read_name(ByteReader& r, const Bytes& whole) {
    std::string name;
    for (int guard = 0; guard < 64; ++guard) {
        std::uint8_t len = r.u8();
        if (!r.ok()) return std::nullopt;
        if (len == 0) return name;
        if ((len & 0xc0) == 0xc0) {
            std::uint16_t off = static_cast<std::uint16_t>(((len & 0x3f) << 8) | r.u8());
            if (!r.ok() || off >= whole.size()) return std::nullopt;
            ByteReader sub(whole.data() + off, whole.size() - off);
            auto rest = dns_read_name(sub, whole);
            if (!rest) return std::nullopt;
            if (!name.empty() && !rest->empty()) name += ".";
            name += *rest;
            return name;
        }
        if (len > 63) return std::nullopt;
        auto label = r.str(len);
        if (!r.ok()) return std::nullopt;
        if (!name.empty()) name += ".";
        name += label;
    }
    return std::nullopt;
}

inline Decoded<DnsMsg> decode_dns(const Bytes& b) {
    ByteReader r(b);
    DnsMsg m;
    m.id = r.u16();
    std::uint16_t flags = r.u16();
    m.is_response = flags & 0x8000;
    m.rcode = flags & 0x0f;
    std::uint16_t qd = r.u16(), an = r.u16();
    r.u16();
    r.u16();
    if (!r.ok()) return {std::nullopt, "dns: truncated header"};
    if (qd != 1) return {std::nullopt, "dns: unsupported question count"};
    auto qn = dns_read_name(r, b);
    if (!qn) return {std::nullopt, "dns: bad qname"};
    m.qname = *qn;
    r.u16();
    r.u16();
    for (std::uint16_t i = 0; i < an; ++i) {
        auto name = dns_read_name(r, b);
        if (!name) return {std::nullopt, "dns: bad answer name"};
        std::uint16_t type = r.u16();
        r.u16();
        std::uint32_t ttl = r.u32();
        std::uint16_t rdlen = r.u16();
        if (!r.ok()) return {std::nullopt, "dns: truncated answer"};
        if (type == 1 && rdlen == 4) {
            DnsRecord rec;
            rec.name = *name;
            rec.ttl = ttl;
            rec.addr = Ipv4(r.u32());
            m.answers.push_back(rec);
        } else {
            r.skip(rdlen);
        }
    }
    if (!r.ok()) return {std::nullopt, "dns: truncated"};
    return {m, ""};
}

// ---------------------------------------------------------------------------
// NTP v4 (client/server mode, 48-byte datagrams)
// ---------------------------------------------------------------------------

inline Bytes encode(const NtpMsg& m) {
    Bytes out;
    ByteWriter w(out);
    w.u8(static_cast<std::uint8_t>((4 << 3) | (m.mode & 0x07)));  // LI 0, VN 4
    w.u8(m.stratum);
    w.u8(6);                   // poll
    w.u8(static_cast<std::uint8_t>(-20));  // precision
    w.u32(0);                  // root delay
    w.u32(0);                  // root dispersion
    w.u32(m.mode == 4 ? 0x4c4f434c : 0);  // "LOCL" for the server
    w.u64(0);                  // reference ts
    w.u64(m.origin_ts);
    w.u64(m.receive_ts);
    w.u64(m.transmit_ts);
    return out;
}

inline Decoded<NtpMsg> decode_ntp(const Bytes& b) {
    if (b.size() != 48) return {std::nullopt, "ntp: bad length"};
    ByteReader r(b);
    NtpMsg m;
    std::uint8_t h = r.u8();
    m.mode = h & 0x07;
    if (((h >> 3) & 0x07) != 4) return {std::nullopt, "ntp: bad version"};
    if (m.mode != 3 && m.mode != 4) return {std::nullopt, "ntp: unsupported mode"};
    m.stratum = r.u8();
    r.skip(2 + 4 + 4 + 4 + 8);
    m.origin_ts = r.u64();
    m.receive_ts = r.u64();
    m.transmit_ts = r.u64();
    return {m, ""};
}

// Converts simulated time to an NTP timestamp (era offset 2208988800).
inline std::uint64_t ntp_timestamp(SimTime t) {
    std::uint64_t secs = static_cast<std::uint64_t>(kEpochSeconds + t / kSecond) + 2208988800ULL;
    std::uint64_t frac = (static_cast<std::uint64_t>(t % kSecond) << 32) / 1000000ULL;
    return (secs << 32) | frac;
}

// ---------------------------------------------------------------------------
// RTP / RTCP
// ---------------------------------------------------------------------------

inline Bytes encode(const RtpPacket& m) {
    Bytes out;
    ByteWriter w(out);
    w.u8(0x80);  // v2, no padding/extension/csrc
    w.u8(static_cast<std::uint8_t>((m.marker ? 0x80 : 0) | (m.payload_type & 0x7f)));
    w.u16(m.seq);
    w.u32(m.ts);
    w.u32(m.ssrc);
    w.raw(m.payload);
    return out;
}

inline Decoded<RtpPacket> decode_rtp(const Bytes& b) {
    if (b.size() < 12) return {std::nullopt, "rtp: truncated"};
    if ((b[0] >> 6) != 2) return {std::nullopt, "rtp: bad version"};
    ByteReader r(b);
    r.u8();
    RtpPacket m;
    std::uint8_t pt = r.u8();
    m.marker = pt & 0x80;
    m.payload_type = pt & 0x7f;
    m.seq = r.u16();
    m.ts = r.u32();
    m.ssrc = r.u32();
    m.payload = r.raw(r.remaining());
    return {m, ""};
}

inline Bytes encode(const RtcpSenderReport& m) {
    Bytes out;
    ByteWriter w(out);
    w.u8(0x80);
    w.u8(200);  // SR
    w.u16(6);   // length in words - 1
    w.u32(m.ssrc);
    w.u64(m.ntp_ts);
    w.u32(m.rtp_ts);
    w.u32(m.packet_count);
    w.u32(m.octet_count);
    return out;
}

inline Decoded<RtcpSenderReport> decode_rtcp(const Bytes& b) {
    if (b.size() < 28) return {std::nullopt, "rtcp: truncated"};
    if ((b[0] >> 6) != 2 || b[1] != 200) return {std::nullopt, "rtcp: not a sender report"};
    ByteReader r(b);
    r.u16();
    r.u16();
    RtcpSenderReport m;
    m.ssrc = r.u32();
    m.ntp_ts = r.u64();
    m.rtp_ts = r.u32();
    m.packet_count = r.u32();
    m.octet_count = r.u32();
    return {m, ""};
}

// ---------------------------------------------------------------------------
// RTSP/1.0 text framing
// ---------------------------------------------------------------------------

inline Bytes encode(const RtspMsg& m) {
    std::string s;
    if (m.is_request) {
        s = std::string(rtsp_method_str(m.method)) + " " + m.uri + " RTSP/1.0\r\n";
    } else {
        s = "RTSP/1.0 " + std::to_string(m.status) + (m.status == 200 ? " OK" : " Error") + "\r\n";
    }
    s += "CSeq: " + std::to_string(m.cseq) + "\r\n";
    if (!m.session.empty()) s += "Session: " + m.session + "\r\n";
    if (!m.transport.empty()) s += "Transport: " + m.transport + "\r\n";
    if (!m.body.empty()) {
        s += "Content-Type: " + m.content_type + "\r\n";
        s += "Content-Length: " + std::to_string(m.body.size()) + "\r\n";
    }
    s += "\r\n";
    s += m.body;
    return to_bytes(s);
}

inline Decoded<RtspMsg> decode_rtsp(const Bytes& b) {
    std::string s = to_string(b);
    auto head_end = s.find("\r\n\r\n");
    if (head_end == std::string::npos) return {std::nullopt, "rtsp: no header terminator"};
    auto lines = split(s.substr(0, head_end), '\n');
    for (auto& l : lines)
        if (!l.empty() && l.back() == '\r') l.pop_back();
    if (lines.empty()) return {std::nullopt, "rtsp: empty"};
    RtspMsg m;
    const std::string& start = lines[0];
    if (starts_with(start, "RTSP/1.0 ")) {
        m.is_request = false;
        m.status = std::atoi(start.c_str() + 9);
    } else {
        m.is_request = true;
        bool known = false;
        for (auto method : {RtspMethod::Options, RtspMethod::Describe, RtspMethod::Setup,
                            RtspMethod::Play, RtspMethod::Teardown}) {
            std::string name = rtsp_method_str(method);
            if (starts_with(start, name + " ")) {
                m.method = method;
                auto rest = start.substr(name.size() + 1);
                auto sp = rest.find(' ');
                if (sp == std::string::npos) return {std::nullopt, "rtsp: bad request line"};
                m.uri = rest.substr(0, sp);
                known = true;
                break;
            }
        }
        if (!known) return {std::nullopt, "rtsp: unknown method"};
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto colon = lines[i].find(": ");
        if (colon == std::string::npos) continue;
        auto key = lines[i].substr(0, colon);
        auto val = lines[i].substr(colon + 2);
        if (key == "CSeq") m.cseq = static_cast<std::uint32_t>(std::atoi(val.c_str()));
        else if (key == "Session") m.session = val;
        else if (key == "Transport") m.transport = val;
        else if (key == "Content-Type") m.content_type = val;
    }
    m.body = s.substr(head_end + 4);
    return {m, ""};
}

// SDP session description for a stream; sent once per RTSP DESCRIBE.
inline std::string make_sdp(const std::string& stream_name, Ipv4 server, std::uint16_t rtp_port,
                            std::uint8_t payload_type, int fps) {
    std::string s;
    s += "v=0\r\n";
    s += "o=- 0 0 IN IP4 " + server.str() + "\r\n";
    s += "s=" + stream_name + "\r\n";
    s += "c=IN IP4 " + server.str() + "\r\n";
    s += "t=0 0\r\n";
    s += "m=video " + std::to_string(rtp_port) + " RTP/AVP " + std::to_string(payload_type) +
         "\r\n";
    s += "a=rtpmap:" + std::to_string(payload_type) + " H264/90000\r\n";
    s += "a=framerate:" + std::to_string(fps) + "\r\n";
    return s;
}

// ---------------------------------------------------------------------------
// TLS / DTLS record envelopes
// ---------------------------------------------------------------------------

inline Bytes encode(const TlsEnvelope& m) {
    if (m.body.size() > 0x4000 + 2048) throw Error("tls: record too large");
    Bytes out;
    ByteWriter w(out);
    w.u8(m.record_type);
    if (m.dtls) {
        w.u16(0xfefd);  // DTLS 1.2
        w.u16(m.epoch);
        w.u16(static_cast<std::uint16_t>(m.seq >> 32));
        w.u32(static_cast<std::uint32_t>(m.seq));
        w.u16(static_cast<std::uint16_t>(m.body.size()));
    } else {
        w.u16(0x0303);  // TLS 1.2
        w.u16(static_cast<std::uint16_t>(m.body.size()));
    }
    w.raw(m.body);
    return out;
}

inline Decoded<TlsEnvelope> decode_tls(const Bytes& b, bool dtls) {
    ByteReader r(b);
    TlsEnvelope m;
    m.dtls = dtls;
    m.record_type = r.u8();
    if (m.record_type < 20 || m.record_type > 23) return {std::nullopt, "tls: bad record type"};
    std::uint16_t ver = r.u16();
    if (dtls && ver != 0xfefd) return {std::nullopt, "dtls: bad version"};
    if (!dtls && (ver >> 8) != 3) return {std::nullopt, "tls: bad version"};
    if (dtls) {
        m.epoch = r.u16();
        std::uint64_t hi = r.u16();
        m.seq = (hi << 32) | r.u32();
    }
    std::uint16_t len = r.u16();
    if (!r.ok() || r.remaining() < len) return {std::nullopt, "tls: truncated record"};
    m.body = r.raw(len);
    return {m, ""};
}

// ---------------------------------------------------------------------------
// Generic encode/decode over the tagged union
// ---------------------------------------------------------------------------

inline Bytes encode(const ProtocolMessage& m) {
    return std::visit([](const auto& v) { return encode(v); }, m);
}

inline Decoded<ProtocolMessage> decode(ProtoHint hint, const Bytes& b) {
    auto lift = [](auto d) -> Decoded<ProtocolMessage> {
        if (!d) return {std::nullopt, d.error};
        return {ProtocolMessage(*d.value), ""};
    };
    switch (hint) {
        case ProtoHint::mqtt: return lift(decode_mqtt(b));
        case ProtoHint::coap: return lift(decode_coap(b));
        case ProtoHint::dns: return lift(decode_dns(b));
        case ProtoHint::ntp: return lift(decode_ntp(b));
        case ProtoHint::rtp: return lift(decode_rtp(b));
        case ProtoHint::rtcp: return lift(decode_rtcp(b));
        case ProtoHint::rtsp: return lift(decode_rtsp(b));
        case ProtoHint::tls: return lift(decode_tls(b, false));
        case ProtoHint::dtls: return lift(decode_tls(b, true));
    }
    return {std::nullopt, "unknown hint"};
}

// ---------------------------------------------------------------------------
// Frame classification (Wireshark-style, deepest recognized layer wins)
// ---------------------------------------------------------------------------

inline bool looks_like_tls_record(const std::uint8_t* p, std::size_t n) {
    return n >= 5 && p[0] >= 20 && p[0] <= 23 && p[1] == 3 && p[2] <= 4;
}

inline bool looks_like_dtls_record(const std::uint8_t* p, std::size_t n) {
    return n >= 13 && p[0] >= 20 && p[0] <= 23 && p[1] == 0xfe && (p[2] == 0xfd || p[2] == 0xff);
}

inline bool rtp_port(std::uint16_t p) { return p >= kRtpPortLo && p <= kRtpPortHi; }

inline std::string classify(const wire::FrameRecord& rec) {
    const Bytes& f = rec.bytes;
    auto eth = wire::parse_eth(f);
    if (!eth) return "other";
    if (eth->ethertype == wire::kEtherArp) return "arp";
    if (eth->ethertype == wire::kEtherIpv6) {
        // next header field at fixed offset for our synthesized v6 noise
        if (f.size() >= wire::kEthHeader + 40 && f[wire::kEthHeader + 6] == 58) return "icmpv6";
        return "other";
    }
    auto ip = wire::parse_ipv4(f);
    if (!ip) return "other";
    if (ip->proto == wire::kProtoIcmp) return "icmp";
    if (ip->proto == wire::kProtoTcp) {
        auto tcp = wire::parse_tcp(f, *ip);
        if (!tcp) return "other";
        if (tcp->payload_len == 0) return "tcp";
        const std::uint8_t* p = f.data() + tcp->payload_off;
        std::size_t n = tcp->payload_len;
        if (tcp->src_port == kPortMqtt || tcp->dst_port == kPortMqtt) {
            Bytes seg(p, p + n);
            if (decode_mqtt(seg)) return "mqtt";
        }
        if (looks_like_tls_record(p, n)) return "tls";
        if (tcp->src_port == kPortRtsp || tcp->dst_port == kPortRtsp) {
            Bytes seg(p, p + n);
            auto rtsp = decode_rtsp(seg);
            if (rtsp) return rtsp.value->content_type == "application/sdp" ? "sdp" : "rtsp";
        }
        return "tcp";
    }
    if (ip->proto == wire::kProtoUdp) {
        auto udp = wire::parse_udp(f, *ip);
        if (!udp) return "other";
        const std::uint8_t* p = f.data() + udp->payload_off;
        std::size_t n = udp->payload_len;
        auto either = [&](std::uint16_t port) {
            return udp->src_port == port || udp->dst_port == port;
        };
        if (either(kPortDns)) return "dns";
        if (either(kPortNtp) && n == 48) return "ntp";
        if (looks_like_dtls_record(p, n)) return "dtls";
        if (either(kPortCoap) || either(kPortCoapDtls)) {
            Bytes d(p, p + n);
            if (decode_coap(d)) return "coap";
        }
        if ((rtp_port(udp->src_port) || rtp_port(udp->dst_port)) && n >= 12 &&
            (p[0] >> 6) == 2) {
            std::uint8_t pt = p[1] & 0x7f;
            bool rtcp = p[1] >= 200 && p[1] <= 204;
            (void)pt;
            return rtcp ? "rtcp" : "rtp";
        }
        return "udp";
    }
    return "other";
}

}  // namespace gotham::protocols
