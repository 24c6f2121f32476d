#pragma once

// L2-L4 frame construction and parsing: Ethernet II, ARP, IPv4, UDP, TCP,
// ICMP, a minimal IPv6/ICMPv6 (neighbor-discovery noise) and GRE. Frames
// are built with valid checksums; parsers never throw on malformed input.

#include <gotham/core.hpp>

namespace gotham::wire {

constexpr std::uint16_t kEtherIpv4 = 0x0800;
constexpr std::uint16_t kEtherArp = 0x0806;
constexpr std::uint16_t kEtherIpv6 = 0x86dd;

constexpr std::uint8_t kProtoIcmp = 1;
constexpr std::uint8_t kProtoTcp = 6;
constexpr std::uint8_t kProtoUdp = 17;
constexpr std::uint8_t kProtoGre = 47;

constexpr std::size_t kEthHeader = 14;
constexpr std::size_t kMinFrame = 60;  // without FCS

// TCP flag bits
constexpr std::uint8_t kFin = 0x01;
constexpr std::uint8_t kSyn = 0x02;
constexpr std::uint8_t kRst = 0x04;
constexpr std::uint8_t kPsh = 0x08;
constexpr std::uint8_t kAck = 0x10;

// One captured frame; the unit of pcap output.
struct FrameRecord {
    SimTime ts = 0;
    std::string link_id;
    enum class Dir { ab, ba } direction = Dir::ab;
    Bytes bytes;            // Ethernet II frame, no FCS
    std::uint32_t orig_len = 0;
    std::uint32_t provenance = 0;  // hidden generator tag, not serialized to pcap
};

inline const char* dir_str(FrameRecord::Dir d) { return d == FrameRecord::Dir::ab ? "ab" : "ba"; }

// ---------------------------------------------------------------------------
// Checksums (RFC 1071 ones' complement sum)
// ---------------------------------------------------------------------------

inline std::uint32_t checksum_add(std::uint32_t sum, const std::uint8_t* data, std::size_t len) {
    for (std::size_t i = 0; i + 1 < len; i += 2)
        sum += (static_cast<std::uint32_t>(data[i]) << 8) | data[i + 1];
    if (len & 1) sum += static_cast<std::uint32_t>(data[len - 1]) << 8;
    return sum;
}

inline std::uint16_t checksum_finish(std::uint32_t sum) {
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

inline std::uint16_t internet_checksum(const std::uint8_t* data, std::size_t len) {
    return checksum_finish(checksum_add(0, data, len));
}

// ---------------------------------------------------------------------------
// Header views (parsed out of a raw frame)
// ---------------------------------------------------------------------------

struct EthView {
    Mac dst, src;
    std::uint16_t ethertype = 0;
};

struct Ipv4View {
    Ipv4 src, dst;
    std::uint8_t proto = 0;
    std::uint8_t ttl = 0;
    std::uint16_t total_len = 0;
    std::size_t header_len = 0;  // bytes
    std::size_t payload_off = 0; // offset of L4 payload within the frame
    std::size_t payload_len = 0;
};

struct UdpView {
    std::uint16_t src_port = 0, dst_port = 0;
    std::size_t payload_off = 0;
    std::size_t payload_len = 0;
};

struct TcpView {
    std::uint16_t src_port = 0, dst_port = 0;
    std::uint32_t seq = 0, ack = 0;
    std::uint8_t flags = 0;
    std::uint16_t window = 0;
    std::size_t header_len = 0;
    std::size_t payload_off = 0;
    std::size_t payload_len = 0;
};

struct IcmpView {
    std::uint8_t type = 0, code = 0;
    std::uint16_t ident = 0, seqno = 0;
    std::size_t payload_off = 0;
    std::size_t payload_len = 0;
};

struct ArpView {
    std::uint16_t opcode = 0;  // 1 request, 2 reply
    Mac sender_mac, target_mac;
    Ipv4 sender_ip, target_ip;
};

inline std::optional<EthView> parse_eth(const Bytes& f) {
    if (f.size() < kEthHeader) return std::nullopt;
    EthView v;
    std::copy(f.begin(), f.begin() + 6, v.dst.b.begin());
    std::copy(f.begin() + 6, f.begin() + 12, v.src.b.begin());
    v.ethertype = static_cast<std::uint16_t>((f[12] << 8) | f[13]);
    return v;
}

inline std::optional<Ipv4View> parse_ipv4(const Bytes& f) {
    auto eth = parse_eth(f);
    if (!eth || eth->ethertype != kEtherIpv4) return std::nullopt;
    if (f.size() < kEthHeader + 20) return std::nullopt;
    const std::uint8_t* p = f.data() + kEthHeader;
    if ((p[0] >> 4) != 4) return std::nullopt;
    Ipv4View v;
    v.header_len = static_cast<std::size_t>(p[0] & 0x0f) * 4;
    if (v.header_len < 20 || f.size() < kEthHeader + v.header_len) return std::nullopt;
    v.total_len = static_cast<std::uint16_t>((p[2] << 8) | p[3]);
    v.ttl = p[8];
    v.proto = p[9];
    v.src = Ipv4((p[12] << 24) | (p[13] << 16) | (p[14] << 8) | p[15]);
    v.dst = Ipv4((p[16] << 24) | (p[17] << 16) | (p[18] << 8) | p[19]);
    std::size_t avail = std::min<std::size_t>(f.size() - kEthHeader, v.total_len);
    if (avail < v.header_len) return std::nullopt;
    v.payload_off = kEthHeader + v.header_len;
    v.payload_len = avail - v.header_len;
    return v;
}

inline std::optional<UdpView> parse_udp(const Bytes& f, const Ipv4View& ip) {
    if (ip.proto != kProtoUdp || ip.payload_len < 8) return std::nullopt;
    const std::uint8_t* p = f.data() + ip.payload_off;
    UdpView v;
    v.src_port = static_cast<std::uint16_t>((p[0] << 8) | p[1]);
    v.dst_port = static_cast<std::uint16_t>((p[2] << 8) | p[3]);
    std::size_t udp_len = static_cast<std::size_t>((p[4] << 8) | p[5]);
    if (udp_len < 8 || udp_len > ip.payload_len) return std::nullopt;
    v.payload_off = ip.payload_off + 8;
    v.payload_len = udp_len - 8;
    return v;
}

inline std::optional<TcpView> parse_tcp(const Bytes& f, const Ipv4View& ip) {
    if (ip.proto != kProtoTcp || ip.payload_len < 20) return std::nullopt;
    const std::uint8_t* p = f.data() + ip.payload_off;
    TcpView v;
    v.src_port = static_cast<std::uint16_t>((p[0] << 8) | p[1]);
    v.dst_port = static_cast<std::uint16_t>((p[2] << 8) | p[3]);
    v.seq = (static_cast<std::uint32_t>(p[4]) << 24) | (p[5] << 16) | (p[6] << 8) | p[7];
    v.ack = (static_cast<std::uint32_t>(p[8]) << 24) | (p[9] << 16) | (p[10] << 8) | p[11];
    v.header_len = static_cast<std::size_t>(p[12] >> 4) * 4;
    v.flags = p[13];
    v.window = static_cast<std::uint16_t>((p[14] << 8) | p[15]);
    if (v.header_len < 20 || ip.payload_len < v.header_len) return std::nullopt;
    v.payload_off = ip.payload_off + v.header_len;
    v.payload_len = ip.payload_len - v.header_len;
    return v;
}

inline std::optional<IcmpView> parse_icmp(const Bytes& f, const Ipv4View& ip) {
    if (ip.proto != kProtoIcmp || ip.payload_len < 8) return std::nullopt;
    const std::uint8_t* p = f.data() + ip.payload_off;
    IcmpView v;
    v.type = p[0];
    v.code = p[1];
    v.ident = static_cast<std::uint16_t>((p[4] << 8) | p[5]);
    v.seqno = static_cast<std::uint16_t>((p[6] << 8) | p[7]);
    v.payload_off = ip.payload_off + 8;
    v.payload_len = ip.payload_len - 8;
    return v;
}

inline std::optional<ArpView> parse_arp(const Bytes& f) {
    auto eth = parse_eth(f);
    if (!eth || eth->ethertype != kEtherArp) return std::nullopt;
    if (f.size() < kEthHeader + 28) return std::nullopt;
    const std::uint8_t* p = f.data() + kEthHeader;
    if (p[2] != 0x08 || p[3] != 0x00 || p[4] != 6 || p[5] != 4) return std::nullopt;
    ArpView v;
    v.opcode = static_cast<std::uint16_t>((p[6] << 8) | p[7]);
    std::copy(p + 8, p + 14, v.sender_mac.b.begin());
    v.sender_ip = Ipv4((p[14] << 24) | (p[15] << 16) | (p[16] << 8) | p[17]);
    std::copy(p + 18, p + 24, v.target_mac.b.begin());
    v.target_ip = Ipv4((p[24] << 24) | (p[25] << 16) | (p[26] << 8) | p[27]);
    return v;
}

// ---------------------------------------------------------------------------
// Frame builders
// ---------------------------------------------------------------------------

inline void eth_header(ByteWriter& w, Mac dst, Mac src, std::uint16_t ethertype) {
    w.raw(dst.b.data(), 6);
    w.raw(src.b.data(), 6);
    w.u16(ethertype);
}

// Appends an IPv4 header; identification derives from (src,dst,seq hint).
inline void ipv4_header(Bytes& out, Ipv4 src, Ipv4 dst, std::uint8_t proto,
                        std::size_t payload_len, std::uint8_t ttl, std::uint16_t ident) {
    std::size_t start = out.size();
    ByteWriter w(out);
    w.u8(0x45);
    w.u8(0);
    w.u16(static_cast<std::uint16_t>(20 + payload_len));
    w.u16(ident);
    w.u16(0x4000);  // DF
    w.u8(ttl);
    w.u8(proto);
    w.u16(0);  // checksum placeholder
    w.u32(src.v);
    w.u32(dst.v);
    std::uint16_t ck = internet_checksum(out.data() + start, 20);
    w.patch_u16(start + 10, ck);
}

inline std::uint32_t pseudo_header_sum(Ipv4 src, Ipv4 dst, std::uint8_t proto, std::size_t len) {
    std::uint32_t sum = 0;
    sum += (src.v >> 16) + (src.v & 0xffff);
    sum += (dst.v >> 16) + (dst.v & 0xffff);
    sum += proto;
    sum += static_cast<std::uint32_t>(len);
    return sum;
}

struct FrameSpec {
    Mac src_mac, dst_mac;
    Ipv4 src_ip, dst_ip;
    std::uint8_t ttl = 64;
    std::uint16_t ident = 0;
};

inline Bytes build_udp(const FrameSpec& fs, std::uint16_t sport, std::uint16_t dport,
                       const Bytes& payload) {
    Bytes out;
    out.reserve(kEthHeader + 28 + payload.size());
    ByteWriter w(out);
    eth_header(w, fs.dst_mac, fs.src_mac, kEtherIpv4);
    ipv4_header(out, fs.src_ip, fs.dst_ip, kProtoUdp, 8 + payload.size(), fs.ttl, fs.ident);
    std::size_t udp_start = out.size();
    w.u16(sport);
    w.u16(dport);
    w.u16(static_cast<std::uint16_t>(8 + payload.size()));
    w.u16(0);
    w.raw(payload);
    std::uint32_t sum = pseudo_header_sum(fs.src_ip, fs.dst_ip, kProtoUdp, 8 + payload.size());
    sum = checksum_add(sum, out.data() + udp_start, out.size() - udp_start);
    std::uint16_t ck = checksum_finish(sum);
    if (ck == 0) ck = 0xffff;
    w.patch_u16(udp_start + 6, ck);
    return out;
}

struct TcpSpec {
    std::uint16_t sport = 0, dport = 0;
    std::uint32_t seq = 0, ack = 0;
    std::uint8_t flags = 0;
    std::uint16_t window = 65535;
};

inline Bytes build_tcp(const FrameSpec& fs, const TcpSpec& t, const Bytes& payload) {
    Bytes out;
    out.reserve(kEthHeader + 40 + payload.size());
    ByteWriter w(out);
    eth_header(w, fs.dst_mac, fs.src_mac, kEtherIpv4);
    ipv4_header(out, fs.src_ip, fs.dst_ip, kProtoTcp, 20 + payload.size(), fs.ttl, fs.ident);
    std::size_t tcp_start = out.size();
    w.u16(t.sport);
    w.u16(t.dport);
    w.u32(t.seq);
    w.u32(t.ack);
    w.u8(0x50);  // data offset 5 words
    w.u8(t.flags);
    w.u16(t.window);
    w.u16(0);  // checksum
    w.u16(0);  // urgent
    w.raw(payload);
    std::uint32_t sum = pseudo_header_sum(fs.src_ip, fs.dst_ip, kProtoTcp, 20 + payload.size());
    sum = checksum_add(sum, out.data() + tcp_start, out.size() - tcp_start);
    w.patch_u16(tcp_start + 16, checksum_finish(sum));
    return out;
}

inline Bytes build_icmp(const FrameSpec& fs, std::uint8_t type, std::uint8_t code,
                        std::uint16_t ident, std::uint16_t seqno, const Bytes& payload) {
    Bytes out;
    out.reserve(kEthHeader + 28 + payload.size());
    ByteWriter w(out);
    eth_header(w, fs.dst_mac, fs.src_mac, kEtherIpv4);
    ipv4_header(out, fs.src_ip, fs.dst_ip, kProtoIcmp, 8 + payload.size(), fs.ttl, fs.ident);
    std::size_t icmp_start = out.size();
    w.u8(type);
    w.u8(code);
    w.u16(0);
    w.u16(ident);
    w.u16(seqno);
    w.raw(payload);
    w.patch_u16(icmp_start + 2,
                internet_checksum(out.data() + icmp_start, out.size() - icmp_start));
    return out;
}

inline Bytes build_arp(Mac src_mac, Mac dst_mac, std::uint16_t opcode, Mac sender_mac,
                       Ipv4 sender_ip, Mac target_mac, Ipv4 target_ip) {
    Bytes out;
    out.reserve(kEthHeader + 28);
    ByteWriter w(out);
    eth_header(w, dst_mac, src_mac, kEtherArp);
    w.u16(1);  // hardware: ethernet
    w.u16(kEtherIpv4);
    w.u8(6);
    w.u8(4);
    w.u16(opcode);
    w.raw(sender_mac.b.data(), 6);
    w.u32(sender_ip.v);
    w.raw(target_mac.b.data(), 6);
    w.u32(target_ip.v);
    return out;
}

// GRE (RFC 2784, no options) encapsulating either an IPv4 packet or an
// Ethernet frame (transparent bridging ethertype).
inline Bytes build_gre(const FrameSpec& fs, std::uint16_t inner_ethertype, const Bytes& inner) {
    Bytes out;
    out.reserve(kEthHeader + 24 + inner.size());
    ByteWriter w(out);
    eth_header(w, fs.dst_mac, fs.src_mac, kEtherIpv4);
    ipv4_header(out, fs.src_ip, fs.dst_ip, kProtoGre, 4 + inner.size(), fs.ttl, fs.ident);
    w.u16(0);  // flags/version
    w.u16(inner_ethertype);
    w.raw(inner);
    return out;
}

// Minimal ICMPv6 neighbor-discovery noise frame (router solicitation).
// Enough structure for dissectors to identify icmpv6; IPv6 is otherwise a
// non-goal.
inline Bytes build_icmpv6_rs(Mac src_mac, std::uint64_t iface_uid) {
    Bytes out;
    ByteWriter w(out);
    Mac all_routers{{0x33, 0x33, 0x00, 0x00, 0x00, 0x02}};
    eth_header(w, all_routers, src_mac, kEtherIpv6);
    std::size_t v6_start = out.size();
    w.u32(0x60000000);
    w.u16(8);   // payload length
    w.u8(58);   // next header: ICMPv6
    w.u8(255);  // hop limit
    // src: link-local fe80:: derived from iface uid
    w.u16(0xfe80);
    w.u16(0);
    w.u32(0);
    w.u64(iface_uid);
    // dst: ff02::2
    w.u16(0xff02);
    w.u16(0);
    w.u32(0);
    w.u64(2);
    std::size_t icmp_start = out.size();
    w.u8(133);  // router solicitation
    w.u8(0);
    w.u16(0);
    w.u32(0);  // reserved
    // ICMPv6 checksum over pseudo header + payload
    std::uint32_t sum = 0;
    sum = checksum_add(sum, out.data() + v6_start + 8, 32);  // src+dst
    sum += 8;   // upper-layer length
    sum += 58;  // next header
    sum = checksum_add(sum, out.data() + icmp_start, 8);
    w.patch_u16(icmp_start + 2, checksum_finish(sum));
    return out;
}

// Pads a frame to the Ethernet minimum (60 bytes without FCS).
inline void pad_frame(Bytes& f) {
    if (f.size() < kMinFrame) f.resize(kMinFrame, 0);
}

// Validates the IPv4 header checksum plus the L4 checksum when present.
// Used by tests and the conservation invariants.
inline bool checksums_valid(const Bytes& f) {
    auto ip = parse_ipv4(f);
    if (!ip) return true;  // non-IP frames carry no checksum here
    if (internet_checksum(f.data() + kEthHeader, ip->header_len) != 0) return false;
    if (ip->proto == kProtoTcp || ip->proto == kProtoUdp) {
        if (ip->payload_len < (ip->proto == kProtoTcp ? 20u : 8u)) return false;
        std::uint32_t sum = pseudo_header_sum(ip->src, ip->dst, ip->proto, ip->payload_len);
        sum = checksum_add(sum, f.data() + ip->payload_off, ip->payload_len);
        return checksum_finish(sum) == 0;
    }
    if (ip->proto == kProtoIcmp)
        return internet_checksum(f.data() + ip->payload_off, ip->payload_len) == 0;
    return true;
}

}  // namespace gotham::wire
