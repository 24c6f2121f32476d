#pragma once

// Dataset artifacts: classic pcap files (bit-exact), ground-truth frame and
// flow label tables derived from the attack schedule's intervals,
// application log files and protocol histograms.

#include <gotham/protocols.hpp>
#include <gotham/simkernel.hpp>

#include <filesystem>
#include <fstream>

namespace gotham::dataset {

using sim::LabelInterval;
using wire::FrameRecord;

// ---------------------------------------------------------------------------
// pcap (classic format: magic 0xa1b2c3d4, version 2.4, snaplen 65535,
// linktype 1, little-endian, microsecond timestamps)
// ---------------------------------------------------------------------------

constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4;
constexpr std::uint32_t kPcapSnaplen = 65535;
constexpr std::uint32_t kPcapLinktypeEthernet = 1;

namespace detail {
inline void le16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void le32(Bytes& out, std::uint32_t v) {
    le16(out, static_cast<std::uint16_t>(v));
    le16(out, static_cast<std::uint16_t>(v >> 16));
}
inline std::uint32_t rd32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
}  // namespace detail

inline Bytes pcap_bytes(const std::vector<FrameRecord>& records) {
    Bytes out;
    out.reserve(24 + records.size() * 16);
    detail::le32(out, kPcapMagic);
    detail::le16(out, 2);
    detail::le16(out, 4);
    detail::le32(out, 0);  // thiszone
    detail::le32(out, 0);  // sigfigs
    detail::le32(out, kPcapSnaplen);
    detail::le32(out, kPcapLinktypeEthernet);
    for (const auto& r : records) {
        std::uint32_t sec = static_cast<std::uint32_t>(kEpochSeconds + r.ts / kSecond);
        std::uint32_t usec = static_cast<std::uint32_t>(r.ts % kSecond);
        detail::le32(out, sec);
        detail::le32(out, usec);
        detail::le32(out, static_cast<std::uint32_t>(r.bytes.size()));
        detail::le32(out, r.orig_len ? r.orig_len : static_cast<std::uint32_t>(r.bytes.size()));
        out.insert(out.end(), r.bytes.begin(), r.bytes.end());
    }
    return out;
}

inline void write_pcap(const std::vector<FrameRecord>& records,
                       const std::filesystem::path& path) {
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].ts < records[i - 1].ts) throw Error("pcap: records not time-ordered");
    auto bytes = pcap_bytes(records);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("pcap: cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("pcap: write failed for " + path.string());
}

inline std::vector<FrameRecord> read_pcap(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("pcap: cannot read " + path.string());
    Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (data.size() < 24) throw Error("pcap: truncated global header");
    if (detail::rd32(data.data()) != kPcapMagic) throw Error("pcap: bad magic");
    std::vector<FrameRecord> out;
    std::size_t off = 24;
    while (off + 16 <= data.size()) {
        std::uint32_t sec = detail::rd32(data.data() + off);
        std::uint32_t usec = detail::rd32(data.data() + off + 4);
        std::uint32_t incl = detail::rd32(data.data() + off + 8);
        std::uint32_t orig = detail::rd32(data.data() + off + 12);
        off += 16;
        if (off + incl > data.size()) throw Error("pcap: truncated record");
        FrameRecord r;
        r.ts = (static_cast<SimTime>(sec) - kEpochSeconds) * kSecond + usec;
        r.bytes.assign(data.begin() + static_cast<std::ptrdiff_t>(off),
                       data.begin() + static_cast<std::ptrdiff_t>(off + incl));
        r.orig_len = orig;
        out.push_back(std::move(r));
        off += incl;
    }
    if (off != data.size()) throw Error("pcap: trailing bytes");
    return out;
}

// ---------------------------------------------------------------------------
// Labeling
// ---------------------------------------------------------------------------

struct FrameTuple {
    bool is_ip = false;
    Ipv4 src, dst;
    std::uint16_t sport = 0, dport = 0;
    std::uint8_t proto = 0;
    std::string l4;   // tcp/udp/icmp/gre/arp/ipv6/other
};

inline FrameTuple frame_tuple(const FrameRecord& rec) {
    FrameTuple t;
    auto eth = wire::parse_eth(rec.bytes);
    if (!eth) {
        t.l4 = "other";
        return t;
    }
    if (eth->ethertype == wire::kEtherArp) {
        t.l4 = "arp";
        return t;
    }
    if (eth->ethertype == wire::kEtherIpv6) {
        t.l4 = "ipv6";
        return t;
    }
    auto ip = wire::parse_ipv4(rec.bytes);
    if (!ip) {
        t.l4 = "other";
        return t;
    }
    t.is_ip = true;
    t.src = ip->src;
    t.dst = ip->dst;
    t.proto = ip->proto;
    switch (ip->proto) {
        case wire::kProtoTcp: {
            t.l4 = "tcp";
            if (auto tcp = wire::parse_tcp(rec.bytes, *ip)) {
                t.sport = tcp->src_port;
                t.dport = tcp->dst_port;
            }
            break;
        }
        case wire::kProtoUdp: {
            t.l4 = "udp";
            if (auto udp = wire::parse_udp(rec.bytes, *ip)) {
                t.sport = udp->src_port;
                t.dport = udp->dst_port;
            }
            break;
        }
        case wire::kProtoIcmp: t.l4 = "icmp"; break;
        case wire::kProtoGre: t.l4 = "gre"; break;
        default: t.l4 = "ip-" + std::to_string(ip->proto); break;
    }
    return t;
}

inline bool interval_matches(const LabelInterval& iv, SimTime ts, const FrameTuple& t) {
    if (ts < iv.t_start || ts >= iv.t_end) return false;
    if (!t.is_ip) return false;
    const auto& m = iv.match;
    if (m.proto && *m.proto != t.proto) return false;
    if (m.src && *m.src != t.src) return false;
    if (m.dst && *m.dst != t.dst) return false;
    if (!m.sport.matches(t.sport)) return false;
    if (!m.dport.matches(t.dport)) return false;
    return true;
}

struct LabeledFrame {
    std::size_t index = 0;
    SimTime ts = 0;
    FrameTuple tuple;
    std::string app_proto;
    std::string label = "benign";
    std::string actor;
};

struct FlowRow {
    FrameTuple key;  // canonical 5-tuple as first seen
    std::uint64_t packets = 0;
    std::uint64_t bytes = 0;
    SimTime first_ts = 0, last_ts = 0;
    std::string label = "benign";
    std::string actor;
};

struct LabelResult {
    std::vector<LabeledFrame> frames;
    std::vector<FlowRow> flows;
    std::map<std::string, std::uint64_t> label_counts;
};

// Assigns every frame exactly one label: the unique matching interval, else
// benign. Overlapping intervals that disagree are a schedule bug and fail
// hard.
inline LabelResult label_capture(const std::vector<FrameRecord>& records,
                                 const std::vector<LabelInterval>& intervals) {
    LabelResult out;
    out.frames.reserve(records.size());
    std::map<std::string, std::size_t> flow_index;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        LabeledFrame lf;
        lf.index = i;
        lf.ts = rec.ts;
        lf.tuple = frame_tuple(rec);
        lf.app_proto = protocols::classify(rec);
        const LabelInterval* hit = nullptr;
        for (const auto& iv : intervals) {
            if (!interval_matches(iv, rec.ts, lf.tuple)) continue;
            if (hit && hit->label != iv.label)
                throw Error("label conflict at frame " + std::to_string(i) + ": '" + hit->label +
                            "' vs '" + iv.label + "'");
            hit = &iv;
        }
        if (hit) {
            lf.label = hit->label;
            lf.actor = hit->actor;
        }
        out.label_counts[lf.label]++;
        // flow aggregation on the exact 5-tuple
        std::string key = lf.tuple.src.str() + ":" + std::to_string(lf.tuple.sport) + ">" +
                          lf.tuple.dst.str() + ":" + std::to_string(lf.tuple.dport) + "/" +
                          lf.tuple.l4;
        auto [it, fresh] = flow_index.emplace(key, out.flows.size());
        if (fresh) {
            FlowRow row;
            row.key = lf.tuple;
            row.first_ts = rec.ts;
            row.label = lf.label;
            row.actor = lf.actor;
            out.flows.push_back(row);
        }
        auto& flow = out.flows[it->second];
        flow.packets++;
        flow.bytes += rec.bytes.size();
        flow.last_ts = rec.ts;
        if (flow.label == "benign" && lf.label != "benign") {
            flow.label = lf.label;
            flow.actor = lf.actor;
        }
        out.frames.push_back(std::move(lf));
    }
    return out;
}

// Cross-check against the engine's hidden per-frame generator tags.
// Returns the number of frames whose derived label disagrees.
inline std::size_t label_mismatches(const std::vector<FrameRecord>& records,
                                    const LabelResult& labels,
                                    const std::vector<sim::ProvenanceEntry>& prov_table,
                                    std::vector<std::size_t>* out_indices = nullptr) {
    std::size_t bad = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& truth = prov_table.at(records[i].provenance);
        if (truth.label != labels.frames[i].label) {
            ++bad;
            if (out_indices && out_indices->size() < 32) out_indices->push_back(i);
        }
    }
    return bad;
}

// ---------------------------------------------------------------------------
// CSV / log / histogram writers (UTF-8, LF, header row)
// ---------------------------------------------------------------------------

inline void write_frame_csv(const LabelResult& r, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("csv: cannot write " + path.string());
    f << "frame_index,ts_us,src_ip,src_port,dst_ip,dst_port,l4_proto,app_proto,label,actor\n";
    for (const auto& lf : r.frames) {
        f << lf.index << ',' << lf.ts << ',' << (lf.tuple.is_ip ? lf.tuple.src.str() : "") << ','
          << lf.tuple.sport << ',' << (lf.tuple.is_ip ? lf.tuple.dst.str() : "") << ','
          << lf.tuple.dport << ',' << lf.tuple.l4 << ',' << lf.app_proto << ',' << lf.label << ','
          << lf.actor << '\n';
    }
}

inline void write_flow_csv(const LabelResult& r, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("csv: cannot write " + path.string());
    f << "src_ip,src_port,dst_ip,dst_port,l4_proto,packets,bytes,first_ts_us,last_ts_us,label,"
         "actor\n";
    for (const auto& flow : r.flows) {
        f << (flow.key.is_ip ? flow.key.src.str() : "") << ',' << flow.key.sport << ','
          << (flow.key.is_ip ? flow.key.dst.str() : "") << ',' << flow.key.dport << ','
          << flow.key.l4 << ',' << flow.packets << ',' << flow.bytes << ',' << flow.first_ts
          << ',' << flow.last_ts << ',' << flow.label << ',' << flow.actor << '\n';
    }
}

// One log file per logging node: `<iso8601> <node_id> <event> <detail>`.
inline std::vector<std::filesystem::path> write_logs(const std::vector<sim::LogLine>& logs,
                                                     const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::map<std::string, std::ofstream> files;
    std::vector<std::filesystem::path> written;
    for (const auto& line : logs) {
        auto it = files.find(line.node);
        if (it == files.end()) {
            auto path = dir / (line.node + ".log");
            it = files.emplace(line.node, std::ofstream(path, std::ios::binary | std::ios::trunc))
                     .first;
            if (!it->second) throw Error("log: cannot write " + path.string());
            written.push_back(path);
        }
        it->second << format_iso8601(line.t) << ' ' << line.node << ' ' << line.event << ' '
                   << line.detail << '\n';
    }
    return written;
}

struct HistogramRow {
    std::string label;
    std::uint64_t packets = 0;
    double pct = 0;
};

// Wireshark-style protocol distribution; percentages sum to 100 +- 0.01.
inline std::vector<HistogramRow> protocol_histogram(const std::vector<FrameRecord>& records) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& r : records) counts[protocols::classify(r)]++;
    std::vector<HistogramRow> rows;
    for (const auto& [label, n] : counts)
        rows.push_back({label, n, 100.0 * static_cast<double>(n) /
                                      static_cast<double>(records.size())});
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.packets != b.packets) return a.packets > b.packets;
        return a.label < b.label;
    });
    return rows;
}

inline void write_histogram_csv(const std::vector<HistogramRow>& rows,
                                const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("csv: cannot write " + path.string());
    f << "protocol,packets,percent\n";
    char buf[32];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.3f", r.pct);
        f << r.label << ',' << r.packets << ',' << buf << '\n';
    }
}

}  // namespace gotham::dataset
