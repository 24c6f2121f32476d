#pragma once

// Deterministic discrete-event engine: virtual clock, ordered event queue,
// frame forwarding across switches and routers (MAC learning, longest-prefix
// match, ARP incl. proxy ARP), simplified UDP/ICMP/TCP endpoint stacks with
// AIMD congestion control, capture taps and the node resource model.
//
// Everything is single-threaded; (scenario, seed) fully determines every
// frame byte and timestamp.

#include <gotham/topology.hpp>

#include <deque>
#include <functional>
#include <memory>
#include <queue>

namespace gotham::sim {

using wire::FrameRecord;

// ---------------------------------------------------------------------------
// Source-port bands. Benign stacks draw ephemeral ports from one range;
// attack generators draw from reserved ranges so ground-truth labeling by
// 5-tuple stays unambiguous even when attacker and victim also exchange
// benign traffic.
// ---------------------------------------------------------------------------

struct PortBand {
    std::uint16_t lo, hi;  // [lo, hi)
    bool contains(std::uint16_t p) const { return p >= lo && p < hi; }
};

constexpr PortBand kBandBenign{20000, 28000};
constexpr PortBand kBandMiraiCnc{28000, 32000};
constexpr PortBand kBandFlood{32768, 40000};
constexpr PortBand kBandMiraiScan{40000, 44000};
constexpr PortBand kBandMiraiBrute{44000, 48000};
constexpr PortBand kBandMiraiIngress{48000, 50000};
constexpr PortBand kBandMerlinBeacon{50000, 54000};
constexpr PortBand kBandMerlinIngress{54000, 56000};
constexpr PortBand kBandMerlinExec{56000, 58000};
constexpr PortBand kBandScan{58000, 60000};
constexpr PortBand kBandMqttAttack{60000, 62000};
constexpr PortBand kBandCoapAmp{62000, 63000};

// ---------------------------------------------------------------------------
// Ground truth: label intervals emitted by attack generators, and the
// hidden per-frame provenance they must agree with.
// ---------------------------------------------------------------------------

struct PortPattern {
    std::uint16_t lo = 0, hi = 0;  // [lo, hi); 0,0 = any
    bool any() const { return lo == 0 && hi == 0; }
    bool matches(std::uint16_t p) const { return any() || (p >= lo && p < hi); }
    static PortPattern exact(std::uint16_t p) {
        return {p, static_cast<std::uint16_t>(p + 1)};
    }
    static PortPattern band(PortBand b) { return {b.lo, b.hi}; }
    bool operator==(const PortPattern&) const = default;
};

struct TuplePattern {
    std::optional<Ipv4> src, dst;
    PortPattern sport, dport;
    std::optional<std::uint8_t> proto;  // IP protocol number
    bool operator==(const TuplePattern&) const = default;
};

struct LabelInterval {
    SimTime t_start = 0, t_end = 0;
    TuplePattern match;
    std::string label;  // "mirai-scan", "merlin-dos-icmp-echo", ...
    std::string actor;  // "maroni", "falcone", "calabrese"
    bool operator==(const LabelInterval&) const = default;
};

struct ProvenanceEntry {
    std::string label;
    std::string actor;
};

// ---------------------------------------------------------------------------
// Stats and logs
// ---------------------------------------------------------------------------

struct LinkCounters {
    std::uint64_t offered[2] = {0, 0};  // frames handed to each direction
    std::uint64_t arrived[2] = {0, 0};
    std::uint64_t drop_loss[2] = {0, 0};
    std::uint64_t drop_queue[2] = {0, 0};
};

struct RunStats {
    std::uint64_t events = 0;
    std::uint64_t frames_origin = 0;     // host-originated frames
    std::uint64_t frames_forwarded = 0;  // switch/router forward operations
    std::uint64_t frames_delivered = 0;  // accepted by a host/router stack
    std::uint64_t link_offered = 0;      // per-hop frames handed to a link
    std::uint64_t link_arrived = 0;      // per-hop frames off a link
    std::uint64_t drops_loss = 0;
    std::uint64_t drops_queue = 0;
    std::uint64_t drops_noroute = 0;
    std::uint64_t drops_ttl = 0;
    std::uint64_t drops_arp_fail = 0;
    std::uint64_t drops_nomatch = 0;     // frames discarded at a non-matching NIC
    std::map<std::string, std::uint64_t> node_tx, node_rx;

    bool operator==(const RunStats&) const = default;
};

struct LogLine {
    SimTime t;
    std::string node;
    std::string event;
    std::string detail;
};

class Engine;

// Behaviors are event-driven state machines owned by nodes; `devices` and
// `threats` provide the implementations.
struct Behavior {
    virtual ~Behavior() = default;
    virtual void start(Engine& eng, std::size_t node) = 0;
};

// ---------------------------------------------------------------------------
// TCP connection (fixed MSS 1448, initial cwnd 10 segments, AIMD +1 MSS
// per RTT and x0.5 on loss, RTO = max(200 ms, 2*srtt), no SACK).
// ---------------------------------------------------------------------------

constexpr std::size_t kTcpMss = 1448;
constexpr int kTcpInitialCwndSegments = 10;
constexpr SimTime kTcpMinRto = 200 * kMilli;
constexpr SimTime kTcpSynRetryBase = kSecond;
constexpr int kTcpSynRetries = 3;
constexpr SimTime kServiceTimeBaseUs = 50;  // base per-message service time
constexpr int kConnsPerMemoryMb = 16;       // memory model: 1 MB -> 16 conns

enum class TcpState { SynSent, SynReceived, Established, FinWait, CloseWait, Closing, Closed };

class TcpConn {
public:
    // Application callbacks. on_data receives in-order payload bytes after
    // the node's service delay.
    std::function<void(TcpConn&)> on_connected;
    std::function<void(TcpConn&, const Bytes&)> on_data;
    std::function<void(TcpConn&)> on_peer_closed;
    std::function<void(TcpConn&, const std::string&)> on_failed;

    std::uint64_t uid = 0;
    std::size_t node = 0;  // owning node index
    Ipv4 local_ip, peer_ip;
    std::uint16_t local_port = 0, peer_port = 0;
    std::uint32_t prov = 0;
    TcpState state = TcpState::Closed;
    bool server_side = false;
    std::shared_ptr<void> user;  // per-connection behavior state, conn-scoped

    // congestion/sequencing state
    double cwnd = kTcpMss * kTcpInitialCwndSegments;
    double srtt_us = 0;
    std::uint32_t snd_una = 0, snd_nxt = 0, iss = 0;
    std::uint32_t rcv_nxt = 0;
    int dup_acks = 0;
    int syn_tries = 0;
    std::uint64_t rto_epoch = 0;  // invalidates stale retransmit timers
    SimTime rto_sample_start = 0;
    std::uint32_t rto_sample_seq = 0;
    bool fin_sent = false, peer_fin = false;
    bool close_requested = false;

    std::deque<std::uint8_t> send_buf;               // not yet segmented
    std::map<std::uint32_t, Bytes> retained;         // sent, unacked segments
    std::map<std::uint32_t, Bytes> ooo;              // out-of-order reassembly

    std::uint32_t sent_unacked_bytes() const { return snd_nxt - snd_una; }
    bool established() const { return state == TcpState::Established; }
    bool closed() const { return state == TcpState::Closed; }

private:
    friend class Engine;
};

using TcpConnPtr = std::shared_ptr<TcpConn>;

struct UdpDelivery {
    std::size_t node = 0;
    Ipv4 src, dst;
    std::uint16_t sport = 0, dport = 0;
    Bytes payload;
    std::uint32_t prov = 0;
};

using UdpHandler = std::function<void(const UdpDelivery&)>;
using PingHandler = std::function<void(Ipv4 from, std::uint16_t seqno, SimTime rtt)>;

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

class CaptureSession {
public:
    std::string capture_id;
    std::string link_id;
    std::vector<FrameRecord> records;
};

class Engine {
public:
    Engine(topology::Topology topo, std::uint64_t seed)
        : topo_(std::move(topo)), root_rng_(seed), seed_(seed) {
        build_runtime();
    }

    // --- clock & events ----------------------------------------------------

    SimTime now() const { return now_; }
    std::uint64_t seed() const { return seed_; }
    const topology::Topology& topo() const { return topo_; }

    void schedule_at(SimTime t, std::function<void()> fn) {
        if (t < now_) throw Error("schedule: event in the past");
        queue_.push(Event{t, next_seq_++, std::move(fn)});
    }
    void schedule_in(SimTime dt, std::function<void()> fn) {
        schedule_at(now_ + dt, std::move(fn));
    }

    RunStats run(SimTime until) {
        while (!queue_.empty()) {
            const Event& top = queue_.top();
            if (top.fire_at > until) break;
            auto fn = std::move(const_cast<Event&>(top).fn);
            now_ = top.fire_at;
            queue_.pop();
            fn();
            ++stats_.events;
        }
        now_ = until;
        return stats_;
    }

    const RunStats& stats() const { return stats_; }

    // --- topology access ---------------------------------------------------

    std::size_t node_index(const std::string& node_id) const {
        auto it = node_index_.find(node_id);
        if (it == node_index_.end()) throw Error("unknown node: " + node_id);
        return it->second;
    }
    bool has_node(const std::string& node_id) const { return node_index_.count(node_id) > 0; }
    const topology::NodeInstance& node_def(std::size_t idx) const { return topo_.nodes.at(idx); }
    Ipv4 node_addr(std::size_t idx) const { return node_def(idx).iface0().ipv4; }
    std::size_t node_count() const { return rt_.size(); }
    const std::map<std::string, Ipv4>& names() const { return names_; }
    std::optional<Ipv4> resolve_static(const std::string& name) const {
        auto it = names_.find(name);
        if (it == names_.end()) return std::nullopt;
        return it->second;
    }
    const std::vector<topology::RoutingTable>& routing_tables() const { return routing_tables_; }

    // --- RNG / provenance / ground truth -----------------------------------

    Rng rng_stream(const std::string& name) const { return root_rng_.fork(name); }

    std::uint32_t prov_id(const std::string& label, const std::string& actor) {
        for (std::size_t i = 0; i < prov_table_.size(); ++i)
            if (prov_table_[i].label == label && prov_table_[i].actor == actor)
                return static_cast<std::uint32_t>(i);
        prov_table_.push_back({label, actor});
        return static_cast<std::uint32_t>(prov_table_.size() - 1);
    }
    const ProvenanceEntry& prov_entry(std::uint32_t id) const { return prov_table_.at(id); }
    const std::vector<ProvenanceEntry>& prov_table() const { return prov_table_; }

    void add_interval(LabelInterval iv) { intervals_.push_back(std::move(iv)); }
    std::vector<LabelInterval>& intervals() { return intervals_; }
    const std::vector<LabelInterval>& intervals() const { return intervals_; }

    void log(std::size_t node, const std::string& event, const std::string& detail) {
        logs_.push_back({now_, node_def(node).node_id, event, detail});
    }
    const std::vector<LogLine>& logs() const { return logs_; }

    // --- behaviors & lifecycle ---------------------------------------------

    void set_behavior(const std::string& node_id, std::unique_ptr<Behavior> b) {
        rt_[node_index(node_id)].behavior = std::move(b);
    }
    Behavior* behavior(std::size_t node) { return rt_[node].behavior.get(); }

    // Starts nodes in fixed order: switches, routers, cloud services,
    // devices, attackers.
    void start_all() {
        for (auto kind : {topology::NodeKind::Switch, topology::NodeKind::Router,
                          topology::NodeKind::CloudService, topology::NodeKind::IotDevice,
                          topology::NodeKind::Attacker}) {
            for (std::size_t i = 0; i < rt_.size(); ++i) {
                if (rt_[i].kind != kind) continue;
                log(i, "start", topo_.nodes[i].template_id);
                if (rt_[i].behavior) rt_[i].behavior->start(*this, i);
            }
        }
    }

    // --- captures ------------------------------------------------------------

    std::string attach_capture(const std::string& link_id) {
        auto it = link_index_.find(link_id);
        if (it == link_index_.end()) throw Error("unknown link: " + link_id);
        auto session = std::make_unique<CaptureSession>();
        session->capture_id = "cap-" + std::to_string(captures_.size());
        session->link_id = link_id;
        links_[it->second].taps.push_back(session.get());
        captures_.push_back(std::move(session));
        return captures_.back()->capture_id;
    }
    const CaptureSession& capture(const std::string& capture_id) const {
        for (const auto& c : captures_)
            if (c->capture_id == capture_id) return *c;
        throw Error("unknown capture: " + capture_id);
    }
    const std::vector<std::unique_ptr<CaptureSession>>& captures() const { return captures_; }

    LinkCounters link_counters(const std::string& link_id) const {
        auto it = link_index_.find(link_id);
        if (it == link_index_.end()) throw Error("unknown link: " + link_id);
        return links_[it->second].counters;
    }

    // --- QoS / resources -----------------------------------------------------

    void apply_qos(const std::string& link_id, wire::FrameRecord::Dir dir,
                   const linkshape::QosProfile& profile) {
        auto it = link_index_.find(link_id);
        if (it == link_index_.end()) throw Error("unknown link: " + link_id);
        profile.validate();
        links_[it->second].qos[static_cast<int>(dir)] = profile;
    }

    void set_resources(const std::string& node_id, topology::NodeResources r) {
        if (r.cpu_share <= 0 || r.cpu_share > 1.0) throw Error("bad cpu_share");
        if (r.memory_mb < 1) throw Error("bad memory_mb");
        rt_[node_index(node_id)].resources = r;
    }
    topology::NodeResources resources(std::size_t node) const { return rt_[node].resources; }

    // Per-message service time under the node's CPU share.
    SimTime service_time(std::size_t node) const {
        return static_cast<SimTime>(static_cast<double>(kServiceTimeBaseUs) /
                                    rt_[node].resources.cpu_share);
    }

    // Serializes application-level message handling through the node's CPU.
    void deliver_app(std::size_t node, std::function<void()> fn) {
        auto& n = rt_[node];
        SimTime at = std::max(now_, n.busy_until) + service_time(node);
        n.busy_until = at;
        schedule_at(at, std::move(fn));
    }

    // --- port allocation -----------------------------------------------------

    std::uint16_t alloc_port(std::size_t node, PortBand band = kBandBenign) {
        auto& next = rt_[node].next_port[band.lo];
        if (next < band.lo || next >= band.hi) next = band.lo;
        return next++;
    }

    // --- UDP / ICMP ----------------------------------------------------------

    void udp_bind(std::size_t node, std::uint16_t port, UdpHandler h) {
        rt_[node].udp_binds[port] = std::move(h);
    }
    void udp_unbind(std::size_t node, std::uint16_t port) { rt_[node].udp_binds.erase(port); }
    bool udp_bound(std::size_t node, std::uint16_t port) const {
        return rt_[node].udp_binds.count(port) > 0;
    }

    // Sends a UDP datagram; sport 0 allocates a benign ephemeral port.
    std::uint16_t send_udp(std::size_t node, Ipv4 dst, std::uint16_t dport, const Bytes& payload,
                           std::uint32_t prov = 0, std::uint16_t sport = 0) {
        if (sport == 0) sport = alloc_port(node);
        auto& n = rt_[node];
        wire::FrameSpec fs = frame_spec(n, dst);
        Bytes f = wire::build_udp(fs, sport, dport, payload);
        host_origin(n, dst, std::move(f), prov);
        return sport;
    }

    // Sends a UDP datagram with a forged source address.
    void send_udp_spoofed(std::size_t node, Ipv4 spoof_src, std::uint16_t sport, Ipv4 dst,
                          std::uint16_t dport, const Bytes& payload, std::uint32_t prov) {
        auto& n = rt_[node];
        wire::FrameSpec fs = frame_spec(n, dst);
        fs.src_ip = spoof_src;
        Bytes f = wire::build_udp(fs, sport, dport, payload);
        host_origin(n, dst, std::move(f), prov);
    }

    void ping(std::size_t node, Ipv4 dst, std::uint32_t prov = 0, PingHandler on_reply = nullptr,
              std::size_t payload_bytes = 32) {
        auto& n = rt_[node];
        std::uint16_t ident = n.icmp_ident++;
        if (on_reply) n.ping_waiters[ident] = {now_, std::move(on_reply)};
        Bytes payload(payload_bytes, 0);
        for (std::size_t i = 0; i < payload.size(); ++i)
            payload[i] = static_cast<std::uint8_t>('a' + i % 26);
        wire::FrameSpec fs = frame_spec(n, dst);
        Bytes f = wire::build_icmp(fs, 8, 0, ident, 1, payload);
        host_origin(n, dst, std::move(f), prov);
    }

    // Raw ICMP echo request with an arbitrary source (flood generators).
    void send_icmp_echo_raw(std::size_t node, Ipv4 src, Ipv4 dst, std::uint16_t ident,
                            std::uint16_t seqno, std::size_t payload_bytes, std::uint32_t prov) {
        auto& n = rt_[node];
        Bytes payload(payload_bytes, 0x42);
        wire::FrameSpec fs = frame_spec(n, dst);
        fs.src_ip = src;
        Bytes f = wire::build_icmp(fs, 8, 0, ident, seqno, payload);
        host_origin(n, dst, std::move(f), prov);
    }

    // Raw TCP segment injection (stateless floods / scans).
    void send_raw_tcp(std::size_t node, Ipv4 src, Ipv4 dst, const wire::TcpSpec& t,
                      const Bytes& payload, std::uint32_t prov) {
        auto& n = rt_[node];
        wire::FrameSpec fs = frame_spec(n, dst);
        fs.src_ip = src;
        Bytes f = wire::build_tcp(fs, t, payload);
        host_origin(n, dst, std::move(f), prov);
    }

    void send_gre(std::size_t node, Ipv4 src, Ipv4 dst, std::uint16_t inner_ethertype,
                  const Bytes& inner, std::uint32_t prov) {
        auto& n = rt_[node];
        wire::FrameSpec fs = frame_spec(n, dst);
        fs.src_ip = src;
        Bytes f = wire::build_gre(fs, inner_ethertype, inner);
        host_origin(n, dst, std::move(f), prov);
    }

    // Synthesized IPv6 neighbor-discovery noise.
    void emit_nd_noise(std::size_t node, std::uint32_t prov = 0) {
        auto& n = rt_[node];
        if (n.ports_empty()) return;
        Bytes f = wire::build_icmpv6_rs(n.iface(0).mac, fnv1a64(node_def(node).node_id));
        ++stats_.frames_origin;
        ++stats_.node_tx[node_def(node).node_id];
        transmit(n, 0, std::move(f), prov);
    }

    // --- TCP -----------------------------------------------------------------

    void tcp_listen(std::size_t node, std::uint16_t port,
                    std::function<void(TcpConn&)> on_accept) {
        rt_[node].tcp_listeners[port] = std::move(on_accept);
    }
    void tcp_unlisten(std::size_t node, std::uint16_t port) {
        rt_[node].tcp_listeners.erase(port);
    }
    bool tcp_listening(std::size_t node, std::uint16_t port) const {
        return rt_[node].tcp_listeners.count(port) > 0;
    }
    // Observer for TCP segments that match no connection (stateless
    // scanners). Returning true suppresses the automatic RST.
    void set_tcp_observer(std::size_t node,
                          std::function<bool(Ipv4 src, const wire::TcpView&)> fn) {
        rt_[node].tcp_observer = std::move(fn);
    }
    // Service ports a node listens or is bound on (scan ground truth).
    std::vector<std::uint16_t> open_ports(std::size_t node) const {
        std::vector<std::uint16_t> out;
        for (const auto& [p, _] : rt_[node].tcp_listeners) out.push_back(p);
        return out;
    }

    // Opens a connection; handlers may be set on the returned conn before
    // the handshake completes (events fire strictly later). Returns null
    // when the node's connection budget is exhausted.
    TcpConnPtr open_tcp(std::size_t node, Ipv4 dst, std::uint16_t dport, std::uint32_t prov = 0,
                        std::uint16_t sport = 0) {
        auto& n = rt_[node];
        if (static_cast<int>(n.conns.size()) >= max_conns(node)) return nullptr;
        if (sport == 0) sport = alloc_port(node);
        ConnKey key{dst, dport, sport};
        if (n.conns.count(key)) {
            sport = alloc_port(node);
            key.local_port = sport;
            if (n.conns.count(key)) return nullptr;
        }
        auto conn = std::make_shared<TcpConn>();
        conn->uid = next_conn_uid_++;
        conn->node = node;
        conn->local_ip = n.iface(0).ipv4;
        conn->peer_ip = dst;
        conn->local_port = sport;
        conn->peer_port = dport;
        conn->prov = prov;
        conn->state = TcpState::SynSent;
        conn->iss = isn(node, key);
        conn->snd_una = conn->iss;
        conn->snd_nxt = conn->iss + 1;
        conn_by_uid_[conn->uid] = conn;
        n.conns[key] = conn;
        send_syn(*conn, false);
        arm_syn_retry(*conn);
        return conn;
    }

    void tcp_send(TcpConn& c, const Bytes& data) {
        if (c.closed() || c.fin_sent) return;  // no data past our FIN
        c.send_buf.insert(c.send_buf.end(), data.begin(), data.end());
        pump(c);
    }
    void tcp_close(TcpConn& c) {
        if (c.closed()) return;
        c.close_requested = true;
        pump(c);
    }
    void tcp_abort(TcpConn& c) {
        if (c.closed()) return;
        emit_segment(c, wire::kRst | wire::kAck, {}, c.snd_nxt);
        destroy_conn(c);
    }
    TcpConnPtr conn_ref(const TcpConn& c) const {
        auto it = conn_by_uid_.find(c.uid);
        return it == conn_by_uid_.end() ? nullptr : it->second;
    }
    int live_conns(std::size_t node) const { return static_cast<int>(rt_[node].conns.size()); }
    int max_conns(std::size_t node) const {
        return static_cast<int>(rt_[node].resources.memory_mb) * kConnsPerMemoryMb;
    }

private:
    // ------------------------------------------------------------------ types
    struct Event {
        SimTime fire_at;
        std::uint64_t seq;
        std::function<void()> fn;
    };
    struct EventCmp {
        bool operator()(const Event& a, const Event& b) const {
            if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
            return a.seq > b.seq;
        }
    };

    struct LinkRt {
        const topology::Link* def = nullptr;
        std::size_t node_idx[2] = {0, 0};  // [0]=a, [1]=b
        std::size_t port_idx[2] = {0, 0};
        linkshape::QosProfile qos[2];
        linkshape::ShaperState shaper[2];
        std::vector<CaptureSession*> taps;
        LinkCounters counters;
    };

    struct ConnKey {
        Ipv4 peer;
        std::uint16_t peer_port;
        std::uint16_t local_port;
        auto operator<=>(const ConnKey&) const = default;
    };

    struct PendingArp {
        int tries = 0;
        std::vector<std::pair<Bytes, std::uint32_t>> frames;  // frame + prov
    };

    struct PingWaiter {
        SimTime sent;
        PingHandler fn;
    };

    struct NodeRt {
        topology::NodeKind kind = topology::NodeKind::IotDevice;
        std::vector<std::size_t> port_link;  // per interface: link index or SIZE_MAX
        topology::NodeResources resources;
        std::unique_ptr<Behavior> behavior;
        const topology::NodeInstance* inst = nullptr;
        const topology::RoutingTable* routes = nullptr;

        // L2/L3 state
        std::map<Mac, std::size_t> mac_table;  // switches: mac -> port
        std::map<Ipv4, Mac> arp_cache;
        std::map<Ipv4, PendingArp> arp_pending;

        // host stacks
        std::map<std::uint16_t, UdpHandler> udp_binds;
        std::map<std::uint16_t, std::function<void(TcpConn&)>> tcp_listeners;
        std::map<ConnKey, TcpConnPtr> conns;
        std::map<std::uint16_t, PingWaiter> ping_waiters;
        std::map<std::uint16_t, std::uint16_t> next_port;  // band lo -> next
        std::function<bool(Ipv4, const wire::TcpView&)> tcp_observer;
        std::uint16_t icmp_ident = 1;
        std::uint16_t ip_ident = 1;
        SimTime busy_until = 0;

        const topology::Interface& iface(std::size_t i) const { return inst->interfaces[i]; }
        std::size_t iface_count() const { return inst->interfaces.size(); }
        bool ports_empty() const { return inst->interfaces.empty(); }
    };

    // ------------------------------------------------------------- construction
    void build_runtime() {
        auto report = topology::validate_topology(topo_);
        if (!report.empty())
            throw Error("invalid topology: " + report[0].code + " " + report[0].message);

        rt_.resize(topo_.nodes.size());
        for (std::size_t i = 0; i < topo_.nodes.size(); ++i) {
            node_index_[topo_.nodes[i].node_id] = i;
            rt_[i].inst = &topo_.nodes[i];
            rt_[i].kind = topo_.kind_of(topo_.nodes[i]);
            rt_[i].resources = topo_.nodes[i].resources;
            rt_[i].port_link.assign(topo_.nodes[i].interfaces.size(), SIZE_MAX);
        }
        links_.resize(topo_.links.size());
        for (std::size_t i = 0; i < topo_.links.size(); ++i) {
            const auto& l = topo_.links[i];
            link_index_[l.link_id] = i;
            auto& lr = links_[i];
            lr.def = &l;
            lr.qos[0] = l.qos_ab;
            lr.qos[1] = l.qos_ba;
            const topology::Endpoint* eps[2] = {&l.a, &l.b};
            for (int e = 0; e < 2; ++e) {
                std::size_t ni = node_index_.at(eps[e]->node_id);
                lr.node_idx[e] = ni;
                bool found = false;
                for (std::size_t p = 0; p < topo_.nodes[ni].interfaces.size(); ++p) {
                    if (topo_.nodes[ni].interfaces[p].iface_id == eps[e]->iface_id) {
                        lr.port_idx[e] = p;
                        rt_[ni].port_link[p] = i;
                        found = true;
                    }
                }
                if (!found) throw Error("link endpoint iface missing: " + l.link_id);
            }
            lr.shaper[0] = linkshape::ShaperState(root_rng_.fork("shaper:" + l.link_id + ":ab"));
            lr.shaper[1] = linkshape::ShaperState(root_rng_.fork("shaper:" + l.link_id + ":ba"));
        }
        bool have_router = false;
        for (const auto& n : rt_) have_router |= n.kind == topology::NodeKind::Router;
        if (have_router) {
            routing_tables_ = topology::compute_routes(topo_);
            for (const auto& rt : routing_tables_)
                rt_[node_index_.at(rt.router_id)].routes = &rt;
        }
        names_ = topology::name_table(topo_);
    }

    // --------------------------------------------------------------- L2 plumbing
    wire::FrameSpec frame_spec(NodeRt& n, Ipv4 dst) {
        wire::FrameSpec fs;
        fs.src_mac = n.iface(0).mac;
        fs.dst_mac = Mac{};  // patched at ARP resolution
        fs.src_ip = n.iface(0).ipv4;
        fs.dst_ip = dst;
        fs.ident = n.ip_ident++;
        return fs;
    }

    // Host-originated IP frame: route via gateway or on-link, then transmit.
    void host_origin(NodeRt& n, Ipv4 dst, Bytes frame, std::uint32_t prov) {
        ++stats_.frames_origin;
        ++stats_.node_tx[n.inst->node_id];
        route_from_host(n, dst, std::move(frame), prov);
    }

    void route_from_host(NodeRt& n, Ipv4 dst, Bytes frame, std::uint32_t prov) {
        if (n.iface_count() == 0) return;
        const auto& ifc = n.iface(0);
        Ipv4 next_hop = dst;
        if (!Prefix{ifc.ipv4, ifc.prefix_len}.contains(dst)) {
            if (!ifc.gateway) {
                ++stats_.drops_noroute;
                return;
            }
            next_hop = *ifc.gateway;
        }
        resolve_and_send(n, 0, next_hop, std::move(frame), prov);
    }

    void resolve_and_send(NodeRt& n, std::size_t port, Ipv4 next_hop, Bytes frame,
                          std::uint32_t prov) {
        auto it = n.arp_cache.find(next_hop);
        if (it != n.arp_cache.end()) {
            std::copy(it->second.b.begin(), it->second.b.end(), frame.begin());
            transmit(n, port, std::move(frame), prov);
            return;
        }
        auto& pending = n.arp_pending[next_hop];
        if (pending.frames.size() < 32) pending.frames.push_back({std::move(frame), prov});
        if (pending.tries == 0) {
            send_arp_request(n, port, next_hop);
            pending.tries = 1;
            arm_arp_retry(node_of(n), port, next_hop);
        }
    }

    std::size_t node_of(NodeRt& n) const { return static_cast<std::size_t>(&n - rt_.data()); }

    void send_arp_request(NodeRt& n, std::size_t port, Ipv4 target) {
        const auto& ifc = n.iface(port);
        Bytes f = wire::build_arp(ifc.mac, Mac::broadcast(), 1, ifc.mac, ifc.ipv4, Mac{}, target);
        transmit(n, port, std::move(f), 0);
    }

    void arm_arp_retry(std::size_t node, std::size_t port, Ipv4 target) {
        schedule_in(kSecond, [this, node, port, target] {
            auto& n = rt_[node];
            auto it = n.arp_pending.find(target);
            if (it == n.arp_pending.end()) return;
            if (it->second.tries >= 2) {
                stats_.drops_arp_fail += it->second.frames.size();
                n.arp_pending.erase(it);
                return;
            }
            it->second.tries++;
            send_arp_request(n, port, target);
            arm_arp_retry(node, port, target);
        });
    }

    // Shapes and forwards a frame onto the link attached to (node, port).
    void transmit(NodeRt& n, std::size_t port, Bytes frame, std::uint32_t prov) {
        wire::pad_frame(frame);
        std::size_t li = n.port_link[port];
        if (li == SIZE_MAX) return;  // unplugged interface
        auto& link = links_[li];
        int dir = link.node_idx[0] == node_of(n) && link.port_idx[0] == port ? 0 : 1;
        ++link.counters.offered[dir];
        ++stats_.link_offered;
        auto outcome = linkshape::shape_frame(frame, now_, link.qos[dir], link.shaper[dir]);
        if (outcome.status == linkshape::ShapeStatus::dropped_loss) {
            ++link.counters.drop_loss[dir];
            ++stats_.drops_loss;
            return;
        }
        if (outcome.status == linkshape::ShapeStatus::dropped_queue) {
            ++link.counters.drop_queue[dir];
            ++stats_.drops_queue;
            return;
        }
        if (!link.taps.empty()) {
            FrameRecord rec;
            rec.ts = outcome.departure;
            rec.link_id = link.def->link_id;
            rec.direction = dir == 0 ? FrameRecord::Dir::ab : FrameRecord::Dir::ba;
            rec.bytes = outcome.frame;
            rec.orig_len = static_cast<std::uint32_t>(outcome.frame.size());
            rec.provenance = prov;
            for (auto* tap : link.taps) tap->records.push_back(rec);
        }
        std::size_t dst_node = link.node_idx[1 - dir];
        std::size_t dst_port = link.port_idx[1 - dir];
        schedule_at(outcome.departure, [this, li, dir, dst_node, dst_port,
                                        f = std::move(outcome.frame), prov]() mutable {
            ++links_[li].counters.arrived[dir];
            ++stats_.link_arrived;
            receive(rt_[dst_node], dst_port, std::move(f), prov);
        });
    }

    // ----------------------------------------------------------------- receive
    void receive(NodeRt& n, std::size_t port, Bytes frame, std::uint32_t prov) {
        switch (n.kind) {
            case topology::NodeKind::Switch: switch_forward(n, port, std::move(frame), prov); break;
            case topology::NodeKind::Router: router_receive(n, port, std::move(frame), prov); break;
            default: host_receive(n, port, std::move(frame), prov); break;
        }
    }

    void switch_forward(NodeRt& n, std::size_t in_port, Bytes frame, std::uint32_t prov) {
        auto eth = wire::parse_eth(frame);
        if (!eth) return;
        n.mac_table[eth->src] = in_port;
        ++stats_.frames_forwarded;
        if (!eth->dst.is_broadcast() && !eth->dst.is_multicast()) {
            auto it = n.mac_table.find(eth->dst);
            if (it != n.mac_table.end()) {
                if (it->second != in_port) transmit(n, it->second, std::move(frame), prov);
                return;
            }
        }
        for (std::size_t p = 0; p < n.iface_count(); ++p)
            if (p != in_port && n.port_link[p] != SIZE_MAX) transmit(n, p, Bytes(frame), prov);
    }

    void router_receive(NodeRt& n, std::size_t port, Bytes frame, std::uint32_t prov) {
        auto eth = wire::parse_eth(frame);
        if (!eth) return;
        if (eth->ethertype == wire::kEtherArp) {
            router_arp(n, port, frame);
            return;
        }
        if (eth->ethertype != wire::kEtherIpv4) return;  // v6 noise stops at routers
        auto ip = wire::parse_ipv4(frame);
        if (!ip) return;
        for (std::size_t i = 0; i < n.iface_count(); ++i) {
            if (n.iface(i).ipv4 == ip->dst) {
                ++stats_.frames_delivered;
                ++stats_.node_rx[n.inst->node_id];
                router_local(n, i, frame, *ip, prov);
                return;
            }
        }
        route_forward(n, frame, *ip, prov);
    }

    void route_forward(NodeRt& n, Bytes& frame, const wire::Ipv4View& ip, std::uint32_t prov) {
        if (!n.routes) {
            ++stats_.drops_noroute;
            return;
        }
        if (ip.ttl <= 1) {
            ++stats_.drops_ttl;
            return;
        }
        const topology::RouteEntry* route = n.routes->lookup(ip.dst);
        if (!route) {
            ++stats_.drops_noroute;
            icmp_error(n, frame, ip, 3, 0, prov);  // destination net unreachable
            return;
        }
        std::size_t out_port = port_by_iface(n, route->out_iface);
        if (out_port == SIZE_MAX) {
            ++stats_.drops_noroute;
            return;
        }
        // rewrite: ttl-1, fresh header checksum, our source MAC
        frame[wire::kEthHeader + 8] = ip.ttl - 1;
        frame[wire::kEthHeader + 10] = 0;
        frame[wire::kEthHeader + 11] = 0;
        std::uint16_t ck = wire::internet_checksum(frame.data() + wire::kEthHeader, ip.header_len);
        frame[wire::kEthHeader + 10] = static_cast<std::uint8_t>(ck >> 8);
        frame[wire::kEthHeader + 11] = static_cast<std::uint8_t>(ck);
        const auto& oif = n.iface(out_port);
        std::copy(oif.mac.b.begin(), oif.mac.b.end(), frame.begin() + 6);
        ++stats_.frames_forwarded;
        Ipv4 next_hop = route->next_hop ? *route->next_hop : ip.dst;
        resolve_and_send(n, out_port, next_hop, std::move(frame), prov);
    }

    std::size_t port_by_iface(const NodeRt& n, const std::string& iface_id) const {
        for (std::size_t i = 0; i < n.iface_count(); ++i)
            if (n.iface(i).iface_id == iface_id) return i;
        return SIZE_MAX;
    }

    void router_arp(NodeRt& n, std::size_t port, const Bytes& frame) {
        auto arp = wire::parse_arp(frame);
        if (!arp) return;
        const auto& ifc = n.iface(port);
        n.arp_cache[arp->sender_ip] = arp->sender_mac;
        flush_arp_pending(n, port, arp->sender_ip);
        if (arp->opcode != 1) return;
        bool for_me = arp->target_ip == ifc.ipv4;
        // Proxy ARP: edge routers answer for any off-subnet destination.
        bool proxy = n.inst->cfg_bool("proxy_arp") && !for_me &&
                     !Prefix{ifc.ipv4, ifc.prefix_len}.contains(arp->target_ip);
        if (for_me || proxy) {
            Bytes reply = wire::build_arp(ifc.mac, arp->sender_mac, 2, ifc.mac, arp->target_ip,
                                          arp->sender_mac, arp->sender_ip);
            transmit(n, port, std::move(reply), 0);
        }
    }

    // Routers answer pings addressed to them; anything else is dropped.
    void router_local(NodeRt& n, std::size_t port, const Bytes& frame, const wire::Ipv4View& ip,
                      std::uint32_t prov) {
        if (ip.proto != wire::kProtoIcmp) return;
        auto icmp = wire::parse_icmp(frame, ip);
        if (!icmp || icmp->type != 8) return;
        const auto& ifc = n.iface(port);
        wire::FrameSpec fs;
        fs.src_mac = ifc.mac;
        fs.src_ip = ifc.ipv4;
        fs.dst_ip = ip.src;
        fs.ident = n.ip_ident++;
        Bytes payload(frame.begin() + icmp->payload_off,
                      frame.begin() + icmp->payload_off + icmp->payload_len);
        Bytes reply = wire::build_icmp(fs, 0, 0, icmp->ident, icmp->seqno, payload);
        router_emit(n, ip.src, port, std::move(reply), prov);
    }

    // Router-originated frame: route toward dst, falling back to the
    // ingress port for directly attached sources.
    void router_emit(NodeRt& n, Ipv4 dst, std::size_t hint_port, Bytes frame,
                     std::uint32_t prov) {
        std::size_t out_port = hint_port;
        Ipv4 next_hop = dst;
        bool connected = Prefix{n.iface(hint_port).ipv4, n.iface(hint_port).prefix_len}.contains(dst);
        if (!connected && n.routes) {
            const auto* route = n.routes->lookup(dst);
            if (!route) {
                ++stats_.drops_noroute;
                return;
            }
            out_port = port_by_iface(n, route->out_iface);
            if (out_port == SIZE_MAX) {
                ++stats_.drops_noroute;
                return;
            }
            if (route->next_hop) next_hop = *route->next_hop;
            const auto& oif = n.iface(out_port);
            std::copy(oif.mac.b.begin(), oif.mac.b.end(), frame.begin() + 6);
        }
        resolve_and_send(n, out_port, next_hop, std::move(frame), prov);
    }

    // ICMP errors are suppressed for attack-provenance triggers: victims
    // under flood rate-limit them into silence, which also keeps
    // spoofed-source backscatter out of the ground truth.
    void icmp_error(NodeRt& n, const Bytes& orig, const wire::Ipv4View& ip, std::uint8_t type,
                    std::uint8_t code, std::uint32_t prov) {
        if (prov != 0) return;
        if (n.iface_count() == 0) return;
        std::size_t quote =
            std::min<std::size_t>(ip.header_len + 8, orig.size() - wire::kEthHeader);
        Bytes body;
        body.reserve(4 + quote);
        body.insert(body.end(), {0, 0, 0, 0});
        body.insert(body.end(), orig.begin() + wire::kEthHeader,
                    orig.begin() + wire::kEthHeader + quote);
        Bytes f;
        {
            ByteWriter w(f);
            Ipv4 src_ip = n.iface(0).ipv4;
            wire::eth_header(w, Mac{}, n.iface(0).mac, wire::kEtherIpv4);
            wire::ipv4_header(f, src_ip, ip.src, wire::kProtoIcmp, 4 + body.size(), 64,
                              n.ip_ident++);
            std::size_t icmp_start = f.size();
            w.u8(type);
            w.u8(code);
            w.u16(0);
            w.raw(body);
            w.patch_u16(icmp_start + 2,
                        wire::internet_checksum(f.data() + icmp_start, f.size() - icmp_start));
        }
        if (n.kind == topology::NodeKind::Router) {
            auto v = wire::parse_ipv4(f);
            if (v) route_forward(n, f, *v, prov);
        } else {
            route_from_host(n, ip.src, std::move(f), prov);
        }
    }

    // ------------------------------------------------------------------- hosts
    void host_receive(NodeRt& n, std::size_t port, Bytes frame, std::uint32_t prov) {
        auto eth = wire::parse_eth(frame);
        if (!eth) return;
        const auto& ifc = n.iface(port);
        if (eth->ethertype == wire::kEtherArp) {
            auto arp = wire::parse_arp(frame);
            if (!arp) return;
            n.arp_cache[arp->sender_ip] = arp->sender_mac;
            flush_arp_pending(n, port, arp->sender_ip);
            if (arp->opcode == 1 && arp->target_ip == ifc.ipv4) {
                Bytes reply = wire::build_arp(ifc.mac, arp->sender_mac, 2, ifc.mac, ifc.ipv4,
                                              arp->sender_mac, arp->sender_ip);
                transmit(n, port, std::move(reply), 0);
            }
            return;
        }
        if (eth->ethertype != wire::kEtherIpv4) return;  // v6 noise is capture-only
        if (!eth->dst.is_broadcast() && eth->dst != ifc.mac) {
            ++stats_.drops_nomatch;
            return;
        }
        auto ip = wire::parse_ipv4(frame);
        if (!ip) return;
        if (ip->dst != ifc.ipv4) {
            ++stats_.drops_nomatch;
            return;
        }
        ++stats_.frames_delivered;
        ++stats_.node_rx[n.inst->node_id];
        switch (ip->proto) {
            case wire::kProtoIcmp: host_icmp(n, frame, *ip, prov); break;
            case wire::kProtoUdp: host_udp(n, frame, *ip, prov); break;
            case wire::kProtoTcp: host_tcp(n, frame, *ip, prov); break;
            default: break;  // GRE floods terminate silently
        }
    }

    void host_icmp(NodeRt& n, const Bytes& frame, const wire::Ipv4View& ip, std::uint32_t prov) {
        auto icmp = wire::parse_icmp(frame, ip);
        if (!icmp) return;
        if (icmp->type == 8) {
            Bytes payload(frame.begin() + icmp->payload_off,
                          frame.begin() + icmp->payload_off + icmp->payload_len);
            wire::FrameSpec fs = frame_spec(n, ip.src);
            Bytes reply = wire::build_icmp(fs, 0, 0, icmp->ident, icmp->seqno, payload);
            route_from_host(n, ip.src, std::move(reply), prov);
        } else if (icmp->type == 0) {
            auto it = n.ping_waiters.find(icmp->ident);
            if (it != n.ping_waiters.end()) {
                auto waiter = std::move(it->second);
                n.ping_waiters.erase(it);
                if (waiter.fn) waiter.fn(ip.src, icmp->seqno, now_ - waiter.sent);
            }
        }
        // type 3 unreachables terminate here; behaviors key off timeouts
    }

    void host_udp(NodeRt& n, const Bytes& frame, const wire::Ipv4View& ip, std::uint32_t prov) {
        auto udp = wire::parse_udp(frame, ip);
        if (!udp) return;
        auto it = n.udp_binds.find(udp->dst_port);
        if (it == n.udp_binds.end()) {
            icmp_error(n, frame, ip, 3, 3, prov);  // port unreachable
            return;
        }
        UdpDelivery d;
        d.node = node_of(n);
        d.src = ip.src;
        d.dst = ip.dst;
        d.sport = udp->src_port;
        d.dport = udp->dst_port;
        d.payload.assign(frame.begin() + udp->payload_off,
                         frame.begin() + udp->payload_off + udp->payload_len);
        d.prov = prov;
        UdpHandler h = it->second;
        deliver_app(node_of(n), [h = std::move(h), d = std::move(d)] { h(d); });
    }

    // ------------------------------------------------------------------- TCP
    std::uint32_t isn(std::size_t node, const ConnKey& key) {
        std::uint64_t h = fnv1a64(node_def(node).node_id);
        h = fnv1a64(&key, sizeof(key), h);
        h = fnv1a64(&seed_, sizeof(seed_), h);
        // keep sequence space far from wrap; transfers stay < 1 GiB
        return static_cast<std::uint32_t>(h & 0x3fffffff);
    }

    void send_syn(TcpConn& c, bool with_ack) {
        wire::TcpSpec t;
        t.sport = c.local_port;
        t.dport = c.peer_port;
        t.seq = c.iss;
        t.ack = with_ack ? c.rcv_nxt : 0;
        t.flags = static_cast<std::uint8_t>(wire::kSyn | (with_ack ? wire::kAck : 0));
        emit_tcp(c, t, {});
    }

    void arm_syn_retry(TcpConn& c) {
        std::uint64_t uid = c.uid;
        std::uint64_t epoch = c.rto_epoch;
        SimTime delay = kTcpSynRetryBase << c.syn_tries;
        schedule_in(delay, [this, uid, epoch] {
            auto it = conn_by_uid_.find(uid);
            if (it == conn_by_uid_.end()) return;
            TcpConn& c = *it->second;
            if (c.rto_epoch != epoch) return;
            if (c.state != TcpState::SynSent && c.state != TcpState::SynReceived) return;
            if (++c.syn_tries > kTcpSynRetries) {
                fail_conn(c, "handshake timeout");
                return;
            }
            send_syn(c, c.state == TcpState::SynReceived);
            arm_syn_retry(c);
        });
    }

    void emit_tcp(TcpConn& c, const wire::TcpSpec& t, const Bytes& payload) {
        auto& n = rt_[c.node];
        wire::FrameSpec fs = frame_spec(n, c.peer_ip);
        Bytes f = wire::build_tcp(fs, t, payload);
        ++stats_.frames_origin;
        ++stats_.node_tx[n.inst->node_id];
        route_from_host(n, c.peer_ip, std::move(f), c.prov);
    }

    void emit_segment(TcpConn& c, std::uint8_t flags, const Bytes& payload, std::uint32_t seq) {
        wire::TcpSpec t;
        t.sport = c.local_port;
        t.dport = c.peer_port;
        t.seq = seq;
        t.ack = c.rcv_nxt;
        t.flags = flags;
        emit_tcp(c, t, payload);
    }

    void host_tcp(NodeRt& n, const Bytes& frame, const wire::Ipv4View& ip, std::uint32_t prov) {
        auto tcp = wire::parse_tcp(frame, ip);
        if (!tcp) return;
        ConnKey key{ip.src, tcp->src_port, tcp->dst_port};
        auto it = n.conns.find(key);
        if (it == n.conns.end()) {
            if (n.tcp_observer && n.tcp_observer(ip.src, *tcp)) return;
            if (tcp->flags & wire::kRst) return;
            if ((tcp->flags & wire::kSyn) && !(tcp->flags & wire::kAck)) {
                accept_or_refuse(n, key, *tcp, prov);
            } else {
                send_rst_for(n, key, *tcp, prov);
            }
            return;
        }
        TcpConnPtr ref = it->second;  // keep alive: input may finish the conn
        conn_input(*ref, frame, *tcp);
    }

    void send_rst_for(NodeRt& n, const ConnKey& key, const wire::TcpView& tcp,
                      std::uint32_t prov) {
        wire::TcpSpec t;
        t.sport = key.local_port;
        t.dport = key.peer_port;
        t.seq = (tcp.flags & wire::kAck) ? tcp.ack : 0;
        t.ack = tcp.seq + tcp.payload_len + ((tcp.flags & wire::kSyn) ? 1 : 0);
        t.flags = wire::kRst | wire::kAck;
        wire::FrameSpec fs = frame_spec(n, key.peer);
        Bytes f = wire::build_tcp(fs, t, {});
        route_from_host(n, key.peer, std::move(f), prov);
    }

    void accept_or_refuse(NodeRt& n, const ConnKey& key, const wire::TcpView& tcp,
                          std::uint32_t prov) {
        auto lit = n.tcp_listeners.find(key.local_port);
        bool refuse = lit == n.tcp_listeners.end() ||
                      static_cast<int>(n.conns.size()) >= max_conns(node_of(n));
        if (refuse) {
            send_rst_for(n, key, tcp, prov);
            return;
        }
        auto conn = std::make_shared<TcpConn>();
        conn->uid = next_conn_uid_++;
        conn->node = node_of(n);
        conn->local_ip = n.iface(0).ipv4;
        conn->peer_ip = key.peer;
        conn->local_port = key.local_port;
        conn->peer_port = key.peer_port;
        conn->prov = prov;
        conn->server_side = true;
        conn->state = TcpState::SynReceived;
        conn->iss = isn(node_of(n), key);
        conn->snd_una = conn->iss;
        conn->snd_nxt = conn->iss + 1;
        conn->rcv_nxt = tcp.seq + 1;
        conn_by_uid_[conn->uid] = conn;
        n.conns[key] = conn;
        lit->second(*conn);  // behavior installs handlers
        send_syn(*conn, true);
        arm_syn_retry(*conn);
    }

    void conn_input(TcpConn& c, const Bytes& frame, const wire::TcpView& tcp) {
        if (tcp.flags & wire::kRst) {
            fail_conn(c, "connection reset");
            return;
        }
        switch (c.state) {
            case TcpState::SynSent:
                if ((tcp.flags & (wire::kSyn | wire::kAck)) == (wire::kSyn | wire::kAck) &&
                    tcp.ack == c.snd_nxt) {
                    c.rcv_nxt = tcp.seq + 1;
                    c.snd_una = tcp.ack;
                    c.state = TcpState::Established;
                    c.rto_epoch++;
                    emit_segment(c, wire::kAck, {}, c.snd_nxt);
                    if (c.on_connected) c.on_connected(c);
                    pump(c);
                }
                return;
            case TcpState::SynReceived:
                if ((tcp.flags & wire::kAck) && tcp.ack == c.snd_nxt) {
                    c.snd_una = tcp.ack;
                    c.state = TcpState::Established;
                    c.rto_epoch++;
                    if (c.on_connected) c.on_connected(c);
                    // continue: the ACK may carry data
                } else {
                    return;
                }
                break;
            default: break;
        }
        if (c.state == TcpState::Closed) return;

        // ---- ACK processing
        if (tcp.flags & wire::kAck) {
            std::int32_t advance = static_cast<std::int32_t>(tcp.ack - c.snd_una);
            if (advance > 0 && static_cast<std::int32_t>(tcp.ack - c.snd_nxt) <= 0) {
                c.snd_una = tcp.ack;
                c.dup_acks = 0;
                // drop retained segments that are fully acknowledged
                for (auto rit = c.retained.begin(); rit != c.retained.end();) {
                    if (static_cast<std::int32_t>(rit->first +
                                                  static_cast<std::uint32_t>(rit->second.size()) -
                                                  c.snd_una) <= 0)
                        rit = c.retained.erase(rit);
                    else
                        break;
                }
                // RTT sample on a timed, never-retransmitted sequence
                if (c.rto_sample_seq &&
                    static_cast<std::int32_t>(tcp.ack - c.rto_sample_seq) >= 0) {
                    double sample = static_cast<double>(now_ - c.rto_sample_start);
                    c.srtt_us = c.srtt_us == 0 ? sample : 0.875 * c.srtt_us + 0.125 * sample;
                    c.rto_sample_seq = 0;
                }
                // additive increase: +MSS per cwnd's worth of ACKed bytes
                c.cwnd += static_cast<double>(kTcpMss) * advance / c.cwnd;
                c.rto_epoch++;
                if (c.snd_una != c.snd_nxt) arm_rto(c);
            } else if (advance == 0 && c.sent_unacked_bytes() > 0 && tcp.payload_len == 0 &&
                       !(tcp.flags & (wire::kFin | wire::kSyn))) {
                if (++c.dup_acks == 3) {
                    c.dup_acks = 0;
                    c.cwnd = std::max(c.cwnd / 2, static_cast<double>(kTcpMss));
                    retransmit_one(c);  // fast retransmit
                }
            }
        }

        // ---- data
        if (tcp.payload_len > 0) {
            Bytes data(frame.begin() + tcp.payload_off,
                       frame.begin() + tcp.payload_off + tcp.payload_len);
            if (tcp.seq == c.rcv_nxt) {
                c.rcv_nxt += static_cast<std::uint32_t>(data.size());
                deliver_data(c, std::move(data));
                auto oit = c.ooo.find(c.rcv_nxt);
                while (oit != c.ooo.end()) {
                    c.rcv_nxt += static_cast<std::uint32_t>(oit->second.size());
                    deliver_data(c, std::move(oit->second));
                    c.ooo.erase(oit);
                    oit = c.ooo.find(c.rcv_nxt);
                }
            } else if (static_cast<std::int32_t>(tcp.seq - c.rcv_nxt) > 0) {
                c.ooo.emplace(tcp.seq, std::move(data));
            }
            emit_segment(c, wire::kAck, {}, c.snd_nxt);  // ack everything, incl. dups
        }

        // ---- FIN
        if (tcp.flags & wire::kFin) {
            std::uint32_t fin_seq = tcp.seq + tcp.payload_len;
            if (fin_seq == c.rcv_nxt && !c.peer_fin) {
                c.rcv_nxt = fin_seq + 1;
                c.peer_fin = true;
                emit_segment(c, wire::kAck, {}, c.snd_nxt);
                if (c.on_peer_closed) c.on_peer_closed(c);
                c.close_requested = true;  // no half-open lingering
            }
        }

        pump(c);
        maybe_finish(c);
    }

    void deliver_data(TcpConn& c, Bytes data) {
        if (!c.on_data) return;
        TcpConnPtr ref = conn_by_uid_.at(c.uid);
        deliver_app(c.node, [ref = std::move(ref), data = std::move(data)] {
            if (ref->on_data) ref->on_data(*ref, data);
        });
    }

    // Sends as much buffered data as cwnd allows; then FIN when requested.
    void pump(TcpConn& c) {
        if (c.state != TcpState::Established && c.state != TcpState::CloseWait &&
            c.state != TcpState::Closing)
            return;
        while (!c.send_buf.empty() &&
               c.sent_unacked_bytes() < static_cast<std::uint32_t>(c.cwnd)) {
            std::size_t take = std::min<std::size_t>(kTcpMss, c.send_buf.size());
            Bytes chunk(c.send_buf.begin(), c.send_buf.begin() + take);
            c.send_buf.erase(c.send_buf.begin(), c.send_buf.begin() + take);
            std::uint32_t seq = c.snd_nxt;
            c.retained[seq] = chunk;
            c.snd_nxt += static_cast<std::uint32_t>(take);
            if (c.rto_sample_seq == 0) {
                c.rto_sample_seq = c.snd_nxt;
                c.rto_sample_start = now_;
            }
            emit_segment(c, wire::kAck | wire::kPsh, chunk, seq);
        }
        if (c.send_buf.empty() && c.close_requested && !c.fin_sent) {
            c.fin_sent = true;
            emit_segment(c, wire::kFin | wire::kAck, {}, c.snd_nxt);
            c.snd_nxt += 1;
            c.state = c.peer_fin ? TcpState::Closing : TcpState::FinWait;
        }
        if (c.snd_una != c.snd_nxt) arm_rto(c);
        maybe_finish(c);
    }

    void maybe_finish(TcpConn& c) {
        if (c.fin_sent && c.peer_fin && c.snd_una == c.snd_nxt) destroy_conn(c);
    }

    void retransmit_one(TcpConn& c) {
        auto sit = c.retained.find(c.snd_una);
        if (sit == c.retained.end()) {
            if (c.fin_sent && c.snd_una + 1 == c.snd_nxt)
                emit_segment(c, wire::kFin | wire::kAck, {}, c.snd_una);
            return;
        }
        c.rto_sample_seq = 0;  // Karn: no RTT sample across retransmits
        emit_segment(c, wire::kAck | wire::kPsh, sit->second, sit->first);
        arm_rto(c);
    }

    SimTime current_rto(const TcpConn& c) const {
        return std::max(kTcpMinRto, static_cast<SimTime>(2.0 * c.srtt_us));
    }

    void arm_rto(TcpConn& c) {
        std::uint64_t uid = c.uid;
        std::uint64_t epoch = c.rto_epoch;
        schedule_in(current_rto(c), [this, uid, epoch] {
            auto it = conn_by_uid_.find(uid);
            if (it == conn_by_uid_.end()) return;
            TcpConn& c = *it->second;
            if (c.rto_epoch != epoch) return;
            if (c.snd_una == c.snd_nxt) return;
            c.cwnd = std::max(c.cwnd / 2, static_cast<double>(kTcpMss));
            c.rto_epoch++;
            retransmit_one(c);
        });
    }

    void fail_conn(TcpConn& c, const std::string& reason) {
        auto cb = c.on_failed;
        TcpConnPtr ref = conn_ref(c);
        destroy_conn(c);
        if (cb && ref) cb(*ref, reason);
    }

    void destroy_conn(TcpConn& c) {
        auto it = conn_by_uid_.find(c.uid);
        if (it == conn_by_uid_.end()) return;  // already destroyed
        c.state = TcpState::Closed;
        c.rto_epoch++;
        conn_by_uid_.erase(it);
        auto& n = rt_[c.node];
        n.conns.erase(ConnKey{c.peer_ip, c.peer_port, c.local_port});
    }

    void flush_arp_pending(NodeRt& n, std::size_t port, Ipv4 addr) {
        auto it = n.arp_pending.find(addr);
        if (it == n.arp_pending.end()) return;
        auto frames = std::move(it->second.frames);
        n.arp_pending.erase(it);
        Mac mac = n.arp_cache.at(addr);
        for (auto& [frame, prov] : frames) {
            std::copy(mac.b.begin(), mac.b.end(), frame.begin());
            transmit(n, port, std::move(frame), prov);
        }
    }

    // ------------------------------------------------------------------ members
    topology::Topology topo_;
    Rng root_rng_;
    std::uint64_t seed_;
    SimTime now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_conn_uid_ = 1;
    std::priority_queue<Event, std::vector<Event>, EventCmp> queue_;
    std::vector<NodeRt> rt_;
    std::vector<LinkRt> links_;
    std::map<std::string, std::size_t> node_index_;
    std::map<std::string, std::size_t> link_index_;
    std::vector<topology::RoutingTable> routing_tables_;
    std::map<std::string, Ipv4> names_;
    std::vector<std::unique_ptr<CaptureSession>> captures_;
    std::vector<ProvenanceEntry> prov_table_ = {{"benign", ""}};
    std::vector<LabelInterval> intervals_;
    std::vector<LogLine> logs_;
    std::map<std::uint64_t, TcpConnPtr> conn_by_uid_;
    RunStats stats_;
};

}  // namespace gotham::sim
