// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code is the number of
// failed criteria.

#include "testutil.hpp"

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <fstream>

using namespace gotham;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

template <typename Fn>
void criterion(int id, const std::string& title, Fn&& fn) {
    auto t0 = Clock::now();
    bool pass = false;
    std::string detail;
    try {
        pass = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    double wall = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("%s criterion %2d: %s (%s) [%.1fs]\n", pass ? "PASS" : "FAIL", id, title.c_str(),
                detail.c_str(), wall);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// --------------------------------------------------------------------------
// 1. topology counts
// --------------------------------------------------------------------------
bool c1_topology(std::string& detail) {
    auto t = topology::build_gotham();
    int devices = 0, switches = 0, routers = 0, brokers = 0;
    for (const auto& n : t.nodes) {
        switch (t.kind_of(n)) {
            case topology::NodeKind::Switch: ++switches; break;
            case topology::NodeKind::Router: ++routers; break;
            default: ++devices; break;
        }
        if (n.template_id == "mqtt-broker") ++brokers;
    }
    auto violations = topology::validate_topology(t);
    detail = fmt("devices=%d switches=%d routers=%d brokers=%d violations=%zu", devices, switches,
                 routers, brokers, violations.size());
    return devices == 100 && switches == 30 && routers == 10 && brokers == 5 &&
           violations.empty();
}

// --------------------------------------------------------------------------
// 2. TCP goodput through rate caps
// --------------------------------------------------------------------------
double tcp_goodput_at(std::uint64_t cap_bps) {
    auto topo = testutil::make_lan({{"air-quality", {}}, {"mqtt-broker", {}}});
    topo.links[0].qos_ab.rate_bps = cap_bps;
    sim::Engine eng(topo, 1000 + cap_bps % 997);
    std::size_t a = eng.node_index("air-quality-1");
    std::size_t b = eng.node_index("mqtt-broker-1");
    std::uint64_t received = 0;
    const SimTime window = 10 * kSecond;
    eng.tcp_listen(b, 5003, [&](sim::TcpConn& c) {
        c.on_data = [&](sim::TcpConn&, const Bytes& d) {
            if (eng.now() <= window) received += d.size();
        };
    });
    eng.schedule_at(0, [&] {
        auto conn = eng.open_tcp(a, eng.node_addr(b), 5003);
        auto feed = std::make_shared<std::function<void()>>();
        std::size_t block = std::max<std::size_t>(65536, cap_bps / 8 / 10);
        *feed = [&eng, conn, feed, window, block] {
            if (eng.now() > window || conn->closed()) return;
            if (conn->send_buf.size() < block) eng.tcp_send(*conn, Bytes(block, 0x5a));
            eng.schedule_in(50 * kMilli, *feed);
        };
        conn->on_connected = [feed](sim::TcpConn&) { (*feed)(); };
    });
    eng.run(window + kSecond);
    return static_cast<double>(received) * 8.0 / 10.0;
}

bool c2_tcp_shaping(std::string& detail) {
    bool ok = true;
    std::string parts;
    for (std::uint64_t cap_mbit : {1, 10, 25, 50, 75, 100}) {
        double goodput = tcp_goodput_at(cap_mbit * 1000000);
        double ratio = goodput / (static_cast<double>(cap_mbit) * 1e6);
        ok = ok && ratio >= 0.90 && ratio <= 1.00;
        parts += fmt("%llu:%.3f ", static_cast<unsigned long long>(cap_mbit), ratio);
    }
    detail = "goodput/cap " + parts + "(band 0.90..1.00)";
    return ok;
}

// --------------------------------------------------------------------------
// 3. UDP saturation curve
// --------------------------------------------------------------------------
double udp_delivered_at(double offered_mbit, std::uint64_t cap_bps, double seconds) {
    auto topo = testutil::make_lan({{"air-quality", {}}, {"mqtt-broker", {}}});
    topo.links[0].qos_ab.rate_bps = cap_bps;
    sim::Engine eng(topo, 2000 + static_cast<std::uint64_t>(offered_mbit));
    std::size_t a = eng.node_index("air-quality-1");
    std::size_t b = eng.node_index("mqtt-broker-1");
    std::uint64_t received_payload = 0;
    eng.udp_bind(b, 7001,
                 [&](const sim::UdpDelivery& d) { received_payload += d.payload.size(); });
    const std::size_t payload = 1448;
    double interval_us = static_cast<double>(payload) * 8.0 / offered_mbit;  // Mbit -> us
    std::uint64_t count = static_cast<std::uint64_t>(seconds * 1e6 / interval_us);
    Ipv4 dst = eng.node_addr(b);
    for (std::uint64_t i = 0; i < count; ++i) {
        SimTime at = static_cast<SimTime>(static_cast<double>(i) * interval_us);
        eng.schedule_at(
            at, [&eng, a, dst] { eng.send_udp(a, dst, 7001, Bytes(1448, 0x77), 0, 21000); });
    }
    eng.run(static_cast<SimTime>(seconds * kSecond) + 2 * kSecond);
    return static_cast<double>(received_payload) * 8.0 / seconds / 1e6;  // Mbit/s
}

bool c3_udp_curve(std::string& detail) {
    const std::uint64_t cap = 100000000;
    bool ok = true;
    std::string parts;
    for (double offered : {1.0, 10.0, 25.0, 50.0, 75.0, 90.0}) {
        double delivered = udp_delivered_at(offered, cap, 5.0);
        double ratio = delivered / offered;
        ok = ok && ratio >= 0.98;
        parts += fmt("%.0f:%.3f ", offered, ratio);
    }
    for (double offered : {100.0, 110.0, 120.0}) {
        double delivered = udp_delivered_at(offered, cap, 5.0);
        ok = ok && delivered <= 1.02 * 100.0;
        parts += fmt("%.0f:%.1fMb ", offered, delivered);
    }
    detail = "slope-one below cap, clamped above: " + parts;
    return ok;
}

// --------------------------------------------------------------------------
// 4. CPU linearity
// --------------------------------------------------------------------------
bool c4_cpu_linearity(std::string& detail) {
    std::vector<double> shares, scores;
    for (int i = 1; i <= 10; ++i) {
        double share = i / 10.0;
        auto topo = testutil::make_lan({{"cpu-benchmark", {}}});
        sim::Engine eng(topo, 4000 + i);
        eng.set_resources("cpu-benchmark-1", {share, 64});
        scenario::wire_behaviors(eng);
        eng.start_all();
        eng.run(5 * kSecond);
        auto* b = threats::detail::behavior_part<devices::CpuBenchmarkBehavior>(
            eng, eng.node_index("cpu-benchmark-1"));
        shares.push_back(share);
        scores.push_back(static_cast<double>(b->ops()) / 5.0);
    }
    double n = 10, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < 10; ++i) {
        sx += shares[i];
        sy += scores[i];
        sxx += shares[i] * shares[i];
        sxy += shares[i] * scores[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0, mean_y = sy / n;
    for (int i = 0; i < 10; ++i) {
        double fit = slope * shares[i] + intercept;
        ss_res += (scores[i] - fit) * (scores[i] - fit);
        ss_tot += (scores[i] - mean_y) * (scores[i] - mean_y);
    }
    double r2 = 1.0 - ss_res / ss_tot;
    double ratio = scores[9] / scores[4];  // score(1.0) / score(0.5)
    detail = fmt("R2=%.6f score(1.0)/score(0.5)=%.4f", r2, ratio);
    return r2 >= 0.999 && ratio >= 1.96 && ratio <= 2.04;
}

// --------------------------------------------------------------------------
// 5. protocol mix over 10 benign minutes at RCLOUD--SCLOUD
// --------------------------------------------------------------------------
bool c5_protocol_mix(std::string& detail) {
    sim::Engine eng(topology::build_gotham(), 1);
    scenario::wire_behaviors(eng);
    auto cap = eng.attach_capture("RCLOUD--SCLOUD");
    eng.start_all();
    eng.run(600 * kSecond);
    auto hist = dataset::protocol_histogram(eng.capture(cap).records);
    std::map<std::string, double> pct;
    for (const auto& row : hist) pct[row.label] = row.pct;
    const char* required[] = {"rtp",  "tcp",  "mqtt", "tls",    "dns", "ntp", "rtcp",
                              "dtls", "icmp", "coap", "arp",    "rtsp", "icmpv6", "sdp"};
    std::string missing;
    for (const char* label : required)
        if (pct.find(label) == pct.end() || pct[label] <= 0) missing += std::string(label) + " ";
    bool ok = missing.empty() && pct["rtp"] >= 80.0 && pct["rtp"] <= 95.0 && pct["mqtt"] >= 1.0 &&
              pct["mqtt"] <= 6.0;
    detail = fmt("rtp=%.1f%% mqtt=%.2f%% tcp=%.1f%% tls=%.2f%% frames=%zu%s%s", pct["rtp"],
                 pct["mqtt"], pct["tcp"], pct["tls"], eng.capture(cap).records.size(),
                 missing.empty() ? "" : " missing: ", missing.c_str());
    return ok;
}

// --------------------------------------------------------------------------
// 6 + 7. mirai propagation and C&C periodicity
// --------------------------------------------------------------------------
struct MiraiRun {
    bool all_infected = false;
    SimTime all_at = 0;
    int distinct_reports = 0;
    bool ports_ok = true;
    double keepalive_cv = 1.0;
    std::size_t keepalives = 0;
};

MiraiRun run_mirai_acceptance() {
    MiraiRun out;
    sim::Engine eng(topology::build_gotham(), 1);
    scenario::wire_behaviors(eng);
    threats::AttackSchedule sched;
    sched.entries.push_back({kSecond, "maroni", "mirai-activate", "mirai-bot-1", {}});
    threats::schedule_attacks(eng, sched);
    auto cap = eng.attach_capture("mirai-bot-1--SCLOUD-EXT");
    eng.start_all();

    for (int minute = 1; minute <= 30; ++minute) {
        eng.run(minute * 60 * kSecond);
        int infected = 0;
        for (std::size_t i = 0; i < eng.topo().nodes.size(); ++i)
            if (auto* v = threats::detail::behavior_part<threats::VictimTelnetBehavior>(eng, i))
                if (v->infected()) ++infected;
        if (infected == 24) {
            out.all_infected = true;
            out.all_at = eng.now();
            break;
        }
    }
    std::set<std::string> victims;
    for (const auto& l : eng.logs())
        if (l.node == "mirai-scan-listener-1" && l.event == "report")
            victims.insert(split(l.detail, ' ').at(0));
    out.distinct_reports = static_cast<int>(victims.size());

    std::uint32_t scan_prov = eng.prov_id("mirai-scan", "maroni");
    Ipv4 bot = eng.node_addr(eng.node_index("mirai-bot-1"));
    std::vector<SimTime> keepalive_times;
    for (const auto& r : eng.capture(cap).records) {
        auto ip = wire::parse_ipv4(r.bytes);
        if (!ip) continue;
        auto tcp = wire::parse_tcp(r.bytes, *ip);
        if (!tcp) continue;
        if (r.provenance == scan_prov &&
            (tcp->flags & (wire::kSyn | wire::kAck)) == wire::kSyn) {
            if (tcp->dst_port != 23 && tcp->dst_port != 2323) out.ports_ok = false;
        }
        if (ip->src == bot && tcp->dst_port == 23 && tcp->payload_len == 2)
            keepalive_times.push_back(r.ts);
    }
    if (keepalive_times.size() >= 5) {
        double sum = 0, sumsq = 0;
        double n = static_cast<double>(keepalive_times.size() - 1);
        for (std::size_t i = 1; i < keepalive_times.size(); ++i) {
            double gap = static_cast<double>(keepalive_times[i] - keepalive_times[i - 1]);
            sum += gap;
            sumsq += gap * gap;
        }
        double mean = sum / n;
        out.keepalive_cv = std::sqrt(std::max(0.0, sumsq / n - mean * mean)) / mean;
        out.keepalives = keepalive_times.size();
    }
    return out;
}

double merlin_beacon_cv() {
    auto topo = testutil::make_routed(
        {{"building-monitor", {{"broker", ""}, {"dns_period_s", "0"}, {"ntp_period_s", "0"}}}},
        {{"merlin-cnc", {}}, {"dns-server", {}}});
    sim::Engine eng(topo, 7);
    scenario::wire_behaviors(eng);
    threats::AttackSchedule sched;
    sched.entries.push_back({2 * kSecond, "falcone", "merlin-install", "building-monitor-1",
                             {{"proto", "http1"}, {"beacon_period_s", "30"}}});
    threats::schedule_attacks(eng, sched);
    std::string agent_link;
    for (const auto& l : topo.links)
        if (l.a.node_id == "building-monitor-1") agent_link = l.link_id;
    auto cap = eng.attach_capture(agent_link);
    eng.start_all();
    eng.run(620 * kSecond);
    Ipv4 agent = eng.node_addr(eng.node_index("building-monitor-1"));
    std::vector<SimTime> syns;
    for (const auto& r : eng.capture(cap).records) {
        auto ip = wire::parse_ipv4(r.bytes);
        if (!ip || ip->src != agent) continue;
        auto tcp = wire::parse_tcp(r.bytes, *ip);
        if (tcp && (tcp->flags & (wire::kSyn | wire::kAck)) == wire::kSyn &&
            sim::kBandMerlinBeacon.contains(tcp->src_port))
            syns.push_back(r.ts);
    }
    if (syns.size() < 5) return 1.0;
    double sum = 0, sumsq = 0;
    double n = static_cast<double>(syns.size() - 1);
    for (std::size_t i = 1; i < syns.size(); ++i) {
        double gap = static_cast<double>(syns[i] - syns[i - 1]);
        sum += gap;
        sumsq += gap * gap;
    }
    double mean = sum / n;
    return std::sqrt(std::max(0.0, sumsq / n - mean * mean)) / mean;
}

// --------------------------------------------------------------------------
// 8. CoAP amplification
// --------------------------------------------------------------------------
bool c8_amplification(std::string& detail) {
    sim::Engine eng(topology::build_gotham(), 2);
    scenario::wire_behaviors(eng);
    threats::AttackSchedule sched;
    sched.entries.push_back({kSecond, "calabrese", "coap-amplification", "combined-cycle-1",
                             {{"victim", "metasploit-1"}, {"count", "50"}}});
    threats::schedule_attacks(eng, sched);
    auto cap_att = eng.attach_capture("coap-attacker-1--SRT3");
    auto cap_vic = eng.attach_capture("metasploit-1--SRT3");
    eng.start_all();
    eng.run(10 * kSecond);
    std::uint32_t prov = eng.prov_id("coap-amplification", "calabrese");
    Ipv4 server = eng.node_addr(eng.node_index("combined-cycle-1"));
    Ipv4 victim = eng.node_addr(eng.node_index("metasploit-1"));
    std::uint64_t sent = 0, received = 0;
    bool sizes_ok = true;
    for (const auto& r : eng.capture(cap_att).records) {
        if (r.provenance != prov) continue;
        auto ip = wire::parse_ipv4(r.bytes);
        if (!ip || ip->dst != server) continue;
        auto udp = wire::parse_udp(r.bytes, *ip);
        if (!udp) continue;
        if (udp->payload_len != 21) sizes_ok = false;
        sent += udp->payload_len;
    }
    for (const auto& r : eng.capture(cap_vic).records) {
        if (r.provenance != prov) continue;
        auto ip = wire::parse_ipv4(r.bytes);
        if (!ip || ip->dst != victim) continue;
        auto udp = wire::parse_udp(r.bytes, *ip);
        if (udp) received += udp->payload_len;
    }
    double amp = sent ? static_cast<double>(received) / static_cast<double>(sent) : 0;
    detail = fmt("request=21B amplification=%.1f (band 15..25)", amp);
    return sizes_ok && sent == 50 * 21 && amp >= 15.0 && amp <= 25.0;
}

// --------------------------------------------------------------------------
// 9 + 12. determinism and pcap validity
// --------------------------------------------------------------------------
scenario::ScenarioSpec mixed_scenario() {
    scenario::ScenarioSpec s;
    s.topology_preset = "gotham";
    s.seed = 1;
    s.duration_s = 45;
    s.captures = {"RCLOUD--SCLOUD", "RCITY--RC3", "RTHREAT--RT3"};
    s.schedule.entries.push_back({2 * kSecond, "maroni", "mirai-activate", "mirai-bot-1", {}});
    s.schedule.entries.push_back({5 * kSecond,
                                  "calabrese",
                                  "scan",
                                  "mqtt-broker-1",
                                  {{"profile", "thorough"}, {"ports", "1880-1890"}}});
    s.schedule.entries.push_back({20 * kSecond,
                                  "calabrese",
                                  "coap-amplification",
                                  "combined-cycle-1",
                                  {{"victim", "metasploit-1"}, {"count", "30"}}});
    s.schedule.entries.push_back({30 * kSecond,
                                  "maroni",
                                  "mirai-dos",
                                  "domotic-monitor-1",
                                  {{"kind", "udp-generic"},
                                   {"dport", "9"},
                                   {"rate_pps", "400"},
                                   {"duration_s", "5"},
                                   {"spoof", "true"}}});
    return s;
}

bool c9_determinism(std::string& detail, std::filesystem::path& artifacts_out) {
    auto s = mixed_scenario();
    auto text = print_scenario(s);
    auto dir1 = std::filesystem::temp_directory_path() / "gotham-acc-det1";
    auto dir2 = std::filesystem::temp_directory_path() / "gotham-acc-det2";
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
    s.output_dir = dir1.string();
    auto r1 = scenario::run_scenario(s, text);
    s.output_dir = dir2.string();
    auto r2 = scenario::run_scenario(s, text);
    bool ok = r1.manifest == r2.manifest && !r1.manifest.empty();
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
    };
    ok = ok && slurp(dir1 / "captures" / "RCLOUD--SCLOUD.pcap") ==
                   slurp(dir2 / "captures" / "RCLOUD--SCLOUD.pcap");
    ok = ok && slurp(dir1 / "labels" / "frames.csv") == slurp(dir2 / "labels" / "frames.csv");
    detail = fmt("two runs, %zu artifacts, manifests %s", r1.artifacts.size(),
                 ok ? "identical" : "DIFFER");
    artifacts_out = dir1;
    std::filesystem::remove_all(dir2);
    return ok;
}

// Independent pcap reader: parses the classic format from scratch and
// verifies field-level expectations, then cross-checks the library reader.
bool independent_pcap_check(const std::filesystem::path& file, std::string& why) {
    std::ifstream f(file, std::ios::binary);
    if (!f) {
        why = "unreadable";
        return false;
    }
    std::vector<unsigned char> d((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
    auto u16 = [&](std::size_t o) {
        return static_cast<unsigned>(d[o]) | (static_cast<unsigned>(d[o + 1]) << 8);
    };
    auto u32 = [&](std::size_t o) {
        return static_cast<std::uint32_t>(d[o]) | (static_cast<std::uint32_t>(d[o + 1]) << 8) |
               (static_cast<std::uint32_t>(d[o + 2]) << 16) |
               (static_cast<std::uint32_t>(d[o + 3]) << 24);
    };
    if (d.size() < 24) {
        why = "short header";
        return false;
    }
    if (u32(0) != 0xa1b2c3d4) {
        why = "bad magic";
        return false;
    }
    if (u16(4) != 2 || u16(6) != 4) {
        why = "bad version";
        return false;
    }
    if (u32(16) != 65535) {
        why = "bad snaplen";
        return false;
    }
    if (u32(20) != 1) {
        why = "bad linktype";
        return false;
    }
    std::size_t off = 24;
    std::uint64_t frames = 0;
    std::uint32_t last_sec = 0, last_usec = 0;
    while (off < d.size()) {
        if (off + 16 > d.size()) {
            why = "truncated record header";
            return false;
        }
        std::uint32_t sec = u32(off), usec = u32(off + 4);
        std::uint32_t incl = u32(off + 8), orig = u32(off + 12);
        if (usec >= 1000000) {
            why = "bad usec";
            return false;
        }
        if (incl > 65535 || orig < incl) {
            why = "bad lengths";
            return false;
        }
        if (sec < last_sec || (sec == last_sec && usec < last_usec)) {
            why = "timestamps not monotone";
            return false;
        }
        last_sec = sec;
        last_usec = usec;
        if (off + 16 + incl > d.size()) {
            why = "truncated record body";
            return false;
        }
        if (incl < 14) {
            why = "sub-ethernet frame";
            return false;
        }
        off += 16 + incl;
        ++frames;
    }
    auto lib = dataset::read_pcap(file);
    if (lib.size() != frames) {
        why = "reader disagreement";
        return false;
    }
    why = fmt("%llu frames", static_cast<unsigned long long>(frames));
    return true;
}

bool c12_pcap_validity(std::string& detail, const std::filesystem::path& artifacts) {
    if (artifacts.empty() || !std::filesystem::exists(artifacts / "captures")) {
        detail = "no artifacts from criterion 9";
        return false;
    }
    std::string parts;
    bool ok = true;
    int checked = 0;
    for (const auto& entry : std::filesystem::directory_iterator(artifacts / "captures")) {
        std::string why;
        bool good = independent_pcap_check(entry.path(), why);
        ok = ok && good;
        parts += entry.path().filename().string() + ":" + why + " ";
        ++checked;
    }
    detail = fmt("%d files re-parsed bit-exactly: %s", checked, parts.c_str());
    return ok && checked == 3;
}

// --------------------------------------------------------------------------
// 10 + 11. containment and label integrity over an attack-laden run
// --------------------------------------------------------------------------
struct AttackRun {
    bool containment_ok = true;
    std::uint64_t frames = 0;
    std::size_t mismatches = 0;
    std::size_t attack_frames = 0;
    std::string first_bad;
};

AttackRun run_attack_laden() {
    AttackRun out;
    sim::Engine eng(topology::build_gotham(), 3);
    scenario::wire_behaviors(eng);
    threats::AttackSchedule sched;
    sched.entries.push_back({2 * kSecond, "maroni", "mirai-activate", "mirai-bot-1", {}});
    sched.entries.push_back({4 * kSecond, "falcone", "merlin-install", "building-monitor-2",
                             {{"proto", "http1"}, {"beacon_period_s", "15"}}});
    sched.entries.push_back({20 * kSecond, "falcone", "merlin-ingress", "", {}});
    sched.entries.push_back({40 * kSecond,
                             "calabrese",
                             "scan",
                             "192.168.11.0/24",
                             {{"profile", "fast"}, {"ports", "23,80,1883"}}});
    sched.entries.push_back(
        {60 * kSecond, "calabrese", "mqtt-attack", "mqtt-broker-4", {{"kind", "brute-force"}}});
    sched.entries.push_back({70 * kSecond,
                             "calabrese",
                             "mqtt-attack",
                             "mqtt-broker-1",
                             {{"kind", "info-disclosure"}, {"duration_s", "30"}}});
    sched.entries.push_back({90 * kSecond,
                             "calabrese",
                             "coap-amplification",
                             "combined-cycle-2",
                             {{"victim", "scanner-1"}, {"count", "40"}}});
    sched.entries.push_back({110 * kSecond,
                             "falcone",
                             "merlin-dos",
                             "city-power-1",
                             {{"kind", "udp-random-port"},
                              {"rate_pps", "300"},
                              {"duration_s", "5"}}});
    sched.entries.push_back({130 * kSecond,
                             "maroni",
                             "mirai-dos",
                             "hydraulic-system-12",
                             {{"kind", "tcp-syn"},
                              {"dport", "443"},
                              {"rate_pps", "500"},
                              {"duration_s", "8"},
                              {"spoof", "true"}}});
    sched.entries.push_back({150 * kSecond,
                             "maroni",
                             "mirai-dos",
                             "stream-server-2",
                             {{"kind", "gre-ip"}, {"rate_pps", "200"}, {"duration_s", "5"}}});
    threats::schedule_attacks(eng, sched);
    std::vector<std::string> caps;
    for (const char* link : {"RCLOUD--SCLOUD", "RCITY--RC1", "RCITY--RC2", "RCITY--RC3",
                             "RCITY--RC4", "RTHREAT--RT1", "RTHREAT--RT2", "RTHREAT--RT3"})
        caps.push_back(eng.attach_capture(link));
    eng.start_all();
    eng.run(180 * kSecond);

    auto records = testutil::merged_captures(eng, caps);
    out.frames = records.size();
    const auto& range = eng.topo().public_range;
    for (const auto& r : records) {
        if (auto ip = wire::parse_ipv4(r.bytes)) {
            if (!range.contains(ip->dst) || !range.contains(ip->src)) {
                out.containment_ok = false;
                if (out.first_bad.empty()) out.first_bad = ip->src.str() + "->" + ip->dst.str();
            }
        } else if (auto arp = wire::parse_arp(r.bytes)) {
            if (!range.contains(arp->target_ip)) out.containment_ok = false;
        }
    }
    auto labels = dataset::label_capture(records, eng.intervals());
    out.mismatches = dataset::label_mismatches(records, labels, eng.prov_table());
    for (const auto& [label, count] : labels.label_counts)
        if (label != "benign") out.attack_frames += count;
    return out;
}

}  // namespace

int main() {
    std::printf("gotham acceptance suite\n");
    criterion(1, "gotham preset: 100 devices, 30 switches, 10 routers, 5 brokers, valid",
              [](std::string& d) { return c1_topology(d); });
    criterion(2, "tcp goodput in [0.90, 1.00] x cap for {1,10,25,50,75,100} Mbit/s",
              [](std::string& d) { return c2_tcp_shaping(d); });
    criterion(3, "udp curve: slope one below a 100 Mbit/s cap, clamped above",
              [](std::string& d) { return c3_udp_curve(d); });
    criterion(4, "cpu benchmark linear in cpu_share (R2 >= 0.999, 2x at half share)",
              [](std::string& d) { return c4_cpu_linearity(d); });
    criterion(5, "benign protocol mix at RCLOUD--SCLOUD over 10 minutes",
              [](std::string& d) { return c5_protocol_mix(d); });

    MiraiRun mirai;
    criterion(6, "mirai: 24/24 vulnerable devices infected within 30 simulated minutes",
              [&](std::string& d) {
                  mirai = run_mirai_acceptance();
                  d = fmt("all24=%s at %.1f min, distinct reports=%d, scan ports ok=%s",
                          mirai.all_infected ? "yes" : "no",
                          static_cast<double>(mirai.all_at) / 60e6, mirai.distinct_reports,
                          mirai.ports_ok ? "yes" : "no");
                  return mirai.all_infected && mirai.distinct_reports == 24 && mirai.ports_ok;
              });
    criterion(7, "c&c periodicity: keepalive/beacon inter-arrival cv < 0.05",
              [&](std::string& d) {
                  double merlin_cv = merlin_beacon_cv();
                  d = fmt("mirai cv=%.4f (n=%zu) merlin cv=%.4f", mirai.keepalive_cv,
                          mirai.keepalives, merlin_cv);
                  return mirai.keepalive_cv < 0.05 && merlin_cv < 0.05;
              });
    criterion(8, "coap amplification ~20x from 21-byte discovery requests",
              [](std::string& d) { return c8_amplification(d); });

    std::filesystem::path artifacts;
    criterion(9, "determinism: identical seed gives byte-identical artifacts",
              [&](std::string& d) { return c9_determinism(d, artifacts); });

    AttackRun attack;
    criterion(10, "containment: every frame stays inside 192.168.0.0/16",
              [&](std::string& d) {
                  attack = run_attack_laden();
                  d = fmt("%llu frames checked%s%s",
                          static_cast<unsigned long long>(attack.frames),
                          attack.containment_ok ? "" : ", first leak: ",
                          attack.first_bad.c_str());
                  return attack.containment_ok && attack.frames > 10000;
              });
    criterion(11, "label integrity: derived labels match hidden provenance on 100% of frames",
              [&](std::string& d) {
                  d = fmt("%llu frames, %llu attack-labeled, %llu mismatches",
                          static_cast<unsigned long long>(attack.frames),
                          static_cast<unsigned long long>(attack.attack_frames),
                          static_cast<unsigned long long>(attack.mismatches));
                  return attack.mismatches == 0 && attack.attack_frames > 0;
              });
    criterion(12, "pcap validity: artifacts re-parse bit-exactly with an independent reader",
              [&](std::string& d) { return c12_pcap_validity(d, artifacts); });

    if (!artifacts.empty()) std::filesystem::remove_all(artifacts);
    std::printf("%d/12 criteria passed\n", 12 - g_failures);
    return g_failures;
}
