#include "testutil.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace gotham;
using namespace gotham::threats;

namespace {

// Builds the full preset and wires behaviors the way run_scenario does.
sim::Engine* preset_engine(std::unique_ptr<sim::Engine>& holder, std::uint64_t seed) {
    holder = std::make_unique<sim::Engine>(topology::build_gotham(), seed);
    scenario::wire_behaviors(*holder);
    return holder.get();
}

int count_distinct_report_victims(const sim::Engine& eng) {
    std::set<std::string> victims;
    for (const auto& l : eng.logs()) {
        if (l.node != "mirai-scan-listener-1" || l.event != "report") continue;
        auto fields = split(l.detail, ' ');
        if (!fields.empty()) victims.insert(fields[0]);  // "ip=..."
    }
    return static_cast<int>(victims.size());
}

}  // namespace

TEST_CASE("attack schedule validation") {
    AttackSchedule s;
    s.entries.push_back({kSecond, "maroni", "mirai-activate", "", {}});
    s.entries.push_back({2 * kSecond, "calabrese", "scan", "192.168.1.0/24", {}});
    REQUIRE(validate_schedule(s).empty());

    SECTION("unknown actor is named in the error") {
        s.entries.push_back({3 * kSecond, "joker", "scan", "", {}});
        auto errors = validate_schedule(s);
        REQUIRE(errors.size() == 1);
        REQUIRE(errors[0].find("entry 2") != std::string::npos);
        REQUIRE(errors[0].find("joker") != std::string::npos);
    }
    SECTION("action outside the actor's repertoire") {
        s.entries.push_back({3 * kSecond, "maroni", "coap-amplification", "", {}});
        auto errors = validate_schedule(s);
        REQUIRE(errors.size() == 1);
        REQUIRE(errors[0].find("repertoire") != std::string::npos);
    }
    SECTION("unsorted entries") {
        s.entries.push_back({0, "maroni", "mirai-dos", "", {}});
        auto errors = validate_schedule(s);
        REQUIRE_FALSE(errors.empty());
    }
}

TEST_CASE("mirai scan: destination ports stay within {23, 2323}") {
    std::unique_ptr<sim::Engine> holder;
    auto& eng = *preset_engine(holder, 31);
    AttackSchedule sched;
    sched.entries.push_back({kSecond, "maroni", "mirai-activate", "mirai-bot-1", {}});
    schedule_attacks(eng, sched);
    auto cap = eng.attach_capture("mirai-bot-1--SCLOUD-EXT");
    eng.start_all();
    // 10,000 probes at the default 20 pps take 500 simulated seconds
    eng.run(502 * kSecond);

    auto* bot = detail::behavior_part<MiraiBotBehavior>(eng, eng.node_index("mirai-bot-1"));
    REQUIRE(bot);
    REQUIRE(bot->runtime().probes() >= 9900);
    std::uint32_t scan_prov = eng.prov_id("mirai-scan", "maroni");
    std::set<std::uint16_t> ports;
    std::uint64_t syns = 0;
    for (const auto& r : eng.capture(cap).records) {
        if (r.provenance != scan_prov) continue;
        auto ip = wire::parse_ipv4(r.bytes);
        if (!ip) continue;
        auto tcp = wire::parse_tcp(r.bytes, *ip);
        if (!tcp || (tcp->flags & (wire::kSyn | wire::kAck)) != wire::kSyn) continue;
        ports.insert(tcp->dst_port);
        ++syns;
        // the scanner quirk: sequence number equals the target address
        REQUIRE(tcp->seq == ip->dst.v);
        // containment: scans stay inside the public range
        REQUIRE(eng.topo().public_range.contains(ip->dst));
    }
    REQUIRE(syns >= 9000);
    for (auto p : ports) REQUIRE((p == 23 || p == 2323));
    REQUIRE(ports.count(23) == 1);
    REQUIRE(ports.count(2323) == 1);  // both ports probed at the 1:9 split
}

TEST_CASE("mirai c&c keepalives are strictly periodic") {
    std::unique_ptr<sim::Engine> holder;
    auto& eng = *preset_engine(holder, 32);
    AttackSchedule sched;
    sched.entries.push_back({kSecond, "maroni", "mirai-activate", "mirai-bot-1", {}});
    schedule_attacks(eng, sched);
    auto cap = eng.attach_capture("mirai-bot-1--SCLOUD-EXT");
    eng.start_all();
    eng.run(301 * kSecond);

    // keepalive = 2-byte tcp payload from the bot to the C&C
    Ipv4 bot = eng.node_addr(eng.node_index("mirai-bot-1"));
    std::vector<SimTime> arrivals;
    for (const auto& r : eng.capture(cap).records) {
        auto ip = wire::parse_ipv4(r.bytes);
        if (!ip || ip->src != bot) continue;
        auto tcp = wire::parse_tcp(r.bytes, *ip);
        if (!tcp || tcp->payload_len != 2 || tcp->dst_port != 23) continue;
        arrivals.push_back(r.ts);
    }
    REQUIRE(arrivals.size() >= 8);
    double sum = 0, sumsq = 0;
    for (std::size_t i = 1; i < arrivals.size(); ++i) {
        double gap = static_cast<double>(arrivals[i] - arrivals[i - 1]);
        sum += gap;
        sumsq += gap * gap;
    }
    double n = static_cast<double>(arrivals.size() - 1);
    double mean = sum / n;
    double cv = std::sqrt(sumsq / n - mean * mean) / mean;
    REQUIRE(cv < 0.05);
    REQUIRE(mean == Catch::Approx(30e6).epsilon(0.02));  // 30 s keepalive
}

TEST_CASE("brute force against non-matching credentials produces no report") {
    // a victim whose telnet credentials are outside the bot's list
    auto topo = testutil::make_lan({{"mirai-bot", {}},
                                    {"mirai-cnc", {}},
                                    {"mirai-scan-listener", {}},
                                    {"mirai-loader", {}},
                                    {"mirai-download-server", {}},
                                    {"dns-server", {}},
                                    {"cooler-motor", {{"broker", ""}}}});
    topo.find_node("cooler-motor-1")->vulnerable_telnet = {{"admin", "not-in-the-list"}};
    sim::Engine eng(topo, 33);
    scenario::wire_behaviors(eng);
    AttackSchedule sched;
    sched.entries.push_back({kSecond, "maroni", "mirai-activate", "mirai-bot-1", {}});
    schedule_attacks(eng, sched);
    eng.start_all();
    // /16 sweep at 20 pps; the victim's address will be probed eventually,
    // so give the permutation time to land on this tiny subnet
    eng.run(30 * 60 * kSecond);
    auto* listener = detail::behavior_part<MiraiScanListenerBehavior>(
        eng, eng.node_index("mirai-scan-listener-1"));
    REQUIRE(listener);
    REQUIRE(listener->reports() == 0);
    bool attempted = false;
    for (const auto& l : eng.logs())
        if (l.node == "mirai-bot-1" && l.event == "brute-success") attempted = true;
    REQUIRE_FALSE(attempted);
}

TEST_CASE("loader: one ingress per victim, duplicates discarded") {
    std::unique_ptr<sim::Engine> holder;
    auto& eng = *preset_engine(holder, 34);
    AttackSchedule sched;
    sched.entries.push_back({kSecond, "maroni", "mirai-activate", "mirai-bot-1", {}});
    schedule_attacks(eng, sched);
    eng.start_all();
    eng.run(12 * 60 * kSecond);  // long enough for several infections + rescans

    auto* loader = detail::behavior_part<MiraiLoaderBehavior>(eng, eng.node_index("mirai-loader-1"));
    auto* server =
        detail::behavior_part<HttpFileServerBehavior>(eng, eng.node_index("mirai-download-server-1"));
    REQUIRE(loader);
    REQUIRE(server);
    REQUIRE(loader->loads() >= 2);
    // one-shot ingress: downloads == distinct loaded victims
    REQUIRE(server->downloads() == loader->loads());
    // duplicate reports occur (multiple bots re-discover victims) yet each
    // victim is loaded at most once
    int infected = 0;
    for (std::size_t i = 0; i < eng.topo().nodes.size(); ++i)
        if (auto* v = detail::behavior_part<VictimTelnetBehavior>(eng, i))
            if (v->infected()) ++infected;
    REQUIRE(static_cast<std::uint64_t>(infected) == loader->loads());
}

TEST_CASE("mirai dos: three bots at 1000 pps for 10 s put 30000 syns on the victim") {
    // three standalone bots commanded directly (no propagation needed)
    auto topo = testutil::make_routed({{"mirai-bot", {}},
                                       {"mirai-bot", {}},
                                       {"mirai-bot", {}},
                                       {"mirai-cnc", {}},
                                       {"mirai-scan-listener", {}},
                                       {"mirai-loader", {}},
                                       {"mirai-download-server", {}},
                                       {"dns-server", {}}},
                                      {{"mqtt-broker", {}}});
    sim::Engine eng(topo, 35);
    scenario::wire_behaviors(eng);
    AttackSchedule sched;
    for (int b = 0; b < 3; ++b)
        sched.entries.push_back(
            {kSecond, "maroni", "mirai-activate", "mirai-bot-" + std::to_string(b + 1), {}});
    sched.entries.push_back({10 * kSecond, "maroni", "mirai-dos", "mqtt-broker-1",
                             {{"kind", "tcp-syn"},
                              {"dport", "80"},
                              {"rate_pps", "1000"},
                              {"duration_s", "10"}}});
    schedule_attacks(eng, sched);
    std::string victim_link;
    for (const auto& l : topo.links)
        if (l.a.node_id == "mqtt-broker-1") victim_link = l.link_id;
    auto cap = eng.attach_capture(victim_link);
    eng.start_all();
    eng.run(25 * kSecond);

    Ipv4 victim = eng.node_addr(eng.node_index("mqtt-broker-1"));
    std::uint64_t syns = 0;
    for (const auto& r : eng.capture(cap).records) {
        auto ip = wire::parse_ipv4(r.bytes);
        if (!ip || ip->dst != victim) continue;
        auto tcp = wire::parse_tcp(r.bytes, *ip);
        if (tcp && (tcp->flags & (wire::kSyn | wire::kAck)) == wire::kSyn && tcp->dst_port == 80)
            ++syns;
    }
    REQUIRE(static_cast<double>(syns) >= 30000 * 0.99);
    REQUIRE(static_cast<double>(syns) <= 30000 * 1.01);
}

TEST_CASE("spoofed floods use sources other than the bots'") {
    auto topo = testutil::make_routed({{"mirai-bot", {}},
                                       {"mirai-cnc", {}},
                                       {"mirai-scan-listener", {}},
                                       {"mirai-loader", {}},
                                       {"mirai-download-server", {}},
                                       {"dns-server", {}}},
                                      {{"mqtt-broker", {}}});
    sim::Engine eng(topo, 36);
    scenario::wire_behaviors(eng);
    AttackSchedule sched;
    sched.entries.push_back({kSecond, "maroni", "mirai-activate", "mirai-bot-1", {}});
    sched.entries.push_back({5 * kSecond, "maroni", "mirai-dos", "mqtt-broker-1",
                             {{"kind", "udp-generic"},
                              {"dport", "9"},
                              {"rate_pps", "500"},
                              {"duration_s", "5"},
                              {"spoof", "true"}}});
    schedule_attacks(eng, sched);
    std::string victim_link;
    for (const auto& l : topo.links)
        if (l.a.node_id == "mqtt-broker-1") victim_link = l.link_id;
    auto cap = eng.attach_capture(victim_link);
    eng.start_all();
    eng.run(12 * kSecond);

    Ipv4 bot = eng.node_addr(eng.node_index("mirai-bot-1"));
    std::uint32_t prov = eng.prov_id("mirai-dos-udp-generic", "maroni");
    std::uint64_t flood = 0;
    for (const auto& r : eng.capture(cap).records) {
        if (r.provenance != prov) continue;
        auto ip = wire::parse_ipv4(r.bytes);
        if (!ip) continue;
        REQUIRE(ip->src != bot);  // spoofed sources never match the bot
        REQUIRE(eng.topo().public_range.contains(ip->src));  // containment
        ++flood;
    }
    REQUIRE(flood > 2000);
}

TEST_CASE("dns flood frames classify as dns at the victim") {
    auto topo = testutil::make_routed({{"mirai-bot", {}},
                                       {"mirai-cnc", {}},
                                       {"mirai-scan-listener", {}},
                                       {"mirai-loader", {}},
                                       {"mirai-download-server", {}}},
                                      {{"dns-server", {}}});
    sim::Engine eng(topo, 37);
    scenario::wire_behaviors(eng);
    AttackSchedule sched;
    sched.entries.push_back({kSecond, "maroni", "mirai-activate", "mirai-bot-1", {}});
    sched.entries.push_back({5 * kSecond, "maroni", "mirai-dos", "dns-server-1",
                             {{"kind", "dns-flood"},
                              {"rate_pps", "200"},
                              {"duration_s", "3"}}});
    schedule_attacks(eng, sched);
    std::string victim_link;
    for (const auto& l : topo.links)
        if (l.a.node_id == "dns-server-1") victim_link = l.link_id;
    auto cap = eng.attach_capture(victim_link);
    eng.start_all();
    eng.run(10 * kSecond);
    std::uint32_t prov = eng.prov_id("mirai-dos-dns-flood", "maroni");
    int flood_frames = 0;
    for (const auto& r : eng.capture(cap).records) {
        if (r.provenance != prov) continue;
        auto ip = wire::parse_ipv4(r.bytes);
        if (!ip || ip->dst != eng.node_addr(eng.node_index("dns-server-1"))) continue;
        REQUIRE(protocols::classify(r) == "dns");
        ++flood_frames;
    }
    REQUIRE(flood_frames >= 590);
}

TEST_CASE("merlin: beacons are periodic, floods require the tool first") {
    auto topo = testutil::make_routed(
        {{"building-monitor", {{"broker", ""}, {"dns_period_s", "0"}, {"ntp_period_s", "0"}}}},
        {{"merlin-cnc", {}}, {"dns-server", {}}});
    sim::Engine eng(topo, 38);
    scenario::wire_behaviors(eng);
    AttackSchedule sched;
    sched.entries.push_back({2 * kSecond, "falcone", "merlin-install", "building-monitor-1",
                             {{"proto", "http1"}, {"beacon_period_s", "10"}}});
    // flood BEFORE ingress: must be rejected
    sched.entries.push_back({30 * kSecond, "falcone", "merlin-dos", "dns-server-1",
                             {{"kind", "icmp-echo"},
                              {"rate_pps", "500"},
                              {"duration_s", "4"}}});
    sched.entries.push_back({60 * kSecond, "falcone", "merlin-ingress", "", {}});
    sched.entries.push_back({120 * kSecond, "falcone", "merlin-dos", "dns-server-1",
                             {{"kind", "icmp-echo"},
                              {"rate_pps", "500"},
                              {"duration_s", "4"}}});
    schedule_attacks(eng, sched);
    std::string agent_link;
    for (const auto& l : topo.links)
        if (l.a.node_id == "building-monitor-1") agent_link = l.link_id;
    auto cap = eng.attach_capture(agent_link);
    eng.start_all();
    eng.run(600 * kSecond);

    SECTION("early flood rejected, post-ingress flood delivers 2000 +- 1% echoes") {
        bool rejected = false;
        for (const auto& l : eng.logs())
            if (l.node == "building-monitor-1" && l.event == "dos-rejected") rejected = true;
        REQUIRE(rejected);

        std::uint32_t prov = eng.prov_id("merlin-dos-icmp-echo", "falcone");
        Ipv4 victim = eng.node_addr(eng.node_index("dns-server-1"));
        std::uint64_t echoes = 0;
        for (const auto& r : eng.capture(cap).records) {
            if (r.provenance != prov) continue;
            auto ip = wire::parse_ipv4(r.bytes);
            if (!ip || ip->dst != victim) continue;
            auto icmp = wire::parse_icmp(r.bytes, *ip);
            if (icmp && icmp->type == 8) ++echoes;
        }
        REQUIRE(static_cast<double>(echoes) >= 2000 * 0.99);
        REQUIRE(static_cast<double>(echoes) <= 2000 * 1.01);
    }
    SECTION("beacon inter-arrival is strictly periodic") {
        Ipv4 agent = eng.node_addr(eng.node_index("building-monitor-1"));
        Ipv4 cnc = eng.node_addr(eng.node_index("merlin-cnc-1"));
        std::vector<SimTime> syns;
        for (const auto& r : eng.capture(cap).records) {
            auto ip = wire::parse_ipv4(r.bytes);
            if (!ip || ip->src != agent || ip->dst != cnc) continue;
            auto tcp = wire::parse_tcp(r.bytes, *ip);
            if (tcp && (tcp->flags & (wire::kSyn | wire::kAck)) == wire::kSyn &&
                sim::kBandMerlinBeacon.contains(tcp->src_port))
                syns.push_back(r.ts);
        }
        REQUIRE(syns.size() >= 20);
        double sum = 0, sumsq = 0;
        for (std::size_t i = 1; i < syns.size(); ++i) {
            double gap = static_cast<double>(syns[i] - syns[i - 1]);
            sum += gap;
            sumsq += gap * gap;
        }
        double n = static_cast<double>(syns.size() - 1);
        double mean = sum / n;
        double cv = std::sqrt(std::max(0.0, sumsq / n - mean * mean)) / mean;
        REQUIRE(cv < 0.05);
    }
}

TEST_CASE("scanner: vertical scan finds exactly the bound service ports") {
    std::unique_ptr<sim::Engine> holder;
    auto& eng = *preset_engine(holder, 39);
    AttackSchedule sched;
    sched.entries.push_back({kSecond, "calabrese", "scan", "mqtt-broker-1",
                             {{"profile", "thorough"}, {"ports", "1-1024,1883,8883"}}});
    schedule_attacks(eng, sched);
    eng.start_all();
    eng.run(60 * kSecond);
    auto* scanner = detail::behavior_part<ScannerBehavior>(eng, eng.node_index("scanner-1"));
    REQUIRE(scanner);
    // oracle: the engine's own service table for the broker node
    auto open = eng.open_ports(eng.node_index("mqtt-broker-1"));
    std::set<std::uint16_t> expected(open.begin(), open.end());
    std::set<std::uint16_t> found;
    for (const auto& f : scanner->findings())
        if (f.host == eng.node_addr(eng.node_index("mqtt-broker-1"))) found.insert(f.port);
    REQUIRE(found == expected);
    REQUIRE(found.count(1883) == 1);
}

TEST_CASE("scanner: horizontal telnet sweep reports exactly the vulnerable devices") {
    std::unique_ptr<sim::Engine> holder;
    auto& eng = *preset_engine(holder, 40);
    AttackSchedule sched;
    // RC3 subnet holds 10 vulnerable cooler motors + 4 vulnerable
    // predictive-maintenance nodes
    sched.entries.push_back({kSecond, "calabrese", "scan", "192.168.12.0/24",
                             {{"profile", "fast"}, {"ports", "23"}}});
    schedule_attacks(eng, sched);
    eng.start_all();
    eng.run(60 * kSecond);
    auto* scanner = detail::behavior_part<ScannerBehavior>(eng, eng.node_index("scanner-1"));
    REQUIRE(scanner);
    std::set<std::uint32_t> expected;
    for (const auto& n : eng.topo().nodes) {
        if (!n.vulnerable_telnet) continue;
        if (Prefix{Ipv4(192, 168, 12, 0), 24}.contains(n.iface0().ipv4))
            expected.insert(n.iface0().ipv4.v);
    }
    REQUIRE(expected.size() == 14);
    std::set<std::uint32_t> found;
    for (const auto& f : scanner->findings())
        if (f.port == 23) found.insert(f.host.v);
    REQUIRE(found == expected);
}

TEST_CASE("fast scan never sends a second packet to a closed port") {
    std::unique_ptr<sim::Engine> holder;
    auto& eng = *preset_engine(holder, 41);
    AttackSchedule sched;
    sched.entries.push_back({kSecond, "calabrese", "scan", "ntp-server-1",
                             {{"profile", "fast"}, {"ports", "4000-4063"}}});
    schedule_attacks(eng, sched);
    auto cap = eng.attach_capture("scanner-1--SRT3");
    eng.start_all();
    eng.run(30 * kSecond);
    // every probed (closed) port sees exactly one scanner frame
    std::map<std::uint16_t, int> to_port;
    Ipv4 target = eng.node_addr(eng.node_index("ntp-server-1"));
    for (const auto& r : eng.capture(cap).records) {
        auto ip = wire::parse_ipv4(r.bytes);
        if (!ip || ip->dst != target) continue;
        auto tcp = wire::parse_tcp(r.bytes, *ip);
        if (tcp) to_port[tcp->dst_port]++;
    }
    REQUIRE(to_port.size() == 64);
    for (const auto& [port, count] : to_port) REQUIRE(count == 1);
}

TEST_CASE("mqtt brute force succeeds exactly at the wordlist index") {
    std::unique_ptr<sim::Engine> holder;
    auto& eng = *preset_engine(holder, 42);
    AttackSchedule sched;
    sched.entries.push_back({kSecond, "calabrese", "mqtt-attack", "mqtt-broker-4",
                             {{"kind", "brute-force"}}});
    schedule_attacks(eng, sched);
    eng.start_all();
    eng.run(120 * kSecond);
    auto* attacker =
        detail::behavior_part<MqttAttackerBehavior>(eng, eng.node_index("mqtt-attacker-1"));
    REQUIRE(attacker);
    // oracle: position of the broker's first accepted credential pair
    auto words = mqtt_wordlist();
    int expected = -1;
    for (std::size_t i = 0; i < words.size() && expected < 0; ++i)
        for (const auto& real : topology::broker_credentials())
            if (words[i] == real) expected = static_cast<int>(i);
    REQUIRE(expected >= 0);
    REQUIRE(attacker->brute_success_index() == expected);
}

TEST_CASE("info disclosure receives every publish the broker fans out") {
    auto topo = testutil::make_routed(
        {{"building-monitor",
          {{"broker", "mqtt-broker-1.gotham"}, {"period_s", "5"}, {"period_std_s", "0"}}}},
        {{"mqtt-broker", {}}, {"mqtt-attacker", {}}, {"dns-server", {}}});
    sim::Engine eng(topo, 43);
    scenario::wire_behaviors(eng);
    AttackSchedule sched;
    sched.entries.push_back({10 * kSecond, "calabrese", "mqtt-attack", "mqtt-broker-1",
                             {{"kind", "info-disclosure"}, {"duration_s", "60"}}});
    schedule_attacks(eng, sched);
    eng.start_all();
    eng.run(80 * kSecond);
    auto* attacker =
        detail::behavior_part<MqttAttackerBehavior>(eng, eng.node_index("mqtt-attacker-1"));
    REQUIRE(attacker);
    REQUIRE(attacker->disclosed() > 0);
    // cross-check against the broker's fan-out deliveries
    auto* broker =
        detail::behavior_part<devices::MqttBrokerBehavior>(eng, eng.node_index("mqtt-broker-1"));
    REQUIRE(broker);
    REQUIRE(attacker->disclosed() == broker->state().deliveries);
}

TEST_CASE("malformed mqtt closes one connection, broker keeps serving") {
    auto topo = testutil::make_routed(
        {{"building-monitor",
          {{"broker", "mqtt-broker-1.gotham"}, {"period_s", "5"}, {"period_std_s", "0"}}}},
        {{"mqtt-broker", {}}, {"mqtt-attacker", {}}, {"dns-server", {}}});
    sim::Engine eng(topo, 44);
    scenario::wire_behaviors(eng);
    AttackSchedule sched;
    sched.entries.push_back({10 * kSecond, "calabrese", "mqtt-attack", "mqtt-broker-1",
                             {{"kind", "malformed"}}});
    schedule_attacks(eng, sched);
    eng.start_all();
    eng.run(60 * kSecond);
    bool closed_log = false;
    for (const auto& l : eng.logs())
        if (l.node == "mqtt-broker-1" && l.event == "malformed-close") closed_log = true;
    REQUIRE(closed_log);
    // the broker kept serving the benign device afterwards
    auto* broker =
        detail::behavior_part<devices::MqttBrokerBehavior>(eng, eng.node_index("mqtt-broker-1"));
    std::uint64_t publishes_after = 0;
    for (const auto& l : eng.logs())
        if (l.node == "mqtt-broker-1" && l.event == "publish" && l.t > 12 * kSecond)
            ++publishes_after;
    REQUIRE(broker);
    REQUIRE(publishes_after > 0);
}

TEST_CASE("mqtt dos: connect flood saturates, slow keepalive lingers") {
    auto topo = testutil::make_routed({{"mqtt-attacker", {}}},
                                      {{"mqtt-broker", {}}, {"dns-server", {}}});
    sim::Engine eng(topo, 47);
    scenario::wire_behaviors(eng);
    AttackSchedule sched;
    sched.entries.push_back({2 * kSecond, "calabrese", "mqtt-attack", "mqtt-broker-1",
                             {{"kind", "dos-connect-flood"},
                              {"connections", "24"},
                              {"duration_s", "20"}}});
    sched.entries.push_back({40 * kSecond, "calabrese", "mqtt-attack", "mqtt-broker-1",
                             {{"kind", "dos-slow-keepalive"},
                              {"connections", "8"},
                              {"duration_s", "120"}}});
    schedule_attacks(eng, sched);
    eng.start_all();

    eng.run(20 * kSecond);
    // flood in progress: two dozen live connections publishing big payloads
    REQUIRE(eng.live_conns(eng.node_index("mqtt-broker-1")) >= 20);
    std::uint64_t flood_publishes = 0;
    for (const auto& l : eng.logs())
        if (l.node == "mqtt-broker-1" && l.event == "publish" &&
            l.detail.find("bytes=8192") != std::string::npos)
            ++flood_publishes;
    REQUIRE(flood_publishes > 100);

    eng.run(100 * kSecond);
    // slow-keepalive connections held open with a trickle of pings
    REQUIRE(eng.live_conns(eng.node_index("mqtt-broker-1")) >= 8);
    eng.run(200 * kSecond);
    // both attacks expired: the broker drains back to zero sessions
    REQUIRE(eng.live_conns(eng.node_index("mqtt-broker-1")) == 0);
}

TEST_CASE("coap amplification: 21-byte requests, ~20x amplification at the victim") {
    std::unique_ptr<sim::Engine> holder;
    auto& eng = *preset_engine(holder, 45);
    AttackSchedule sched;
    sched.entries.push_back({kSecond, "calabrese", "coap-amplification", "combined-cycle-1",
                             {{"victim", "metasploit-1"}, {"count", "50"}}});
    schedule_attacks(eng, sched);
    auto cap_attacker = eng.attach_capture("coap-attacker-1--SRT3");
    auto cap_victim = eng.attach_capture("metasploit-1--SRT3");
    eng.start_all();
    eng.run(30 * kSecond);

    std::uint32_t prov = eng.prov_id("coap-amplification", "calabrese");
    Ipv4 server = eng.node_addr(eng.node_index("combined-cycle-1"));
    std::uint64_t sent_payload = 0, received_payload = 0;
    int requests = 0, responses = 0;
    for (const auto& r : eng.capture(cap_attacker).records) {
        if (r.provenance != prov) continue;
        auto ip = wire::parse_ipv4(r.bytes);
        if (!ip || ip->dst != server) continue;
        auto udp = wire::parse_udp(r.bytes, *ip);
        if (!udp) continue;
        REQUIRE(udp->payload_len == 21);  // the canonical discovery probe
        sent_payload += udp->payload_len;
        ++requests;
    }
    Ipv4 victim = eng.node_addr(eng.node_index("metasploit-1"));
    for (const auto& r : eng.capture(cap_victim).records) {
        if (r.provenance != prov) continue;
        auto ip = wire::parse_ipv4(r.bytes);
        if (!ip || ip->dst != victim) continue;
        auto udp = wire::parse_udp(r.bytes, *ip);
        if (!udp) continue;
        received_payload += udp->payload_len;
        ++responses;
    }
    REQUIRE(requests == 50);
    REQUIRE(responses == 50);
    double amplification =
        static_cast<double>(received_payload) / static_cast<double>(sent_payload);
    REQUIRE(amplification >= 15.0);
    REQUIRE(amplification <= 25.0);

    SECTION("count zero emits nothing") {
        auto* attacker =
            detail::behavior_part<CoapAttackerBehavior>(eng, eng.node_index("coap-attacker-1"));
        REQUIRE(attacker);
        auto before = eng.capture(cap_attacker).records.size();
        attacker->amplify(server, victim, 0);
        eng.run(eng.now() + 5 * kSecond);
        REQUIRE(eng.capture(cap_attacker).records.size() == before);
    }
}

TEST_CASE("merlin beacon protocol variants hit the wire as documented") {
    auto run_variant = [](const std::string& pr) {
        auto topo = testutil::make_routed(
            {{"building-monitor",
              {{"broker", ""}, {"dns_period_s", "0"}, {"ntp_period_s", "0"}}}},
            {{"merlin-cnc", {}}, {"dns-server", {}}});
        sim::Engine eng(topo, 48);
        scenario::wire_behaviors(eng);
        AttackSchedule sched;
        sched.entries.push_back({2 * kSecond, "falcone", "merlin-install", "building-monitor-1",
                                 {{"proto", pr}, {"beacon_period_s", "10"}}});
        schedule_attacks(eng, sched);
        std::string agent_link;
        for (const auto& l : topo.links)
            if (l.a.node_id == "building-monitor-1") agent_link = l.link_id;
        auto cap = eng.attach_capture(agent_link);
        eng.start_all();
        eng.run(60 * kSecond);
        std::map<std::string, int> classes;
        std::uint32_t prov = eng.prov_id("merlin-cnc", "falcone");
        for (const auto& r : eng.capture(cap).records)
            if (r.provenance == prov) classes[protocols::classify(r)]++;
        return classes;
    };
    SECTION("quic-model beacons ride udp") {
        auto classes = run_variant("quic-model");
        REQUIRE(classes["udp"] >= 4);
        REQUIRE(classes["tcp"] == 0);
    }
    SECTION("http/2 preface beacons classify as tcp") {
        auto classes = run_variant("h2c");
        REQUIRE(classes["tcp"] >= 4);
    }
    SECTION("tls beacons show tls records") {
        auto classes = run_variant("http1-tls");
        REQUIRE(classes["tls"] >= 4);
    }
}

TEST_CASE("monotone infection: the infected set never shrinks") {
    std::unique_ptr<sim::Engine> holder;
    auto& eng = *preset_engine(holder, 46);
    AttackSchedule sched;
    sched.entries.push_back({kSecond, "maroni", "mirai-activate", "mirai-bot-1", {}});
    schedule_attacks(eng, sched);
    eng.start_all();
    std::set<std::string> seen;
    for (int minute = 1; minute <= 10; ++minute) {
        eng.run(minute * 60 * kSecond);
        std::set<std::string> now_infected;
        for (std::size_t i = 0; i < eng.topo().nodes.size(); ++i)
            if (auto* v = detail::behavior_part<VictimTelnetBehavior>(eng, i))
                if (v->infected()) now_infected.insert(eng.topo().nodes[i].node_id);
        for (const auto& id : seen) REQUIRE(now_infected.count(id) == 1);
        for (const auto& id : now_infected) {
            // only vulnerable iot nodes ever join the botnet
            REQUIRE(eng.topo().find_node(id)->vulnerable_telnet.has_value());
        }
        seen = now_infected;
    }
    REQUIRE(seen.size() >= 1);
    REQUIRE(count_distinct_report_victims(eng) >= static_cast<int>(seen.size()));
}
