#include <gotham/wire.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace gotham;

TEST_CASE("rng determinism and stream independence") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.u64() == b.u64());

    Rng root(7);
    Rng s1 = root.fork("shaper:L1:ab");
    Rng s2 = root.fork("shaper:L1:ba");
    Rng s1_again = Rng(7).fork("shaper:L1:ab");
    REQUIRE(s1.u64() == s1_again.u64());
    REQUIRE(s1.u64() != s2.u64());
}

TEST_CASE("rng bounded draw stays in range") {
    Rng r(3);
    for (int i = 0; i < 10000; ++i) {
        auto v = r.below(17);
        REQUIRE(v < 17);
    }
    REQUIRE(r.below(0) == 0);
}

TEST_CASE("rng gaussian sanity") {
    Rng r(11);
    double sum = 0, sumsq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double v = r.gaussian(10.0, 2.0);
        sum += v;
        sumsq += v * v;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    REQUIRE(mean == Catch::Approx(10.0).margin(0.1));
    REQUIRE(std::sqrt(var) == Catch::Approx(2.0).margin(0.1));
}

TEST_CASE("ipv4 parse/print round trip") {
    for (const char* s : {"0.0.0.0", "192.168.10.5", "255.255.255.255", "10.0.0.1"}) {
        auto a = Ipv4::parse(s);
        REQUIRE(a);
        REQUIRE(a->str() == s);
    }
    REQUIRE_FALSE(Ipv4::parse("300.1.1.1"));
    REQUIRE_FALSE(Ipv4::parse("1.2.3"));
    REQUIRE_FALSE(Ipv4::parse("1.2.3.4.5"));
}

TEST_CASE("prefix membership and canonical form") {
    auto p = Prefix::parse("192.168.10.0/24");
    REQUIRE(p);
    REQUIRE(p->contains(Ipv4(192, 168, 10, 255)));
    REQUIRE_FALSE(p->contains(Ipv4(192, 168, 11, 1)));
    auto q = Prefix{Ipv4(192, 168, 10, 77), 24}.canonical();
    REQUIRE(q.base == Ipv4(192, 168, 10, 0));
    REQUIRE(Prefix::parse("0.0.0.0/0")->contains(Ipv4(8, 8, 8, 8)));
    REQUIRE_FALSE(Prefix::parse("1.2.3.4/33"));
}

TEST_CASE("mac helpers") {
    auto m = Mac::parse("02:47:00:00:01:00");
    REQUIRE(m);
    REQUIRE(*m == Mac::local(1, 0));
    REQUIRE(Mac::broadcast().is_broadcast());
    Mac mcast{{0x33, 0x33, 0, 0, 0, 2}};
    REQUIRE(mcast.is_multicast());
    REQUIRE_FALSE(Mac::local(5).is_multicast());
}

TEST_CASE("iso8601 rendering of the pcap epoch") {
    REQUIRE(format_iso8601(0) == "2025-01-01T00:00:00.000000Z");
    REQUIRE(format_iso8601(90 * kSecond + 250000) == "2025-01-01T00:01:30.250000Z");
}

TEST_CASE("internet checksum matches the RFC 1071 worked example") {
    const std::uint8_t data[] = {0x00, 0x01, 0xf2, 0x03, 0xf4, 0xf5, 0xf6, 0xf7};
    REQUIRE(wire::internet_checksum(data, sizeof(data)) == 0x220d);
}

TEST_CASE("synthesized frames carry valid checksums") {
    wire::FrameSpec fs;
    fs.src_mac = Mac::local(1);
    fs.dst_mac = Mac::local(2);
    fs.src_ip = Ipv4(192, 168, 50, 10);
    fs.dst_ip = Ipv4(192, 168, 50, 11);

    auto udp = wire::build_udp(fs, 1234, 5678, to_bytes("hello"));
    REQUIRE(wire::checksums_valid(udp));
    wire::TcpSpec t;
    t.sport = 1;
    t.dport = 2;
    t.seq = 99;
    t.flags = wire::kSyn;
    auto tcp = wire::build_tcp(fs, t, {});
    REQUIRE(wire::checksums_valid(tcp));
    auto icmp = wire::build_icmp(fs, 8, 0, 7, 1, to_bytes("abcdefgh"));
    REQUIRE(wire::checksums_valid(icmp));

    SECTION("corruption is detectable") {
        udp[udp.size() - 1] ^= 0xff;
        REQUIRE_FALSE(wire::checksums_valid(udp));
    }
}

TEST_CASE("frame parse round trip") {
    wire::FrameSpec fs;
    fs.src_mac = Mac::local(3);
    fs.dst_mac = Mac::local(4);
    fs.src_ip = Ipv4(192, 168, 1, 10);
    fs.dst_ip = Ipv4(192, 168, 2, 20);
    auto f = wire::build_udp(fs, 4000, 53, to_bytes("payload"));
    auto eth = wire::parse_eth(f);
    REQUIRE(eth);
    REQUIRE(eth->src == fs.src_mac);
    auto ip = wire::parse_ipv4(f);
    REQUIRE(ip);
    REQUIRE(ip->src == fs.src_ip);
    REQUIRE(ip->dst == fs.dst_ip);
    auto udp = wire::parse_udp(f, *ip);
    REQUIRE(udp);
    REQUIRE(udp->src_port == 4000);
    REQUIRE(udp->dst_port == 53);
    REQUIRE(udp->payload_len == 7);

    SECTION("padding to ethernet minimum does not confuse parsers") {
        wire::pad_frame(f);
        REQUIRE(f.size() == 60);
        auto ip2 = wire::parse_ipv4(f);
        REQUIRE(ip2);
        auto udp2 = wire::parse_udp(f, *ip2);
        REQUIRE(udp2);
        REQUIRE(udp2->payload_len == 7);
    }
}

TEST_CASE("arp build/parse round trip") {
    auto req = wire::build_arp(Mac::local(1), Mac::broadcast(), 1, Mac::local(1),
                               Ipv4(192, 168, 50, 10), Mac{}, Ipv4(192, 168, 50, 1));
    auto v = wire::parse_arp(req);
    REQUIRE(v);
    REQUIRE(v->opcode == 1);
    REQUIRE(v->sender_ip == Ipv4(192, 168, 50, 10));
    REQUIRE(v->target_ip == Ipv4(192, 168, 50, 1));
}

TEST_CASE("malformed frames parse to nullopt, never crash") {
    Bytes junk(7, 0xab);
    REQUIRE_FALSE(wire::parse_eth(junk));
    Bytes short_ip(20, 0);
    REQUIRE_FALSE(wire::parse_ipv4(short_ip));
    // valid eth header claiming ipv4 but truncated
    Bytes f(16, 0);
    f[12] = 0x08;
    f[13] = 0x00;
    REQUIRE_FALSE(wire::parse_ipv4(f));
}
