#include <gotham/protocols.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace gotham;
using namespace gotham::protocols;

namespace {

// Frame wrapper for classify()
wire::FrameRecord frame_of(const Bytes& f) {
    wire::FrameRecord r;
    r.bytes = f;
    r.orig_len = static_cast<std::uint32_t>(f.size());
    return r;
}

wire::FrameSpec test_spec() {
    wire::FrameSpec fs;
    fs.src_mac = Mac::local(1);
    fs.dst_mac = Mac::local(2);
    fs.src_ip = Ipv4(192, 168, 50, 10);
    fs.dst_ip = Ipv4(192, 168, 50, 11);
    return fs;
}

}  // namespace

TEST_CASE("mqtt pingreq is exactly c0 00") {
    MqttMsg m;
    m.type = MqttType::Pingreq;
    auto b = encode(m);
    REQUIRE(b == Bytes{0xc0, 0x00});
}

TEST_CASE("mqtt connect/publish/subscribe round trip") {
    MqttMsg c;
    c.type = MqttType::Connect;
    c.client_id = "building-monitor-1";
    c.credentials = {{"iotuser1", "gotham-metrics"}};
    c.keepalive_s = 60;
    auto cd = decode_mqtt(encode(c));
    REQUIRE(cd);
    REQUIRE(*cd.value == c);

    MqttMsg p;
    p.type = MqttType::Publish;
    p.topic = "building-monitor-1/t3";
    p.payload = to_bytes("{\"ts\":1}");
    auto pd = decode_mqtt(encode(p));
    REQUIRE(pd);
    REQUIRE(*pd.value == p);

    MqttMsg s;
    s.type = MqttType::Subscribe;
    s.topic = "#";
    s.packet_id = 7;
    s.qos = 1;
    auto sd = decode_mqtt(encode(s));
    REQUIRE(sd);
    REQUIRE(*sd.value == s);
}

TEST_CASE("mqtt remaining-length bounds") {
    // 0xFF 0xFF 0xFF 0xFF 0x7F exceeds the 4-byte varint limit
    Bytes over{0x10, 0xff, 0xff, 0xff, 0xff, 0x7f};
    auto d = decode_mqtt(over);
    REQUIRE_FALSE(d);
    REQUIRE(d.error.find("overflow") != std::string::npos);

    MqttMsg big;
    big.type = MqttType::Publish;
    big.topic = "t";
    big.payload.resize(200000);
    REQUIRE_NOTHROW(encode(big));  // within the 268 MB protocol bound
}

TEST_CASE("mqtt zero-byte input is a truncation error") {
    auto d = decode_mqtt({});
    REQUIRE_FALSE(d);
    REQUIRE(d.error.find("trunc") != std::string::npos);
}

TEST_CASE("mqtt topic filters") {
    REQUIRE(topic_matches("#", "a/b/c"));
    REQUIRE(topic_matches("a/+/c", "a/b/c"));
    REQUIRE(topic_matches("a/b/c", "a/b/c"));
    REQUIRE_FALSE(topic_matches("a/+/c", "a/b/d"));
    REQUIRE_FALSE(topic_matches("a/b", "a/b/c"));
    REQUIRE(topic_matches("a/#", "a/b/c"));
}

TEST_CASE("coap discovery request is exactly 21 bytes") {
    CoapMsg m;
    m.type = CoapType::Con;
    m.code = CoapCode::Get;
    m.message_id = 0x84ce;
    m.uri_path = "/.well-known/core";
    auto b = encode(m);
    REQUIRE(b.size() == 21);
    auto d = decode_coap(b);
    REQUIRE(d);
    REQUIRE(d.value->uri_path == "/.well-known/core");
    REQUIRE((b[0] >> 6) == 1);  // version bits 01
}

TEST_CASE("coap response round trip with content format and token") {
    CoapMsg m;
    m.type = CoapType::Ack;
    m.code = CoapCode::Content;
    m.message_id = 42;
    m.token = {0xde, 0xad};
    m.content_format = 40;
    m.payload = to_bytes("</sensor0>");
    auto d = decode_coap(encode(m));
    REQUIRE(d);
    REQUIRE(*d.value == m);
}

TEST_CASE("coap rejects bad version and token length") {
    Bytes bad{0x80, 0x01, 0x00, 0x01};  // version bits 10
    REQUIRE_FALSE(decode_coap(bad));
    Bytes bad_tkl{0x4f, 0x01, 0x00, 0x01};  // TKL 15
    REQUIRE_FALSE(decode_coap(bad_tkl));
}

TEST_CASE("dns query/response round trip with A records") {
    DnsMsg q;
    q.id = 77;
    q.qname = "mqtt-broker-1.gotham.cloud";
    auto qd = decode_dns(encode(q));
    REQUIRE(qd);
    REQUIRE(*qd.value == q);

    DnsMsg r = q;
    r.is_response = true;
    r.answers = {{q.qname, Ipv4(192, 168, 1, 10), 300}};
    auto rd = decode_dns(encode(r));
    REQUIRE(rd);
    REQUIRE(*rd.value == r);

    DnsMsg nx = q;
    nx.is_response = true;
    nx.rcode = 3;
    auto nd = decode_dns(encode(nx));
    REQUIRE(nd);
    REQUIRE(nd.value->rcode == 3);
}

TEST_CASE("dns label length limit enforced") {
    DnsMsg q;
    q.qname = std::string(64, 'a') + ".gotham";
    REQUIRE_THROWS_AS(encode(q), Error);
}

TEST_CASE("ntp datagrams are 48 bytes, modes round trip") {
    NtpMsg c;
    c.mode = 3;
    c.transmit_ts = ntp_timestamp(5 * kSecond);
    auto b = encode(c);
    REQUIRE(b.size() == 48);
    auto d = decode_ntp(b);
    REQUIRE(d);
    REQUIRE(*d.value == c);
    REQUIRE_FALSE(decode_ntp(Bytes(47, 0)));
}

TEST_CASE("rtp and rtcp round trip") {
    RtpPacket p;
    p.payload_type = 96;
    p.seq = 999;
    p.ts = 123456;
    p.ssrc = 0xabcd1234;
    p.payload.resize(1388, 0x55);
    auto d = decode_rtp(encode(p));
    REQUIRE(d);
    REQUIRE(*d.value == p);
    REQUIRE((encode(p)[0] >> 6) == 2);  // version bits 10

    RtcpSenderReport sr;
    sr.ssrc = 7;
    sr.ntp_ts = ntp_timestamp(kSecond);
    sr.rtp_ts = 90000;
    sr.packet_count = 161;
    sr.octet_count = 225400;
    auto sd = decode_rtcp(encode(sr));
    REQUIRE(sd);
    REQUIRE(*sd.value == sr);
    REQUIRE(encode(sr).size() == 28);
}

TEST_CASE("rtsp request/response round trip") {
    RtspMsg req;
    req.method = RtspMethod::Setup;
    req.uri = "rtsp://stream-server-1.gotham/museum-cam-1";
    req.cseq = 3;
    req.transport = "RTP/AVP;unicast;client_port=6000-6001";
    auto rd = decode_rtsp(encode(req));
    REQUIRE(rd);
    REQUIRE(*rd.value == req);

    RtspMsg resp;
    resp.is_request = false;
    resp.cseq = 2;
    resp.content_type = "application/sdp";
    resp.body = make_sdp("museum-cam-1", Ipv4(192, 168, 1, 18), 6500, 96, 15);
    auto dd = decode_rtsp(encode(resp));
    REQUIRE(dd);
    REQUIRE(*dd.value == resp);
}

TEST_CASE("tls and dtls envelopes round trip") {
    TlsEnvelope rec;
    rec.record_type = 23;
    rec.body = to_bytes("opaque-bytes-here");
    auto d = decode_tls(encode(rec), false);
    REQUIRE(d);
    REQUIRE(*d.value == rec);

    TlsEnvelope dt;
    dt.record_type = 23;
    dt.dtls = true;
    dt.epoch = 1;
    dt.seq = 0x123456789a;
    dt.body = to_bytes("datagram");
    auto dd = decode_tls(encode(dt), true);
    REQUIRE(dd);
    REQUIRE(*dd.value == dt);

    TlsEnvelope oversize;
    oversize.body.resize(70000);
    REQUIRE_THROWS_AS(encode(oversize), Error);
}

TEST_CASE("round trip holds for randomized well-formed messages") {
    Rng rng(2024);
    auto rand_string = [&](std::size_t max_len) {
        std::string s;
        std::size_t n = rng.below(static_cast<std::uint32_t>(max_len));
        for (std::size_t i = 0; i < n; ++i) s.push_back('a' + rng.below(26));
        return s;
    };
    for (int iter = 0; iter < 500; ++iter) {
        switch (iter % 5) {
            case 0: {
                MqttMsg m;
                m.type = MqttType::Publish;
                m.topic = rand_string(40);
                m.qos = static_cast<std::uint8_t>(rng.below(3));
                m.packet_id = m.qos ? static_cast<std::uint16_t>(1 + rng.below(60000)) : 0;
                m.payload.resize(rng.below(2000));
                rng.fill(m.payload.data(), m.payload.size());
                auto d = decode_mqtt(encode(m));
                REQUIRE(d);
                REQUIRE(*d.value == m);
                break;
            }
            case 1: {
                CoapMsg m;
                m.type = static_cast<CoapType>(rng.below(3));
                m.code = rng.below(2) ? CoapCode::Get : CoapCode::Content;
                m.message_id = static_cast<std::uint16_t>(rng.u32());
                m.token.resize(rng.below(9));
                rng.fill(m.token.data(), m.token.size());
                m.uri_path = "/s" + std::to_string(rng.below(100));
                if (rng.below(2)) {
                    m.content_format = static_cast<std::uint16_t>(rng.below(60));
                    m.payload = to_bytes(rand_string(64));
                }
                auto d = decode_coap(encode(m));
                REQUIRE(d);
                REQUIRE(*d.value == m);
                break;
            }
            case 2: {
                DnsMsg m;
                m.id = static_cast<std::uint16_t>(rng.u32());
                m.qname = "node-" + std::to_string(rng.below(1000)) + ".gotham";
                if (rng.below(2)) {
                    m.is_response = true;
                    m.answers = {{m.qname, Ipv4(rng.u32()), 300}};
                }
                auto d = decode_dns(encode(m));
                REQUIRE(d);
                REQUIRE(*d.value == m);
                break;
            }
            case 3: {
                RtpPacket m;
                m.payload_type = static_cast<std::uint8_t>(rng.below(128));
                m.marker = rng.below(2);
                m.seq = static_cast<std::uint16_t>(rng.u32());
                m.ts = rng.u32();
                m.ssrc = rng.u32();
                m.payload.resize(rng.below(1400));
                rng.fill(m.payload.data(), m.payload.size());
                auto d = decode_rtp(encode(m));
                REQUIRE(d);
                REQUIRE(*d.value == m);
                break;
            }
            case 4: {
                TlsEnvelope m;
                m.record_type = static_cast<std::uint8_t>(20 + rng.below(4));
                m.dtls = rng.below(2);
                if (m.dtls) {
                    m.epoch = static_cast<std::uint16_t>(rng.below(4));
                    m.seq = rng.u64() & 0xffffffffffffULL;
                }
                m.body.resize(rng.below(3000));
                rng.fill(m.body.data(), m.body.size());
                auto d = decode_tls(encode(m), m.dtls);
                REQUIRE(d);
                REQUIRE(*d.value == m);
                break;
            }
        }
    }
}

TEST_CASE("truncated inputs decode to structured errors") {
    Rng rng(99);
    MqttMsg m;
    m.type = MqttType::Connect;
    m.client_id = "x";
    auto full = encode(m);
    for (std::size_t cut = 0; cut < full.size(); ++cut) {
        Bytes part(full.begin(), full.begin() + cut);
        auto d = decode_mqtt(part);
        REQUIRE_FALSE(d);
        REQUIRE_FALSE(d.error.empty());
    }
}

TEST_CASE("classify recognizes every scenario protocol") {
    auto fs = test_spec();
    SECTION("arp") {
        auto f = wire::build_arp(fs.src_mac, Mac::broadcast(), 1, fs.src_mac, fs.src_ip, Mac{},
                                 fs.dst_ip);
        REQUIRE(classify(frame_of(f)) == "arp");
    }
    SECTION("icmp") {
        auto f = wire::build_icmp(fs, 8, 0, 1, 1, to_bytes("x"));
        REQUIRE(classify(frame_of(f)) == "icmp");
    }
    SECTION("icmpv6") {
        auto f = wire::build_icmpv6_rs(fs.src_mac, 42);
        REQUIRE(classify(frame_of(f)) == "icmpv6");
    }
    SECTION("dns / ntp / coap over udp ports") {
        DnsMsg q;
        q.qname = "a.gotham";
        REQUIRE(classify(frame_of(wire::build_udp(fs, 20001, kPortDns, encode(q)))) == "dns");
        NtpMsg n;
        REQUIRE(classify(frame_of(wire::build_udp(fs, 20001, kPortNtp, encode(n)))) == "ntp");
        CoapMsg c;
        c.uri_path = "/sensor0";
        REQUIRE(classify(frame_of(wire::build_udp(fs, 20001, kPortCoap, encode(c)))) == "coap");
    }
    SECTION("rtp and rtcp in the media port range") {
        RtpPacket p;
        p.payload.resize(100);
        REQUIRE(classify(frame_of(wire::build_udp(fs, 6000, 6500, encode(p)))) == "rtp");
        RtcpSenderReport sr;
        REQUIRE(classify(frame_of(wire::build_udp(fs, 6001, 6501, encode(sr)))) == "rtcp");
    }
    SECTION("dtls by record header") {
        TlsEnvelope d;
        d.dtls = true;
        d.record_type = 23;
        d.epoch = 1;
        d.body.resize(32);
        REQUIRE(classify(frame_of(wire::build_udp(fs, 20001, kPortCoapDtls, encode(d)))) ==
                "dtls");
    }
    SECTION("mqtt vs bare tcp") {
        MqttMsg m;
        m.type = MqttType::Publish;
        m.topic = "t";
        m.payload = to_bytes("x");
        wire::TcpSpec t;
        t.sport = 20001;
        t.dport = kPortMqtt;
        t.flags = wire::kAck | wire::kPsh;
        REQUIRE(classify(frame_of(wire::build_tcp(fs, t, encode(m)))) == "mqtt");
        // a pure SYN has no application layer
        wire::TcpSpec syn;
        syn.sport = 40001;
        syn.dport = kPortTelnet;
        syn.flags = wire::kSyn;
        REQUIRE(classify(frame_of(wire::build_tcp(fs, syn, {}))) == "tcp");
    }
    SECTION("tls records over tcp") {
        TlsEnvelope rec;
        rec.record_type = 22;
        rec.body.resize(64);
        wire::TcpSpec t;
        t.sport = 20002;
        t.dport = kPortMqttTls;
        t.flags = wire::kAck | wire::kPsh;
        REQUIRE(classify(frame_of(wire::build_tcp(fs, t, encode(rec)))) == "tls");
    }
    SECTION("rtsp and sdp") {
        RtspMsg req;
        req.method = RtspMethod::Describe;
        req.uri = "rtsp://s/cam";
        wire::TcpSpec t;
        t.sport = 20003;
        t.dport = kPortRtsp;
        t.flags = wire::kAck | wire::kPsh;
        REQUIRE(classify(frame_of(wire::build_tcp(fs, t, encode(req)))) == "rtsp");
        RtspMsg resp;
        resp.is_request = false;
        resp.content_type = "application/sdp";
        resp.body = make_sdp("cam", fs.src_ip, 6500, 96, 15);
        wire::TcpSpec t2;
        t2.sport = kPortRtsp;
        t2.dport = 20003;
        t2.flags = wire::kAck | wire::kPsh;
        REQUIRE(classify(frame_of(wire::build_tcp(fs, t2, encode(resp)))) == "sdp");
    }
    SECTION("unknown udp stays udp; empty frame is other") {
        Bytes blob(64, 0x11);
        REQUIRE(classify(frame_of(wire::build_udp(fs, 33000, 27015, blob))) == "udp");
        REQUIRE(classify(frame_of(Bytes(4, 0))) == "other");
    }
}

TEST_CASE("classify is total on arbitrary bytes") {
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        Bytes junk(rng.below(200));
        rng.fill(junk.data(), junk.size());
        REQUIRE_NOTHROW(classify(frame_of(junk)));
    }
}
