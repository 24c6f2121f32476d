#pragma once

// Benign behavior state machines: MQTT telemetry devices, brokers, CoAP
// servers and cloud pollers, RTSP/RTP cameras, stream servers and consumers,
// DNS/NTP services, plus the telemetry payload generators that stand in for
// the public sensor datasets.

#include <gotham/protocols.hpp>
#include <gotham/simkernel.hpp>

namespace gotham::devices {

namespace proto = gotham::protocols;
using sim::Engine;
using sim::TcpConn;
using sim::TcpConnPtr;

// ---------------------------------------------------------------------------
// Telemetry payloads
// ---------------------------------------------------------------------------

enum class PayloadFormat { Json, Xml, Base64, JsonBase64 };

struct TelemetrySpec {
    PayloadFormat format = PayloadFormat::Json;
    std::size_t bytes_per_record = 100;
    int topics = 1;
    int sensors = 1;
};

inline std::optional<TelemetrySpec> telemetry_spec(const std::string& template_id) {
    if (template_id == "air-quality") return TelemetrySpec{PayloadFormat::Xml, 1190, 1, 15};
    if (template_id == "building-monitor") return TelemetrySpec{PayloadFormat::Json, 100, 11, 27};
    if (template_id == "cooler-motor") return TelemetrySpec{PayloadFormat::Base64, 56, 1, 5};
    if (template_id == "domotic-monitor") return TelemetrySpec{PayloadFormat::Xml, 1743, 1, 24};
    if (template_id == "hydraulic-system")
        return TelemetrySpec{PayloadFormat::JsonBase64, 7678, 1, 17};
    if (template_id == "predictive-maintenance")
        return TelemetrySpec{PayloadFormat::Json, 632, 3, 14};
    if (template_id == "city-power") return TelemetrySpec{PayloadFormat::Json, 10, 0, 9};
    if (template_id == "combined-cycle") return TelemetrySpec{PayloadFormat::Json, 10, 0, 5};
    return std::nullopt;
}

constexpr std::uint64_t kDatasetLoop = 10000;  // records before the cursor wraps

namespace detail {

inline const char* kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string base64_of(Rng& rng, std::size_t encoded_len) {
    std::string s;
    s.reserve(encoded_len);
    for (std::size_t i = 0; i < encoded_len; ++i) s.push_back(kBase64Alphabet[rng.below(64)]);
    return s;
}

inline std::string fixed_decimal(Rng& rng, int int_digits) {
    double v = rng.uniform() * std::pow(10.0, int_digits);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", 2, v);
    return buf;
}

}  // namespace detail

// Synthetic record generator matched to the documented field counts and
// byte sizes. Deterministic per (template, cursor, stream seed); the cursor
// wraps to emulate a looped dataset.
inline Bytes make_payload(const std::string& template_id, std::uint64_t cursor, const Rng& stream) {
    auto spec = telemetry_spec(template_id);
    if (!spec) throw Error("unknown telemetry template: " + template_id);
    Rng rng = stream.fork(template_id + ":" + std::to_string(cursor % kDatasetLoop));
    std::size_t target = spec->bytes_per_record;
    std::string out;
    switch (spec->format) {
        case PayloadFormat::Json: {
            out = "{\"ts\":" + std::to_string(cursor % kDatasetLoop);
            for (int i = 0; i < spec->sensors; ++i) {
                std::string field = ",\"s" + std::to_string(i) + "\":" + detail::fixed_decimal(rng, 3);
                if (out.size() + field.size() + 1 > target && i > 0) break;
                out += field;
            }
            out += "}";
            break;
        }
        case PayloadFormat::Xml: {
            out = "<record ts=\"" + std::to_string(cursor % kDatasetLoop) + "\">";
            for (int i = 0; i < spec->sensors; ++i)
                out += "<s id=\"" + std::to_string(i) + "\">" + detail::fixed_decimal(rng, 3) +
                       "</s>";
            out += "</record>";
            break;
        }
        case PayloadFormat::Base64: {
            out = detail::base64_of(rng, target);
            break;
        }
        case PayloadFormat::JsonBase64: {
            std::string head = "{\"ts\":" + std::to_string(cursor % kDatasetLoop) + ",\"data\":\"";
            std::string tail = "\"}";
            std::size_t body = target > head.size() + tail.size() + 8
                                   ? target - head.size() - tail.size()
                                   : 8;
            out = head + detail::base64_of(rng, body) + tail;
            break;
        }
    }
    // pad or trim toward the documented record size (stays within +-10%)
    if (out.size() < target) {
        std::size_t need = target - out.size();
        if (spec->format == PayloadFormat::Xml) {
            if (need > 9) {
                std::string fill(need - 9, 'x');
                out.insert(out.size() - 9, "<pad>" + fill + "</pad>");
            }
        } else if (spec->format == PayloadFormat::Json) {
            if (need > 10) {
                std::string fill(need - 10, 'x');
                out.insert(out.size() - 1, ",\"pad\":\"" + fill + "\"");
            }
        } else {
            out += detail::base64_of(rng, need);
        }
    }
    return to_bytes(out);
}

// ---------------------------------------------------------------------------
// Device cadence state machine (pure; the engine behavior executes it)
// ---------------------------------------------------------------------------

enum class ConnectionStyle { OpenClose, AlwaysOpen };
enum class Activity { Continuous, Intermittent };

enum class EmissionKind { Telemetry, DnsRefresh, NtpExchange, IcmpEcho, NdNoise };

struct Emission {
    EmissionKind kind;
};

struct DeviceBehaviorState {
    ConnectionStyle connection = ConnectionStyle::OpenClose;
    Activity activity = Activity::Continuous;
    double period_mean_s = 10, period_std_s = 1;
    double active_s = 0, inactive_s = 0;
    SimTime dns_period = 300 * kSecond;
    SimTime ntp_period = 60 * kSecond;
    SimTime icmp_period = 30 * kSecond;
    SimTime nd_period = 300 * kSecond;

    std::uint64_t telemetry_cursor = 0;
    SimTime next_telemetry = 0;
    SimTime next_dns = 0, next_ntp = 0, next_icmp = 0, next_nd = 0;
    SimTime window_start = 0;  // start of the current active/inactive cycle

    bool intermittent() const { return activity == Activity::Intermittent; }
    bool in_active_window(SimTime now) const {
        if (!intermittent()) return true;
        SimTime cycle = static_cast<SimTime>((active_s + inactive_s) * kSecond);
        if (cycle <= 0) return true;
        SimTime pos = (now - window_start) % cycle;
        return pos < static_cast<SimTime>(active_s * kSecond);
    }
    SimTime telemetry_gap(Rng& rng) const {
        double g = rng.gaussian(period_mean_s, period_std_s);
        if (g < 0.05) g = 0.05;
        return static_cast<SimTime>(g * kSecond);
    }
};

inline DeviceBehaviorState device_state_from_config(const topology::NodeInstance& inst) {
    DeviceBehaviorState s;
    s.connection = inst.cfg("connection") == "always-open" ? ConnectionStyle::AlwaysOpen
                                                           : ConnectionStyle::OpenClose;
    s.period_mean_s = inst.cfg_double("period_s", 10);
    s.period_std_s = inst.cfg_double("period_std_s", 1);
    s.active_s = inst.cfg_double("active_s", 0);
    s.inactive_s = inst.cfg_double("inactive_s", 0);
    s.activity = (s.active_s > 0 && s.inactive_s > 0) ? Activity::Intermittent
                                                      : Activity::Continuous;
    s.dns_period = static_cast<SimTime>(inst.cfg_double("dns_period_s", 300) * kSecond);
    s.ntp_period = static_cast<SimTime>(inst.cfg_double("ntp_period_s", 60) * kSecond);
    s.icmp_period = static_cast<SimTime>(inst.cfg_double("icmp_period_s", 30) * kSecond);
    return s;
}

// Advances every due timer to its next firing and reports what fired.
// Telemetry is suppressed (but still rescheduled) outside active windows;
// background streams never pause.
inline std::vector<Emission> step_device(DeviceBehaviorState& s, SimTime now, Rng& rng) {
    std::vector<Emission> out;
    if (s.next_telemetry <= now) {
        if (s.in_active_window(now)) out.push_back({EmissionKind::Telemetry});
        s.next_telemetry = now + s.telemetry_gap(rng);
        ++s.telemetry_cursor;
    }
    if (s.dns_period > 0 && s.next_dns <= now) {
        out.push_back({EmissionKind::DnsRefresh});
        s.next_dns = now + s.dns_period;
    }
    if (s.ntp_period > 0 && s.next_ntp <= now) {
        out.push_back({EmissionKind::NtpExchange});
        s.next_ntp = now + s.ntp_period;
    }
    if (s.icmp_period > 0 && s.next_icmp <= now) {
        out.push_back({EmissionKind::IcmpEcho});
        s.next_icmp = now + s.icmp_period;
    }
    if (s.nd_period > 0 && s.next_nd <= now) {
        out.push_back({EmissionKind::NdNoise});
        s.next_nd = now + s.nd_period;
    }
    return out;
}

inline SimTime next_wake(const DeviceBehaviorState& s) {
    SimTime t = s.next_telemetry;
    if (s.dns_period > 0) t = std::min(t, s.next_dns);
    if (s.ntp_period > 0) t = std::min(t, s.next_ntp);
    if (s.icmp_period > 0) t = std::min(t, s.next_icmp);
    if (s.nd_period > 0) t = std::min(t, s.next_nd);
    return t;
}

// ---------------------------------------------------------------------------
// TLS / DTLS channels (record envelopes, keystream-masked bodies)
// ---------------------------------------------------------------------------

constexpr std::size_t kTlsRecordOverhead = 24;  // body = plaintext + 24, +5 header = +29
inline const std::size_t kTlsFlightBodies[4] = {1195, 795, 295, 295};

inline std::uint64_t channel_key(std::uint64_t seed, Ipv4 client, std::uint16_t cport, Ipv4 server,
                                 std::uint16_t sport) {
    std::uint64_t h = fnv1a64(&seed, sizeof(seed));
    std::uint32_t v[2] = {client.v, server.v};
    std::uint16_t p[2] = {cport, sport};
    h = fnv1a64(v, sizeof(v), h);
    h = fnv1a64(p, sizeof(p), h);
    return h;
}

inline void keystream_mask(Bytes& body, std::uint64_t key, int direction, std::uint64_t index) {
    std::uint64_t mix = fnv1a64(&index, sizeof(index), key ^ (direction ? 0x5a5au : 0xa5a5u));
    Rng ks(mix);
    Bytes mask(body.size());
    ks.fill(mask.data(), mask.size());
    for (std::size_t i = 0; i < body.size(); ++i) body[i] ^= mask[i];
}

// TLS 1.2-shaped channel over an established TcpConn. A 4-flight synthetic
// handshake (client hello / server hello+cert / client finished / server
// finished, wire sizes 1200/800/300/300), then type-23 records carrying
// masked application data.
class TlsChannel {
public:
    std::function<void(const Bytes&)> on_message;
    std::function<void()> on_ready;

    void attach(Engine& eng, TcpConnPtr conn, bool client) {
        eng_ = &eng;
        conn_ = std::move(conn);
        client_ = client;
        key_ = channel_key(eng.seed(), client_ ? conn_->local_ip : conn_->peer_ip,
                           client_ ? conn_->local_port : conn_->peer_port,
                           client_ ? conn_->peer_ip : conn_->local_ip,
                           client_ ? conn_->peer_port : conn_->local_port);
        std::uint64_t uid = conn_->uid;
        conn_->on_data = [this, uid](TcpConn& c, const Bytes& b) {
            if (c.uid != uid || !conn_ || conn_->uid != uid) return;
            feed(b);
        };
        if (client_) send_flight(0);  // client hello
    }
    bool ready() const { return ready_; }

    void send(const Bytes& plaintext) {
        if (!ready_) {
            pending_.push_back(plaintext);
            return;
        }
        proto::TlsEnvelope rec;
        rec.record_type = 23;
        rec.body = plaintext;
        rec.body.resize(plaintext.size() + kTlsRecordOverhead, 0);
        keystream_mask(rec.body, key_, client_ ? 0 : 1, tx_records_++);
        eng_->tcp_send(*conn_, proto::encode(rec));
    }

private:
    void send_flight(int i) {
        proto::TlsEnvelope rec;
        rec.record_type = 22;  // handshake
        rec.body.assign(kTlsFlightBodies[i], 0);
        Rng filler(key_ ^ (0x1000 + i));
        filler.fill(rec.body.data(), rec.body.size());
        eng_->tcp_send(*conn_, proto::encode(rec));
    }
    void handshake_record() {
        ++flights_seen_;
        if (client_) {
            // server hello -> client finished; server finished -> ready
            if (flights_seen_ == 1) send_flight(2);
            if (flights_seen_ == 2) finish();
        } else {
            if (flights_seen_ == 1) send_flight(1);
            if (flights_seen_ == 2) {
                send_flight(3);
                finish();
            }
        }
    }
    void finish() {
        ready_ = true;
        if (on_ready) on_ready();
        auto queued = std::move(pending_);
        pending_.clear();
        for (auto& p : queued) send(p);
    }
    void feed(const Bytes& b) {
        buf_.insert(buf_.end(), b.begin(), b.end());
        while (buf_.size() >= 5) {
            std::size_t len = (buf_[3] << 8) | buf_[4];
            if (buf_.size() < 5 + len) break;
            Bytes rec(buf_.begin(), buf_.begin() + 5 + len);
            buf_.erase(buf_.begin(), buf_.begin() + 5 + len);
            handle_record(rec);
        }
    }
    void handle_record(const Bytes& rec) {
        auto env = proto::decode_tls(rec, false);
        if (!env) return;
        if (env.value->record_type == 22) {
            handshake_record();
            return;
        }
        if (env.value->record_type != 23 || !ready_) return;
        Bytes body = env.value->body;
        keystream_mask(body, key_, client_ ? 1 : 0, rx_records_++);
        if (body.size() >= kTlsRecordOverhead) {
            body.resize(body.size() - kTlsRecordOverhead);
            if (on_message) on_message(body);
        }
    }

    Engine* eng_ = nullptr;
    TcpConnPtr conn_;
    bool client_ = true;
    bool ready_ = false;
    std::uint64_t key_ = 0;
    int flights_seen_ = 0;
    std::uint64_t tx_records_ = 0, rx_records_ = 0;
    Bytes buf_;
    std::vector<Bytes> pending_;
};

// DTLS peer over UDP: per-record keystream keyed by sequence number, so
// datagram loss cannot desynchronize the mask.
class DtlsPeer {
public:
    DtlsPeer() = default;
    DtlsPeer(std::uint64_t key, bool client) : key_(key), client_(client) {}

    Bytes seal(const Bytes& plaintext) {
        proto::TlsEnvelope rec;
        rec.record_type = 23;
        rec.dtls = true;
        rec.epoch = 1;
        rec.seq = seq_++;
        rec.body = plaintext;
        rec.body.resize(plaintext.size() + kTlsRecordOverhead, 0);
        keystream_mask(rec.body, key_, client_ ? 0 : 1, rec.seq);
        return proto::encode(rec);
    }
    std::optional<Bytes> open(const Bytes& datagram) {
        auto env = proto::decode_tls(datagram, true);
        if (!env || env.value->record_type != 23) return std::nullopt;
        Bytes body = env.value->body;
        keystream_mask(body, key_, client_ ? 1 : 0, env.value->seq);
        if (body.size() < kTlsRecordOverhead) return std::nullopt;
        body.resize(body.size() - kTlsRecordOverhead);
        return body;
    }
    // 2-datagram handshake shape (client hello / server hello+done)
    Bytes hello_record(int i) {
        proto::TlsEnvelope rec;
        rec.record_type = 22;
        rec.dtls = true;
        rec.epoch = 0;
        rec.seq = static_cast<std::uint64_t>(i);
        rec.body.assign(i == 0 ? 180 : 420, 0);
        Rng filler(key_ ^ (0x2000 + i));
        filler.fill(rec.body.data(), rec.body.size());
        return proto::encode(rec);
    }

private:
    std::uint64_t key_ = 0;
    bool client_ = true;
    std::uint64_t seq_ = 0;
};

// ---------------------------------------------------------------------------
// MQTT stream reassembly (fixed header + remaining length over TCP)
// ---------------------------------------------------------------------------

class MqttStreamParser {
public:
    // Returns complete messages; sets malformed() on framing errors.
    std::vector<proto::MqttMsg> feed(const Bytes& b) {
        std::vector<proto::MqttMsg> out;
        buf_.insert(buf_.end(), b.begin(), b.end());
        while (!malformed_) {
            if (buf_.size() < 2) break;
            std::uint32_t rem = 0, mult = 1;
            std::size_t i = 1;
            bool complete = false, overflow = false;
            for (; i < buf_.size(); ++i) {
                if (i > 4) {
                    overflow = true;
                    break;
                }
                rem += (buf_[i] & 0x7f) * mult;
                mult *= 128;
                if (!(buf_[i] & 0x80)) {
                    complete = true;
                    ++i;
                    break;
                }
            }
            if (overflow) {
                malformed_ = true;
                break;
            }
            if (!complete) break;
            std::size_t total = i + rem;
            if (buf_.size() < total) break;
            Bytes frame(buf_.begin(), buf_.begin() + total);
            buf_.erase(buf_.begin(), buf_.begin() + total);
            auto msg = proto::decode_mqtt(frame);
            if (!msg) {
                malformed_ = true;
                break;
            }
            out.push_back(*msg.value);
        }
        return out;
    }
    bool malformed() const { return malformed_; }

private:
    Bytes buf_;
    bool malformed_ = false;
};

// ---------------------------------------------------------------------------
// Broker core (pure state transition; the behavior supplies transport)
// ---------------------------------------------------------------------------

enum class BrokerAuth { Open, UserPass, Tls };

struct BrokerSession {
    std::uint64_t id = 0;
    std::string client_id;
    std::string peer;  // address:port, for logs
    bool connected = false;
    std::vector<std::pair<std::string, std::uint8_t>> subscriptions;
};

struct BrokerState {
    BrokerAuth auth_mode = BrokerAuth::Open;
    std::vector<std::pair<std::string, std::string>> credential_table;
    std::map<std::uint64_t, BrokerSession> sessions;
    std::uint64_t publishes = 0;
    std::uint64_t deliveries = 0;
};

struct BrokerReply {
    std::uint64_t session;
    proto::MqttMsg msg;
    bool close_after = false;
};

struct BrokerEvent {
    std::string event;  // connect, auth-fail, subscribe, publish, disconnect
    std::string detail;
};

// Handles one inbound MQTT message on an open session. Fan-out of PUBLISH
// uses topic filters with + and # wildcards.
inline std::vector<BrokerReply> broker_handle(BrokerState& b, std::uint64_t session,
                                              const proto::MqttMsg& m,
                                              std::vector<BrokerEvent>* events = nullptr) {
    std::vector<BrokerReply> out;
    auto sit = b.sessions.find(session);
    if (sit == b.sessions.end()) return out;
    BrokerSession& s = sit->second;
    auto emit = [&](const std::string& ev, const std::string& detail) {
        if (events) events->push_back({ev, detail});
    };
    switch (m.type) {
        case proto::MqttType::Connect: {
            proto::MqttMsg ack;
            ack.type = proto::MqttType::Connack;
            bool ok = true;
            if (b.auth_mode == BrokerAuth::UserPass) {
                ok = false;
                if (m.credentials) {
                    for (const auto& c : b.credential_table)
                        if (c.first == m.credentials->first && c.second == m.credentials->second)
                            ok = true;
                }
            }
            if (!ok) {
                ack.connack_rc = 5;  // not authorized
                emit("auth-fail", s.peer + " client=" + m.client_id);
                out.push_back({session, ack, true});
                return out;
            }
            s.connected = true;
            s.client_id = m.client_id;
            ack.connack_rc = 0;
            emit("connect", s.peer + " client=" + m.client_id);
            out.push_back({session, ack, false});
            return out;
        }
        case proto::MqttType::Publish: {
            if (!s.connected) return out;
            ++b.publishes;
            int fanout = 0;
            for (auto& [sid, sess] : b.sessions) {
                if (!sess.connected) continue;
                for (const auto& [filter, qos] : sess.subscriptions) {
                    if (proto::topic_matches(filter, m.topic)) {
                        proto::MqttMsg relay = m;
                        relay.qos = 0;
                        relay.packet_id = 0;
                        out.push_back({sid, relay, false});
                        ++b.deliveries;
                        ++fanout;
                        break;
                    }
                }
            }
            if (m.qos >= 1) {
                proto::MqttMsg ack;
                ack.type = proto::MqttType::Puback;
                ack.packet_id = m.packet_id;
                out.push_back({session, ack, false});
            }
            emit("publish", s.peer + " topic=" + m.topic + " bytes=" +
                                std::to_string(m.payload.size()) + " fanout=" +
                                std::to_string(fanout));
            return out;
        }
        case proto::MqttType::Subscribe: {
            if (!s.connected) return out;
            s.subscriptions.push_back({m.topic, m.qos});
            proto::MqttMsg ack;
            ack.type = proto::MqttType::Suback;
            ack.packet_id = m.packet_id;
            ack.qos = std::min<std::uint8_t>(m.qos, 1);
            emit("subscribe", s.peer + " filter=" + m.topic);
            out.push_back({session, ack, false});
            return out;
        }
        case proto::MqttType::Pingreq: {
            proto::MqttMsg resp;
            resp.type = proto::MqttType::Pingresp;
            out.push_back({session, resp, false});
            return out;
        }
        case proto::MqttType::Disconnect:
            emit("disconnect", s.peer + " client=" + s.client_id);
            s.connected = false;
            out.push_back({session, proto::MqttMsg{}, true});
            out.back().msg.type = proto::MqttType::Disconnect;  // marker; not sent
            return out;
        default:
            return out;
    }
}

// ---------------------------------------------------------------------------
// CoAP server core
// ---------------------------------------------------------------------------

struct CoapServerState {
    std::string template_id;   // payload generator binding
    int resources = 5;
    std::size_t resource_bytes = 10;
    Rng payload_stream;
    std::uint64_t cursor = 0;
};

inline std::string coap_link_listing(const CoapServerState& s) {
    std::string out;
    for (int i = 0; i < s.resources; ++i) {
        if (i) out += ",";
        char idx[16];
        std::snprintf(idx, sizeof(idx), "%02d", i);
        out += "</sensor" + std::to_string(i) + ">;rt=\"gotham.process-value\";if=\"core.s\";sz=" +
               std::to_string(s.resource_bytes) + ";title=\"" + s.template_id + " channel " + idx +
               "\"";
    }
    return out;
}

// GET on /sensorK -> 2.05 with a ~10 byte reading; /.well-known/core -> the
// link-format listing; anything else -> 4.04. Echoes message id and token.
inline proto::CoapMsg coap_serve(CoapServerState& s, const proto::CoapMsg& req) {
    proto::CoapMsg resp;
    resp.type = req.type == proto::CoapType::Con ? proto::CoapType::Ack : proto::CoapType::Non;
    resp.message_id = req.message_id;
    resp.token = req.token;
    if (req.code != proto::CoapCode::Get) {
        resp.code = proto::CoapCode::NotFound;
        return resp;
    }
    if (req.uri_path == "/.well-known/core") {
        resp.code = proto::CoapCode::Content;
        resp.content_format = 40;  // application/link-format
        resp.payload = to_bytes(coap_link_listing(s));
        return resp;
    }
    for (int i = 0; i < s.resources; ++i) {
        if (req.uri_path == "/sensor" + std::to_string(i)) {
            resp.code = proto::CoapCode::Content;
            resp.content_format = 0;  // text/plain
            Rng rng = s.payload_stream.fork("r" + std::to_string(i) + ":" +
                                            std::to_string(s.cursor % kDatasetLoop));
            std::string v = detail::fixed_decimal(rng, 4);
            while (v.size() < s.resource_bytes) v = "0" + v;
            resp.payload = to_bytes(v.substr(0, std::max(s.resource_bytes, v.size())));
            return resp;
        }
    }
    resp.code = proto::CoapCode::NotFound;
    return resp;
}

// ---------------------------------------------------------------------------
// DNS / NTP helpers
// ---------------------------------------------------------------------------

inline std::optional<std::size_t> find_node_by_template(const Engine& eng,
                                                        const std::string& template_id) {
    for (std::size_t i = 0; i < eng.topo().nodes.size(); ++i)
        if (eng.topo().nodes[i].template_id == template_id) return i;
    return std::nullopt;
}

// Minimal resolver with per-name cache; falls back to the static name table
// when the topology has no DNS server (unit-test topologies).
class DnsClient {
public:
    using Callback = std::function<void(std::optional<Ipv4>)>;

    void init(Engine& eng, std::size_t node, std::uint32_t prov = 0) {
        eng_ = &eng;
        node_ = node;
        prov_ = prov;
        auto dns = find_node_by_template(eng, "dns-server");
        if (dns) server_ = eng.node_addr(*dns);
    }
    void set_provenance(std::uint32_t prov) { prov_ = prov; }
    std::optional<Ipv4> cached(const std::string& name) const {
        auto it = cache_.find(name);
        if (it == cache_.end()) return std::nullopt;
        return it->second;
    }
    void flush(const std::string& name) { cache_.erase(name); }

    void resolve(const std::string& name, Callback cb) {
        if (auto hit = cached(name)) {
            cb(hit);
            return;
        }
        if (!server_) {
            // no DNS service in this topology; consult the static table
            auto addr = eng_->resolve_static(name);
            if (addr) cache_[name] = *addr;
            cb(addr);
            return;
        }
        std::uint16_t id = next_id_++;
        proto::DnsMsg q;
        q.id = id;
        q.qname = name;
        std::uint16_t sport = eng_->alloc_port(node_, sport_band_);
        pending_[id] = {name, std::move(cb), 0};
        if (!bound_.count(sport)) listen_on(sport);
        eng_->send_udp(node_, *server_, proto::kPortDns, proto::encode(q), prov_, sport);
        arm_timeout(id, sport);
    }

    void set_sport_band(sim::PortBand b) { sport_band_ = b; }

private:
    struct Pending {
        std::string name;
        Callback cb;
        int tries = 0;
    };
    void listen_on(std::uint16_t sport) {
        bound_.insert(sport);
        eng_->udp_bind(node_, sport, [this](const sim::UdpDelivery& d) {
            auto msg = proto::decode_dns(d.payload);
            if (!msg) return;
            auto it = pending_.find(msg.value->id);
            if (it == pending_.end()) return;
            auto p = std::move(it->second);
            pending_.erase(it);
            std::optional<Ipv4> result;
            if (msg.value->rcode == 0 && !msg.value->answers.empty()) {
                result = msg.value->answers[0].addr;
                cache_[p.name] = *result;
            }
            if (p.cb) p.cb(result);
        });
    }
    void arm_timeout(std::uint16_t id, std::uint16_t sport) {
        eng_->schedule_in(2 * kSecond, [this, id, sport] {
            auto it = pending_.find(id);
            if (it == pending_.end()) return;
            if (++it->second.tries >= 2) {
                auto p = std::move(it->second);
                pending_.erase(it);
                if (p.cb) p.cb(std::nullopt);
                return;
            }
            proto::DnsMsg q;
            q.id = id;
            q.qname = it->second.name;
            eng_->send_udp(node_, *server_, proto::kPortDns, proto::encode(q), prov_, sport);
            arm_timeout(id, sport);
        });
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    std::uint32_t prov_ = 0;
    std::optional<Ipv4> server_;
    std::map<std::uint16_t, Pending> pending_;
    std::map<std::string, Ipv4> cache_;
    std::set<std::uint16_t> bound_;
    std::uint16_t next_id_ = 1;
    sim::PortBand sport_band_ = sim::kBandBenign;
};

// One client-mode request, one server-mode response (48-byte payloads).
inline void ntp_exchange(Engine& eng, std::size_t node,
                         std::function<void(bool)> done = nullptr) {
    auto ntp = find_node_by_template(eng, "ntp-server");
    if (!ntp) {
        if (done) done(false);
        return;
    }
    proto::NtpMsg req;
    req.mode = 3;
    req.transmit_ts = proto::ntp_timestamp(eng.now());
    std::uint16_t sport = eng.alloc_port(node);
    auto answered = std::make_shared<bool>(false);
    Engine* e = &eng;
    eng.udp_bind(node, sport, [e, node, sport, done, answered](const sim::UdpDelivery& d) {
        auto resp = proto::decode_ntp(d.payload);
        if (resp && resp.value->mode == 4 && !*answered) {
            *answered = true;
            e->udp_unbind(node, sport);
            if (done) done(true);
        }
    });
    eng.send_udp(node, eng.node_addr(*ntp), proto::kPortNtp, proto::encode(req), 0, sport);
    eng.schedule_in(5 * kSecond, [e, node, sport] { e->udp_unbind(node, sport); });
}

// ---------------------------------------------------------------------------
// MQTT client session (devices and, later, MQTT attackers)
// ---------------------------------------------------------------------------

struct MqttClientConfig {
    Ipv4 broker;
    std::uint16_t port = proto::kPortMqtt;
    bool tls = false;
    std::string client_id;
    std::optional<std::pair<std::string, std::string>> credentials;
    std::uint16_t keepalive_s = 60;
    std::uint32_t prov = 0;
    std::uint16_t sport = 0;  // 0 = benign ephemeral
};

// Asynchronous MQTT client over plain TCP or the TLS channel. One instance
// is reusable across sequential sessions (open-close devices); events from
// a superseded connection are discarded by uid guard.
class MqttClient {
public:
    std::function<void(std::uint8_t rc)> on_connack;
    std::function<void(const proto::MqttMsg&)> on_publish;
    std::function<void(std::uint16_t packet_id)> on_puback;
    std::function<void()> on_closed;           // orderly or not
    std::function<void(const std::string&)> on_failed;

    void open(Engine& eng, std::size_t node, const MqttClientConfig& cfg) {
        eng_ = &eng;
        node_ = node;
        cfg_ = cfg;
        parser_ = MqttStreamParser{};
        tls_ = TlsChannel{};
        conn_ = eng.open_tcp(node, cfg.broker, cfg.port, cfg.prov, cfg.sport);
        if (!conn_) {
            if (on_failed) on_failed("connection budget exhausted");
            return;
        }
        std::uint64_t uid = conn_->uid;
        conn_->on_failed = [this, uid](TcpConn&, const std::string& why) {
            if (current(uid) && on_failed) on_failed(why);
        };
        conn_->on_peer_closed = [this, uid](TcpConn&) {
            if (current(uid) && on_closed) on_closed();
        };
        if (cfg.tls) {
            tls_.on_message = [this, uid](const Bytes& b) {
                if (current(uid)) feed(b);
            };
            conn_->on_connected = [this, uid](TcpConn&) {
                if (!current(uid)) return;
                tls_.attach(*eng_, conn_, true);
                send_connect();
            };
        } else {
            conn_->on_data = [this, uid](TcpConn&, const Bytes& b) {
                if (current(uid)) feed(b);
            };
            conn_->on_connected = [this, uid](TcpConn&) {
                if (current(uid)) send_connect();
            };
        }
    }

    void publish(const std::string& topic, const Bytes& payload, std::uint8_t qos = 0,
                 std::uint16_t packet_id = 0) {
        proto::MqttMsg m;
        m.type = proto::MqttType::Publish;
        m.topic = topic;
        m.payload = payload;
        m.qos = qos;
        m.packet_id = qos ? packet_id : 0;
        send(m);
    }
    void subscribe(const std::string& filter, std::uint16_t packet_id = 1) {
        proto::MqttMsg m;
        m.type = proto::MqttType::Subscribe;
        m.topic = filter;
        m.packet_id = packet_id;
        send(m);
    }
    void pingreq() {
        proto::MqttMsg m;
        m.type = proto::MqttType::Pingreq;
        send(m);
    }
    void disconnect() {
        proto::MqttMsg m;
        m.type = proto::MqttType::Disconnect;
        send(m);
        close();
    }
    void close() {
        if (conn_) eng_->tcp_close(*conn_);
    }
    void abort() {
        if (conn_) eng_->tcp_abort(*conn_);
    }
    void send_raw(const Bytes& b) {
        if (!conn_) return;
        if (cfg_.tls) tls_.send(b);
        else eng_->tcp_send(*conn_, b);
    }
    void send(const proto::MqttMsg& m) { send_raw(proto::encode(m)); }
    bool connected() const { return conn_ && conn_->established(); }
    TcpConnPtr conn() const { return conn_; }

private:
    bool current(std::uint64_t uid) const { return conn_ && conn_->uid == uid; }

    void send_connect() {
        proto::MqttMsg m;
        m.type = proto::MqttType::Connect;
        m.client_id = cfg_.client_id;
        m.credentials = cfg_.credentials;
        m.keepalive_s = cfg_.keepalive_s;
        send(m);
    }
    void feed(const Bytes& b) {
        for (auto& m : parser_.feed(b)) {
            switch (m.type) {
                case proto::MqttType::Connack:
                    if (on_connack) on_connack(m.connack_rc);
                    break;
                case proto::MqttType::Publish:
                    if (on_publish) on_publish(m);
                    break;
                case proto::MqttType::Puback:
                    if (on_puback) on_puback(m.packet_id);
                    break;
                default: break;
            }
        }
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    MqttClientConfig cfg_;
    TcpConnPtr conn_;
    TlsChannel tls_;
    MqttStreamParser parser_;
};

// ---------------------------------------------------------------------------
// Behaviors
// ---------------------------------------------------------------------------

// Shared background traffic: DNS refresh, NTP, ICMP echo to gateway, and
// IPv6 ND noise.
class BackgroundTraffic {
public:
    void init(Engine& eng, std::size_t node) {
        eng_ = &eng;
        node_ = node;
    }
    void icmp_gateway() {
        const auto& ifc = eng_->node_def(node_).iface0();
        if (ifc.gateway) eng_->ping(node_, *ifc.gateway);
    }
    void nd_noise() { eng_->emit_nd_noise(node_); }

private:
    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
};

// MQTT telemetry device (Table 1 rows with MQTT behavior).
class MqttDeviceBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        const auto& inst = eng.node_def(node);
        state_ = device_state_from_config(inst);
        spec_ = telemetry_spec(inst.template_id).value_or(TelemetrySpec{});
        rng_ = eng.rng_stream("dev:" + inst.node_id);
        payload_stream_ = eng.rng_stream("payload:" + inst.template_id);
        dns_.init(eng, node);
        bg_.init(eng, node);
        broker_name_ = inst.cfg("broker");
        tls_ = inst.cfg_bool("tls");
        broker_port_ = tls_ ? proto::kPortMqttTls : proto::kPortMqtt;
        if (!inst.cfg("username").empty())
            creds_ = {inst.cfg("username"), inst.cfg("password")};
        qos_ = static_cast<std::uint8_t>(inst.cfg_int("qos", 0) & 0x3);
        // starting phase spreads devices across the first period
        SimTime phase = static_cast<SimTime>(rng_.uniform() * state_.period_mean_s * kSecond);
        state_.window_start = eng.now();
        state_.next_telemetry = eng.now() + phase;
        state_.next_dns = eng.now() + phase / 2;
        state_.next_ntp = eng.now() + phase / 3;
        state_.next_icmp = eng.now() + phase / 4;
        state_.next_nd = eng.now() + phase / 5;
        eng.log(node, "device-up", inst.template_id);
        arm();
    }

    const DeviceBehaviorState& state() const { return state_; }
    std::uint64_t publish_ticks() const { return ticks_; }

private:
    void arm() {
        SimTime at = std::max(next_wake(state_), eng_->now() + 1);
        eng_->schedule_at(at, [this] { wake(); });
    }
    void wake() {
        auto emissions = step_device(state_, eng_->now(), rng_);
        for (const auto& e : emissions) {
            switch (e.kind) {
                case EmissionKind::Telemetry: telemetry_tick(); break;
                case EmissionKind::DnsRefresh: dns_refresh(); break;
                case EmissionKind::NtpExchange: ntp_exchange(*eng_, node_); break;
                case EmissionKind::IcmpEcho: bg_.icmp_gateway(); break;
                case EmissionKind::NdNoise: bg_.nd_noise(); break;
            }
        }
        arm();
    }
    void dns_refresh() {
        if (broker_name_.empty()) return;
        dns_.flush(broker_name_);
        dns_.resolve(broker_name_, [](std::optional<Ipv4>) {});
    }
    void telemetry_tick() {
        if (broker_name_.empty()) return;
        std::uint64_t cursor = state_.telemetry_cursor;
        dns_.resolve(broker_name_, [this, cursor](std::optional<Ipv4> addr) {
            if (!addr) {
                back_off();
                return;
            }
            if (state_.connection == ConnectionStyle::OpenClose) {
                publish_burst_openclose(*addr, cursor);
            } else {
                publish_always_open(*addr, cursor);
            }
        });
    }

    std::vector<std::pair<std::string, Bytes>> records(std::uint64_t cursor) {
        const auto& inst = eng_->node_def(node_);
        std::vector<std::pair<std::string, Bytes>> out;
        for (int k = 0; k < spec_.topics; ++k) {
            std::string topic = inst.node_id + "/t" + std::to_string(k);
            out.push_back({topic, make_payload(inst.template_id,
                                               cursor * spec_.topics + k, payload_stream_)});
        }
        return out;
    }

    void publish_records(std::uint64_t cursor) {
        for (auto& [topic, payload] : records(cursor))
            client_.publish(topic, payload, qos_, qos_ ? next_packet_id_++ : 0);
    }

    MqttClientConfig client_config(Ipv4 broker) {
        MqttClientConfig cfg;
        cfg.broker = broker;
        cfg.port = broker_port_;
        cfg.tls = tls_;
        cfg.client_id = eng_->node_def(node_).node_id;
        cfg.credentials = creds_;
        return cfg;
    }

    void publish_burst_openclose(Ipv4 broker, std::uint64_t cursor) {
        client_.on_failed = [this](const std::string&) { back_off(); };
        client_.on_closed = nullptr;
        client_.on_connack = [this, cursor](std::uint8_t rc) {
            if (rc != 0) {
                eng_->log(node_, "mqtt-refused", "rc=" + std::to_string(rc));
                client_.close();
                return;
            }
            backoff_s_ = 0;
            ++ticks_;
            publish_records(cursor);
            eng_->log(node_, "publish-tick", "records=" + std::to_string(spec_.topics));
            if (qos_ == 0) {
                client_.disconnect();
                return;
            }
            // qos 1: hold the session until every publish is acknowledged
            auto pending = std::make_shared<int>(spec_.topics);
            client_.on_puback = [this, pending](std::uint16_t) {
                if (--*pending <= 0) client_.disconnect();
            };
            std::uint64_t epoch = ++keepalive_epoch_;
            eng_->schedule_in(10 * kSecond, [this, epoch] {
                if (epoch == keepalive_epoch_ && client_.connected()) client_.disconnect();
            });
        };
        client_.open(*eng_, node_, client_config(broker));
    }

    void publish_always_open(Ipv4 broker, std::uint64_t cursor) {
        if (session_up_ && client_.connected()) {
            do_publish(cursor);
            return;
        }
        if (connecting_) return;
        connecting_ = true;
        session_up_ = false;
        client_.on_failed = [this](const std::string&) {
            connecting_ = false;
            session_up_ = false;
            back_off();
        };
        client_.on_closed = [this] {
            connecting_ = false;
            session_up_ = false;
        };
        client_.on_connack = [this, cursor](std::uint8_t rc) {
            connecting_ = false;
            if (rc != 0) {
                eng_->log(node_, "mqtt-refused", "rc=" + std::to_string(rc));
                client_.close();
                return;
            }
            session_up_ = true;
            backoff_s_ = 0;
            do_publish(cursor);
            arm_keepalive(++keepalive_epoch_);
        };
        client_.open(*eng_, node_, client_config(broker));
    }

    void do_publish(std::uint64_t cursor) {
        ++ticks_;
        publish_records(cursor);
        last_tx_ = eng_->now();
        eng_->log(node_, "publish-tick", "records=" + std::to_string(spec_.topics));
    }

    void arm_keepalive(std::uint64_t epoch) {
        SimTime interval = 45 * kSecond;  // PINGREQ under the 60 s broker keepalive
        eng_->schedule_in(interval, [this, interval, epoch] {
            if (epoch != keepalive_epoch_) return;
            if (!session_up_ || !client_.connected()) return;
            if (eng_->now() - last_tx_ >= interval) {
                client_.pingreq();
                last_tx_ = eng_->now();
            }
            arm_keepalive(epoch);
        });
    }

    void back_off() {
        backoff_s_ = backoff_s_ == 0 ? 5 : std::min(backoff_s_ * 2, 60);
        state_.next_telemetry =
            std::max(state_.next_telemetry, eng_->now() + backoff_s_ * kSecond);
        eng_->log(node_, "retry-backoff", std::to_string(backoff_s_) + "s");
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    DeviceBehaviorState state_;
    TelemetrySpec spec_;
    Rng rng_, payload_stream_;
    DnsClient dns_;
    BackgroundTraffic bg_;
    std::string broker_name_;
    bool tls_ = false;
    std::uint16_t broker_port_ = proto::kPortMqtt;
    std::optional<std::pair<std::string, std::string>> creds_;
    MqttClient client_;
    bool connecting_ = false, session_up_ = false;
    std::uint64_t keepalive_epoch_ = 0;
    std::uint8_t qos_ = 0;
    std::uint16_t next_packet_id_ = 1;
    SimTime last_tx_ = 0;
    int backoff_s_ = 0;
    std::uint64_t ticks_ = 0;
};

// MQTT broker (Mosquitto-like, Table 3 configurations).
class MqttBrokerBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        const auto& inst = eng.node_def(node);
        auto auth = inst.cfg("auth", "open");
        state_.auth_mode = auth == "userpass" ? BrokerAuth::UserPass
                           : auth == "tls"    ? BrokerAuth::Tls
                                              : BrokerAuth::Open;
        state_.credential_table = topology::broker_credentials();
        tls_ = inst.cfg_bool("tls");
        std::uint16_t port = tls_ ? proto::kPortMqttTls : proto::kPortMqtt;
        eng.tcp_listen(node, port, [this](TcpConn& c) { accept(c); });
        bg_.init(eng, node);
        arm_noise();
        eng.log(node, "broker-up", "auth=" + auth);
    }

    const BrokerState& state() const { return state_; }

private:
    // Transport state rides on the connection so late events cannot outlive it.
    struct SessionRt {
        TlsChannel tls;
        MqttStreamParser parser;
    };
    struct Session {
        TcpConnPtr conn;
        std::shared_ptr<SessionRt> rt;
    };

    void arm_noise() {
        eng_->schedule_in(300 * kSecond, [this] {
            bg_.nd_noise();
            arm_noise();
        });
        eng_->schedule_in(kSecond, [this] { bg_.nd_noise(); });
    }

    void accept(TcpConn& c) {
        std::uint64_t sid = next_session_++;
        Session sess;
        sess.conn = eng_->conn_ref(c);
        sess.rt = std::make_shared<SessionRt>();
        c.user = sess.rt;
        BrokerSession bs;
        bs.id = sid;
        bs.peer = c.peer_ip.str() + ":" + std::to_string(c.peer_port);
        state_.sessions[sid] = bs;
        if (tls_) {
            sess.rt->tls.on_message = [this, sid](const Bytes& b) { feed(sid, b); };
            sess.rt->tls.attach(*eng_, sess.conn, false);
        } else {
            c.on_data = [this, sid](TcpConn&, const Bytes& b) { feed(sid, b); };
        }
        // session teardown rides the serialized app queue so any in-flight
        // message deliveries for this session land first
        c.on_peer_closed = [this, sid](TcpConn&) {
            eng_->deliver_app(node_, [this, sid] { drop_session(sid); });
        };
        c.on_failed = [this, sid](TcpConn&, const std::string&) {
            eng_->deliver_app(node_, [this, sid] { drop_session(sid); });
        };
        sessions_[sid] = std::move(sess);
    }

    void feed(std::uint64_t sid, const Bytes& b) {
        auto it = sessions_.find(sid);
        if (it == sessions_.end()) return;
        auto rt = it->second.rt;
        auto msgs = rt->parser.feed(b);
        for (const auto& m : msgs) handle(sid, m);
        if (rt->parser.malformed()) {
            // error-close, keep serving everyone else
            eng_->log(node_, "malformed-close", state_.sessions[sid].peer);
            auto sit = sessions_.find(sid);
            if (sit != sessions_.end() && sit->second.conn) eng_->tcp_abort(*sit->second.conn);
            drop_session(sid);
        }
    }

    void handle(std::uint64_t sid, const proto::MqttMsg& m) {
        std::vector<BrokerEvent> events;
        auto replies = broker_handle(state_, sid, m, &events);
        for (const auto& ev : events) eng_->log(node_, ev.event, ev.detail);
        for (const auto& r : replies) {
            bool is_disconnect_marker = r.msg.type == proto::MqttType::Disconnect;
            if (!is_disconnect_marker) send_to(r.session, r.msg);
            if (r.close_after) {
                auto it = sessions_.find(r.session);
                if (it != sessions_.end() && it->second.conn) eng_->tcp_close(*it->second.conn);
                if (is_disconnect_marker) drop_session(r.session);
            }
        }
    }

    void send_to(std::uint64_t sid, const proto::MqttMsg& m) {
        auto it = sessions_.find(sid);
        if (it == sessions_.end() || !it->second.conn) return;
        Bytes b = proto::encode(m);
        if (tls_) it->second.rt->tls.send(b);
        else eng_->tcp_send(*it->second.conn, b);
    }

    void drop_session(std::uint64_t sid) {
        state_.sessions.erase(sid);
        sessions_.erase(sid);
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    BrokerState state_;
    bool tls_ = false;
    std::uint64_t next_session_ = 1;
    std::map<std::uint64_t, Session> sessions_;
    BackgroundTraffic bg_;
};

// CoAP server device (city power / combined cycle).
class CoapServerBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        const auto& inst = eng.node_def(node);
        state_.template_id = inst.template_id;
        state_.resources = static_cast<int>(inst.cfg_int("resources", 5));
        state_.resource_bytes = static_cast<std::size_t>(inst.cfg_int("resource_bytes", 10));
        state_.payload_stream = eng.rng_stream("coap:" + inst.node_id);
        dtls_ = inst.cfg_bool("dtls");
        bg_.init(eng, node);
        state_rng_ = eng.rng_stream("coapsrv:" + inst.node_id);
        eng.udp_bind(node, dtls_ ? proto::kPortCoapDtls : proto::kPortCoap,
                     [this](const sim::UdpDelivery& d) { request(d); });
        arm_background();
        eng.log(node, "coap-up", "resources=" + std::to_string(state_.resources));
    }

    CoapServerState& state() { return state_; }

private:
    void arm_background() {
        const auto& inst = eng_->node_def(node_);
        SimTime icmp = static_cast<SimTime>(inst.cfg_double("icmp_period_s", 30) * kSecond);
        if (icmp > 0) {
            SimTime phase = static_cast<SimTime>(state_rng_.uniform() * icmp);
            eng_->schedule_in(phase + 1, [this, icmp] { icmp_loop(icmp); });
        }
        eng_->schedule_in(kSecond, [this] { bg_.nd_noise(); });
        eng_->schedule_in(300 * kSecond, [this] { nd_loop(); });
    }
    void icmp_loop(SimTime period) {
        bg_.icmp_gateway();
        eng_->schedule_in(period, [this, period] { icmp_loop(period); });
    }
    void nd_loop() {
        bg_.nd_noise();
        eng_->schedule_in(300 * kSecond, [this] { nd_loop(); });
    }

    DtlsPeer& peer_for(Ipv4 src, std::uint16_t sport, Ipv4 dst, std::uint16_t dport) {
        auto key = std::make_pair(src.v, sport);
        auto it = dtls_peers_.find(key);
        if (it == dtls_peers_.end()) {
            std::uint64_t k = channel_key(eng_->seed(), src, sport, dst, dport);
            it = dtls_peers_.emplace(key, DtlsPeer(k, false)).first;
        }
        return it->second;
    }

    void request(const sim::UdpDelivery& d) {
        ++state_.cursor;
        Bytes payload = d.payload;
        if (dtls_) {
            auto env = proto::decode_tls(payload, true);
            if (!env) return;
            auto& peer = peer_for(d.src, d.sport, d.dst, d.dport);
            if (env.value->record_type == 22) {
                // answer the client hello with the server flight
                eng_->send_udp(node_, d.src, d.sport, peer.hello_record(1), d.prov, d.dport);
                return;
            }
            auto inner = peer.open(payload);
            if (!inner) return;
            payload = *inner;
        }
        auto req = proto::decode_coap(payload);
        if (!req) return;
        auto resp = coap_serve(state_, *req.value);
        Bytes out = proto::encode(resp);
        if (dtls_) out = peer_for(d.src, d.sport, d.dst, d.dport).seal(out);
        eng_->send_udp(node_, d.src, d.sport, out, d.prov, d.dport);
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    CoapServerState state_;
    bool dtls_ = false;
    Rng state_rng_;
    BackgroundTraffic bg_;
    std::map<std::pair<std::uint32_t, std::uint16_t>, DtlsPeer> dtls_peers_;
};

// Cloud CoAP poller: periodically GETs every resource of its target servers
// and occasionally re-walks /.well-known/core.
class CoapPollerBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        const auto& inst = eng.node_def(node);
        dtls_ = inst.cfg_bool("dtls");
        poll_period_ = static_cast<SimTime>(inst.cfg_double("poll_period_s", 10) * kSecond);
        icmp_period_ = static_cast<SimTime>(inst.cfg_double("icmp_period_s", 30) * kSecond);
        for (const auto& spec : split(inst.cfg("targets"), ',')) {
            if (spec.empty()) continue;
            auto colon = spec.rfind(':');
            Target t;
            t.name = colon == std::string::npos ? spec : spec.substr(0, colon);
            t.resources = colon == std::string::npos
                              ? 5
                              : std::atoi(spec.c_str() + colon + 1);
            targets_.push_back(t);
        }
        dns_.init(eng, node);
        bg_.init(eng, node);
        rng_ = eng.rng_stream("poller:" + inst.node_id);
        sport_ = eng.alloc_port(node);
        eng.udp_bind(node, sport_, [this](const sim::UdpDelivery& d) { response(d); });
        SimTime phase = static_cast<SimTime>(rng_.uniform() * poll_period_);
        eng.schedule_in(phase + 1, [this] { poll_cycle(); });
        if (icmp_period_ > 0) eng.schedule_in(icmp_period_ / 2 + 1, [this] { icmp_cycle(); });
        eng.schedule_in(kSecond, [this] { bg_.nd_noise(); });
        eng.schedule_in(300 * kSecond, [this] { nd_cycle(); });
        eng.log(node, "poller-up", "targets=" + std::to_string(targets_.size()));
    }

private:
    struct Target {
        std::string name;
        int resources = 5;
        std::optional<Ipv4> addr;
        bool dtls_ready = false;
    };

    void poll_cycle() {
        ++cycle_;
        for (auto& t : targets_) {
            if (!t.addr) {
                dns_.resolve(t.name, [this, &t](std::optional<Ipv4> a) {
                    t.addr = a;
                    if (a) poll_target(t);
                });
            } else {
                poll_target(t);
            }
        }
        eng_->schedule_in(poll_period_, [this] { poll_cycle(); });
    }

    void poll_target(Target& t) {
        if (!t.addr) return;
        std::uint16_t dport = dtls_ ? proto::kPortCoapDtls : proto::kPortCoap;
        if (dtls_ && !t.dtls_ready) {
            eng_->send_udp(node_, *t.addr, dport, peer_for(t).hello_record(0), 0, sport_);
            t.dtls_ready = true;  // fire-and-forget handshake shape
        }
        for (int r = 0; r < t.resources; ++r)
            send_get(t, "/sensor" + std::to_string(r), dport);
        if (cycle_ % 6 == 0) send_get(t, "/.well-known/core", dport);
    }

    DtlsPeer& peer_for(Target& t) {
        auto it = dtls_peers_.find(t.name);
        if (it == dtls_peers_.end()) {
            std::uint64_t key = channel_key(eng_->seed(), eng_->node_addr(node_), sport_, *t.addr,
                                            proto::kPortCoapDtls);
            it = dtls_peers_.emplace(t.name, DtlsPeer(key, true)).first;
        }
        return it->second;
    }

    void send_get(Target& t, const std::string& path, std::uint16_t dport) {
        proto::CoapMsg m;
        m.type = proto::CoapType::Con;
        m.code = proto::CoapCode::Get;
        m.message_id = next_mid_++;
        m.token = {static_cast<std::uint8_t>(m.message_id >> 8),
                   static_cast<std::uint8_t>(m.message_id)};
        m.uri_path = path;
        Bytes out = proto::encode(m);
        if (dtls_) out = peer_for(t).seal(out);
        eng_->send_udp(node_, *t.addr, dport, out, 0, sport_);
    }

    void response(const sim::UdpDelivery&) { ++responses_; }

    void icmp_cycle() {
        for (auto& t : targets_)
            if (t.addr) eng_->ping(node_, *t.addr);
        eng_->schedule_in(icmp_period_, [this] { icmp_cycle(); });
    }
    void nd_cycle() {
        bg_.nd_noise();
        eng_->schedule_in(300 * kSecond, [this] { nd_cycle(); });
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    bool dtls_ = false;
    SimTime poll_period_ = 10 * kSecond, icmp_period_ = 30 * kSecond;
    std::vector<Target> targets_;
    DnsClient dns_;
    BackgroundTraffic bg_;
    Rng rng_;
    std::uint16_t sport_ = 0;
    std::uint16_t next_mid_ = 1;
    std::uint64_t cycle_ = 0, responses_ = 0;
    std::map<std::string, DtlsPeer> dtls_peers_;
};

// ---------------------------------------------------------------------------
// RTSP/RTP streaming
// ---------------------------------------------------------------------------

constexpr std::uint8_t kRtpPayloadType = 96;
constexpr SimTime kRtcpInterval = 5 * kSecond;

// Stream server: accepts RTSP publishers (cameras) and readers (consumers),
// relays publisher RTP to every attached reader.
class StreamServerBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        eng.tcp_listen(node, proto::kPortRtsp, [this](TcpConn& c) { accept(c); });
        bg_.init(eng, node);
        eng.schedule_in(kSecond, [this] { bg_.nd_noise(); });
        eng.schedule_in(300 * kSecond, [this] { nd_cycle(); });
        eng.log(node, "stream-server-up", "");
    }

private:
    struct Reader {
        Ipv4 addr;
        std::uint16_t rtp_port;
        std::string session;
    };
    struct Stream {
        std::uint16_t server_rtp_port = 0;
        Ipv4 publisher;
        std::vector<Reader> readers;
        std::uint32_t ssrc = 0;
        std::uint32_t relay_packets = 0, relay_octets = 0;
        std::uint32_t rtp_ts = 0;
    };

    void nd_cycle() {
        bg_.nd_noise();
        eng_->schedule_in(300 * kSecond, [this] { nd_cycle(); });
    }

    void accept(TcpConn& c) {
        auto conn = eng_->conn_ref(c);
        c.on_data = [this, conn](TcpConn&, const Bytes& b) { rtsp_input(conn, b); };
    }

    void rtsp_input(TcpConnPtr conn, const Bytes& b) {
        auto req = proto::decode_rtsp(b);
        if (!req || !req.value->is_request) return;
        const auto& m = *req.value;
        proto::RtspMsg resp;
        resp.is_request = false;
        resp.cseq = m.cseq;
        std::string stream = stream_of(m.uri);
        switch (m.method) {
            case proto::RtspMethod::Options: break;
            case proto::RtspMethod::Describe: {
                resp.content_type = "application/sdp";
                std::uint16_t port = ensure_stream(stream).server_rtp_port;
                resp.body = proto::make_sdp(stream, eng_->node_addr(node_), port,
                                            kRtpPayloadType, fps_hint_);
                break;
            }
            case proto::RtspMethod::Setup: {
                auto& st = ensure_stream(stream);
                resp.session = stream + "-" + std::to_string(next_session_++);
                resp.transport = m.transport + ";server_port=" +
                                 std::to_string(st.server_rtp_port) + "-" +
                                 std::to_string(st.server_rtp_port + 1);
                // client_port=NNNN-NNNN+1 names the reader's RTP port
                auto cp = m.transport.find("client_port=");
                if (cp != std::string::npos && m.transport.find("mode=record") == std::string::npos) {
                    int port = std::atoi(m.transport.c_str() + cp + 12);
                    pending_readers_[resp.session] = Reader{conn->peer_ip,
                                                            static_cast<std::uint16_t>(port),
                                                            resp.session};
                } else {
                    st.publisher = conn->peer_ip;
                }
                break;
            }
            case proto::RtspMethod::Play: {
                auto it = pending_readers_.find(m.session);
                if (it != pending_readers_.end()) {
                    ensure_stream(stream).readers.push_back(it->second);
                    eng_->log(node_, "reader-attach", stream + " " + it->second.addr.str());
                    pending_readers_.erase(it);
                } else {
                    eng_->log(node_, "publish-start", stream + " " + conn->peer_ip.str());
                }
                resp.session = m.session;
                break;
            }
            case proto::RtspMethod::Teardown: {
                auto& st = ensure_stream(stream);
                for (auto rit = st.readers.begin(); rit != st.readers.end();) {
                    if (rit->session == m.session) {
                        eng_->log(node_, "reader-detach", stream + " " + rit->addr.str());
                        rit = st.readers.erase(rit);
                    } else {
                        ++rit;
                    }
                }
                resp.session = m.session;
                break;
            }
        }
        eng_->tcp_send(*conn, proto::encode(resp));
    }

    std::string stream_of(const std::string& uri) {
        auto slash = uri.rfind('/');
        return slash == std::string::npos ? uri : uri.substr(slash + 1);
    }

    Stream& ensure_stream(const std::string& name) {
        auto it = streams_.find(name);
        if (it != streams_.end()) return it->second;
        Stream st;
        st.server_rtp_port = next_rtp_port_;
        next_rtp_port_ += 2;
        st.ssrc = static_cast<std::uint32_t>(fnv1a64(name));
        streams_[name] = st;
        auto& ref = streams_[name];
        eng_->udp_bind(node_, ref.server_rtp_port,
                       [this, name](const sim::UdpDelivery& d) { relay_rtp(name, d); });
        eng_->udp_bind(node_, ref.server_rtp_port + 1,
                       [](const sim::UdpDelivery&) { /* publisher RTCP absorbed */ });
        eng_->schedule_in(kRtcpInterval, [this, name] { rtcp_cycle(name); });
        return ref;
    }

    void relay_rtp(const std::string& stream, const sim::UdpDelivery& d) {
        auto& st = streams_[stream];
        // only the registered publisher's well-formed RTP is relayed
        if (d.src != st.publisher) return;
        auto pkt = proto::decode_rtp(d.payload);
        if (!pkt || pkt.value->payload_type != kRtpPayloadType) return;
        for (const auto& r : st.readers) {
            eng_->send_udp(node_, r.addr, r.rtp_port, d.payload, d.prov, st.server_rtp_port);
            ++st.relay_packets;
            st.relay_octets += static_cast<std::uint32_t>(d.payload.size());
        }
        st.rtp_ts = pkt.value->ts;
    }

    void rtcp_cycle(const std::string& stream) {
        auto it = streams_.find(stream);
        if (it == streams_.end()) return;
        auto& st = it->second;
        proto::RtcpSenderReport sr;
        sr.ssrc = st.ssrc;
        sr.ntp_ts = proto::ntp_timestamp(eng_->now());
        sr.rtp_ts = st.rtp_ts;
        sr.packet_count = st.relay_packets;
        sr.octet_count = st.relay_octets;
        Bytes b = proto::encode(sr);
        for (const auto& r : st.readers)
            eng_->send_udp(node_, r.addr, static_cast<std::uint16_t>(r.rtp_port + 1), b, 0,
                           static_cast<std::uint16_t>(st.server_rtp_port + 1));
        eng_->schedule_in(kRtcpInterval, [this, stream] { rtcp_cycle(stream); });
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    std::map<std::string, Stream> streams_;
    std::map<std::string, Reader> pending_readers_;
    int fps_hint_ = 15;  // advertised in SDP; cameras set the real pacing
    std::uint16_t next_rtp_port_ = 6500;
    std::uint64_t next_session_ = 1;
    BackgroundTraffic bg_;
};

// IP camera: RTSP session once, then constant-bitrate RTP plus periodic
// RTCP sender reports. 1.8 Mbit/s at ~1400-byte packets by default.
class CameraBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        const auto& inst = eng.node_def(node);
        server_name_ = inst.cfg("stream_server");
        stream_ = inst.cfg("stream_name", inst.node_id);
        bitrate_ = static_cast<double>(inst.cfg_int("bitrate_bps", 1800000));
        packet_bytes_ = static_cast<std::size_t>(inst.cfg_int("packet_bytes", 1400));
        rng_ = eng.rng_stream("camera:" + inst.node_id);
        payload_rng_ = eng.rng_stream("rtp:" + inst.node_id);
        dns_.init(eng, node);
        bg_.init(eng, node);
        ssrc_ = static_cast<std::uint32_t>(fnv1a64(inst.node_id));
        local_rtp_port_ = 6000;
        eng.udp_bind(node, local_rtp_port_, [](const sim::UdpDelivery&) {});
        eng.udp_bind(node, local_rtp_port_ + 1, [](const sim::UdpDelivery&) {});
        const SimTime icmp = static_cast<SimTime>(inst.cfg_double("icmp_period_s", 30) * kSecond);
        if (icmp > 0) eng.schedule_in(icmp, [this, icmp] { icmp_cycle(icmp); });
        eng.schedule_in(kSecond, [this] { bg_.nd_noise(); });
        eng.schedule_in(300 * kSecond, [this] { nd_cycle(); });
        eng.schedule_in(1 + static_cast<SimTime>(rng_.uniform() * kSecond), [this] { connect(); });
        eng.log(node, "camera-up", stream_);
    }

private:
    void icmp_cycle(SimTime period) {
        bg_.icmp_gateway();
        eng_->schedule_in(period, [this, period] { icmp_cycle(period); });
    }
    void nd_cycle() {
        bg_.nd_noise();
        eng_->schedule_in(300 * kSecond, [this] { nd_cycle(); });
    }

    void connect() {
        dns_.resolve(server_name_, [this](std::optional<Ipv4> addr) {
            if (!addr) {
                retry();
                return;
            }
            server_ = *addr;
            conn_ = eng_->open_tcp(node_, server_, proto::kPortRtsp);
            if (!conn_) {
                retry();
                return;
            }
            conn_->on_connected = [this](TcpConn&) { send_request(proto::RtspMethod::Options); };
            conn_->on_data = [this](TcpConn&, const Bytes& b) { rtsp_response(b); };
            conn_->on_failed = [this](TcpConn&, const std::string&) { retry(); };
        });
    }
    void retry() {
        backoff_s_ = backoff_s_ == 0 ? 5 : std::min(backoff_s_ * 2, 60);
        eng_->schedule_in(backoff_s_ * kSecond, [this] { connect(); });
    }

    void send_request(proto::RtspMethod method) {
        proto::RtspMsg m;
        m.method = method;
        m.uri = "rtsp://" + server_name_ + "/" + stream_;
        m.cseq = cseq_++;
        m.session = session_;
        if (method == proto::RtspMethod::Setup)
            m.transport = "RTP/AVP;unicast;client_port=" + std::to_string(local_rtp_port_) + "-" +
                          std::to_string(local_rtp_port_ + 1) + ";mode=record";
        awaiting_ = method;
        eng_->tcp_send(*conn_, proto::encode(m));
    }

    void rtsp_response(const Bytes& b) {
        auto resp = proto::decode_rtsp(b);
        if (!resp || resp.value->is_request) return;
        switch (awaiting_) {
            case proto::RtspMethod::Options: send_request(proto::RtspMethod::Describe); break;
            case proto::RtspMethod::Describe: send_request(proto::RtspMethod::Setup); break;
            case proto::RtspMethod::Setup: {
                session_ = resp.value->session;
                auto sp = resp.value->transport.find("server_port=");
                if (sp != std::string::npos)
                    server_rtp_port_ =
                        static_cast<std::uint16_t>(std::atoi(resp.value->transport.c_str() + sp + 12));
                send_request(proto::RtspMethod::Play);
                break;
            }
            case proto::RtspMethod::Play:
                backoff_s_ = 0;
                start_streaming();
                break;
            default: break;
        }
    }

    void start_streaming() {
        if (streaming_) return;
        streaming_ = true;
        interval_ = static_cast<SimTime>(static_cast<double>(packet_bytes_) * 8.0 / bitrate_ * 1e6);
        eng_->log(node_, "stream-start", stream_ + " interval_us=" + std::to_string(interval_));
        eng_->schedule_in(interval_, [this] { rtp_tick(); });
        eng_->schedule_in(kRtcpInterval, [this] { rtcp_tick(); });
    }

    void rtp_tick() {
        proto::RtpPacket pkt;
        pkt.payload_type = kRtpPayloadType;
        pkt.seq = static_cast<std::uint16_t>(seq_++);
        pkt.ts = static_cast<std::uint32_t>(eng_->now() * 90 / 1000);  // 90 kHz clock
        pkt.ssrc = ssrc_;
        pkt.marker = seq_ % 15 == 0;
        pkt.payload.resize(packet_bytes_ - 12);
        payload_rng_.fill(pkt.payload.data(), pkt.payload.size());
        eng_->send_udp(node_, server_, server_rtp_port_, proto::encode(pkt), 0, local_rtp_port_);
        packets_++;
        octets_ += static_cast<std::uint32_t>(packet_bytes_);
        eng_->schedule_in(interval_, [this] { rtp_tick(); });
    }

    void rtcp_tick() {
        proto::RtcpSenderReport sr;
        sr.ssrc = ssrc_;
        sr.ntp_ts = proto::ntp_timestamp(eng_->now());
        sr.rtp_ts = static_cast<std::uint32_t>(eng_->now() * 90 / 1000);
        sr.packet_count = packets_;
        sr.octet_count = octets_;
        eng_->send_udp(node_, server_, static_cast<std::uint16_t>(server_rtp_port_ + 1),
                       proto::encode(sr), 0, static_cast<std::uint16_t>(local_rtp_port_ + 1));
        eng_->schedule_in(kRtcpInterval, [this] { rtcp_tick(); });
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    std::string server_name_, stream_, session_;
    Ipv4 server_;
    double bitrate_ = 1800000;
    std::size_t packet_bytes_ = 1400;
    SimTime interval_ = 0;
    std::uint16_t local_rtp_port_ = 6000, server_rtp_port_ = 0;
    std::uint32_t ssrc_ = 0, seq_ = 0, packets_ = 0, octets_ = 0;
    std::uint32_t cseq_ = 1;
    proto::RtspMethod awaiting_ = proto::RtspMethod::Options;
    bool streaming_ = false;
    int backoff_s_ = 0;
    TcpConnPtr conn_;
    Rng rng_, payload_rng_;
    DnsClient dns_;
    BackgroundTraffic bg_;
};

// Stream consumer: attaches intermittently, reads the relayed feed.
class StreamConsumerBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        const auto& inst = eng.node_def(node);
        server_name_ = inst.cfg("stream_server");
        stream_ = inst.cfg("stream_name");
        attach_s_ = inst.cfg_double("attach_s", 120);
        detach_s_ = inst.cfg_double("detach_s", 120);
        rng_ = eng.rng_stream("consumer:" + inst.node_id);
        dns_.init(eng, node);
        bg_.init(eng, node);
        rtp_port_ = 6000;
        eng.udp_bind(node, rtp_port_, [this](const sim::UdpDelivery& d) { rtp_in(d); });
        eng.udp_bind(node, rtp_port_ + 1, [](const sim::UdpDelivery&) {});
        const SimTime icmp = static_cast<SimTime>(inst.cfg_double("icmp_period_s", 30) * kSecond);
        if (icmp > 0) eng.schedule_in(icmp / 3 + 1, [this, icmp] { icmp_cycle(icmp); });
        eng.schedule_in(kSecond, [this] { bg_.nd_noise(); });
        eng.schedule_in(300 * kSecond, [this] { nd_cycle(); });
        eng.schedule_in(2 * kSecond + static_cast<SimTime>(rng_.uniform() * kSecond),
                        [this] { attach(); });
        eng.log(node, "consumer-up", stream_);
    }

    std::uint64_t rtp_received() const { return rtp_received_; }

private:
    void icmp_cycle(SimTime period) {
        bg_.icmp_gateway();
        eng_->schedule_in(period, [this, period] { icmp_cycle(period); });
    }
    void nd_cycle() {
        bg_.nd_noise();
        eng_->schedule_in(300 * kSecond, [this] { nd_cycle(); });
    }
    void rtp_in(const sim::UdpDelivery&) { ++rtp_received_; }

    void attach() {
        dns_.resolve(server_name_, [this](std::optional<Ipv4> addr) {
            if (!addr) {
                eng_->schedule_in(5 * kSecond, [this] { attach(); });
                return;
            }
            server_ = *addr;
            conn_ = eng_->open_tcp(node_, server_, proto::kPortRtsp);
            if (!conn_) {
                eng_->schedule_in(5 * kSecond, [this] { attach(); });
                return;
            }
            conn_->on_connected = [this](TcpConn&) { send_request(proto::RtspMethod::Options); };
            conn_->on_data = [this](TcpConn&, const Bytes& b) { rtsp_response(b); };
            conn_->on_failed = [this](TcpConn&, const std::string&) {
                eng_->schedule_in(5 * kSecond, [this] { attach(); });
            };
        });
    }

    void send_request(proto::RtspMethod method) {
        proto::RtspMsg m;
        m.method = method;
        m.uri = "rtsp://" + server_name_ + "/" + stream_;
        m.cseq = cseq_++;
        m.session = session_;
        if (method == proto::RtspMethod::Setup)
            m.transport = "RTP/AVP;unicast;client_port=" + std::to_string(rtp_port_) + "-" +
                          std::to_string(rtp_port_ + 1);
        awaiting_ = method;
        eng_->tcp_send(*conn_, proto::encode(m));
    }

    void rtsp_response(const Bytes& b) {
        auto resp = proto::decode_rtsp(b);
        if (!resp || resp.value->is_request) return;
        switch (awaiting_) {
            case proto::RtspMethod::Options: send_request(proto::RtspMethod::Describe); break;
            case proto::RtspMethod::Describe: send_request(proto::RtspMethod::Setup); break;
            case proto::RtspMethod::Setup:
                session_ = resp.value->session;
                send_request(proto::RtspMethod::Play);
                break;
            case proto::RtspMethod::Play: {
                attached_ = true;
                eng_->log(node_, "attached", stream_);
                eng_->schedule_in(static_cast<SimTime>(attach_s_ * kSecond), [this] { detach(); });
                break;
            }
            case proto::RtspMethod::Teardown:
                attached_ = false;
                if (conn_) eng_->tcp_close(*conn_);
                eng_->log(node_, "detached", stream_);
                eng_->schedule_in(static_cast<SimTime>(detach_s_ * kSecond), [this] { attach(); });
                break;
        }
    }

    void detach() {
        if (!conn_ || !conn_->established()) {
            eng_->schedule_in(static_cast<SimTime>(detach_s_ * kSecond), [this] { attach(); });
            return;
        }
        send_request(proto::RtspMethod::Teardown);
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    std::string server_name_, stream_, session_;
    Ipv4 server_;
    double attach_s_ = 120, detach_s_ = 120;
    std::uint16_t rtp_port_ = 6000;
    std::uint32_t cseq_ = 1;
    proto::RtspMethod awaiting_ = proto::RtspMethod::Options;
    bool attached_ = false;
    std::uint64_t rtp_received_ = 0;
    TcpConnPtr conn_;
    Rng rng_;
    DnsClient dns_;
    BackgroundTraffic bg_;
};

// ---------------------------------------------------------------------------
// DNS / NTP services
// ---------------------------------------------------------------------------

class DnsServerBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        eng.udp_bind(node, proto::kPortDns, [this](const sim::UdpDelivery& d) { query(d); });
        bg_.init(eng, node);
        eng.schedule_in(kSecond, [this] { bg_.nd_noise(); });
        eng.schedule_in(300 * kSecond, [this] { nd_cycle(); });
        eng.log(node, "dns-up", std::to_string(eng.names().size()) + " names");
    }

private:
    void nd_cycle() {
        bg_.nd_noise();
        eng_->schedule_in(300 * kSecond, [this] { nd_cycle(); });
    }
    void query(const sim::UdpDelivery& d) {
        auto q = proto::decode_dns(d.payload);
        if (!q || q.value->is_response) return;
        proto::DnsMsg resp = *q.value;
        resp.is_response = true;
        auto addr = eng_->resolve_static(resp.qname);
        if (addr) {
            resp.rcode = 0;
            resp.answers = {{resp.qname, *addr, 300}};
            eng_->log(node_, "query",
                      resp.qname + " from " + d.src.str() + " -> " + addr->str());
        } else {
            resp.rcode = 3;  // NXDOMAIN
            eng_->log(node_, "query", resp.qname + " from " + d.src.str() + " -> NXDOMAIN");
        }
        eng_->send_udp(node_, d.src, d.sport, proto::encode(resp), d.prov, proto::kPortDns);
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    BackgroundTraffic bg_;
};

class NtpServerBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        eng.udp_bind(node, proto::kPortNtp, [this](const sim::UdpDelivery& d) { request(d); });
        bg_.init(eng, node);
        eng.schedule_in(kSecond, [this] { bg_.nd_noise(); });
        eng.schedule_in(300 * kSecond, [this] { nd_cycle(); });
        eng.log(node, "ntp-up", "");
    }

private:
    void nd_cycle() {
        bg_.nd_noise();
        eng_->schedule_in(300 * kSecond, [this] { nd_cycle(); });
    }
    void request(const sim::UdpDelivery& d) {
        auto req = proto::decode_ntp(d.payload);
        if (!req || req.value->mode != 3) return;
        proto::NtpMsg resp;
        resp.mode = 4;
        resp.stratum = 2;
        resp.origin_ts = req.value->transmit_ts;
        resp.receive_ts = proto::ntp_timestamp(eng_->now());
        resp.transmit_ts = proto::ntp_timestamp(eng_->now());
        eng_->send_udp(node_, d.src, d.sport, proto::encode(resp), d.prov, proto::kPortNtp);
    }

    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    BackgroundTraffic bg_;
};

// Synthetic CPU benchmark: completes fixed-cost ops back to back through
// the node's serialized CPU; score = ops per second.
class CpuBenchmarkBehavior : public sim::Behavior {
public:
    void start(Engine& eng, std::size_t node) override {
        eng_ = &eng;
        node_ = node;
        run_op();
    }
    std::uint64_t ops() const { return ops_; }

private:
    void run_op() {
        eng_->deliver_app(node_, [this] {
            ++ops_;
            run_op();
        });
    }
    Engine* eng_ = nullptr;
    std::size_t node_ = 0;
    std::uint64_t ops_ = 0;
};

// ---------------------------------------------------------------------------
// Factory for benign behaviors (threat behaviors live in `threats`)
// ---------------------------------------------------------------------------

inline std::unique_ptr<sim::Behavior> make_behavior(const std::string& behavior_id) {
    if (behavior_id == "mqtt-telemetry") return std::make_unique<MqttDeviceBehavior>();
    if (behavior_id == "mqtt-broker") return std::make_unique<MqttBrokerBehavior>();
    if (behavior_id == "coap-server") return std::make_unique<CoapServerBehavior>();
    if (behavior_id == "coap-poller") return std::make_unique<CoapPollerBehavior>();
    if (behavior_id == "camera") return std::make_unique<CameraBehavior>();
    if (behavior_id == "stream-server") return std::make_unique<StreamServerBehavior>();
    if (behavior_id == "stream-consumer") return std::make_unique<StreamConsumerBehavior>();
    if (behavior_id == "dns-server") return std::make_unique<DnsServerBehavior>();
    if (behavior_id == "ntp-server") return std::make_unique<NtpServerBehavior>();
    if (behavior_id == "cpu-benchmark") return std::make_unique<CpuBenchmarkBehavior>();
    return nullptr;
}

}  // namespace gotham::devices
