#pragma once

// Scenario graph: device templates, node instantiation, links, addressing
// and route computation, plus the canonical Gotham city preset (100 devices,
// 30 switches, 10 routers).

#include <gotham/linkshape.hpp>

#include <json.hpp>

#include <map>
#include <set>

namespace gotham::topology {

enum class NodeKind { IotDevice, CloudService, Attacker, Switch, Router };

inline const char* kind_str(NodeKind k) {
    switch (k) {
        case NodeKind::IotDevice: return "iot-device";
        case NodeKind::CloudService: return "cloud-service";
        case NodeKind::Attacker: return "attacker";
        case NodeKind::Switch: return "switch";
        case NodeKind::Router: return "router";
    }
    return "?";
}

inline std::optional<NodeKind> parse_kind(const std::string& s) {
    for (auto k : {NodeKind::IotDevice, NodeKind::CloudService, NodeKind::Attacker,
                   NodeKind::Switch, NodeKind::Router})
        if (s == kind_str(k)) return k;
    return std::nullopt;
}

struct NodeResources {
    double cpu_share = 1.0;
    std::uint32_t memory_mb = 64;
    bool operator==(const NodeResources&) const = default;
};

using ConfigMap = std::map<std::string, std::string>;

struct NodeTemplate {
    std::string template_id;
    NodeKind kind = NodeKind::IotDevice;
    std::string behavior_id;
    ConfigMap default_config;
    NodeResources default_resources;
    bool operator==(const NodeTemplate&) const = default;
};

struct Interface {
    std::string iface_id;
    Mac mac;
    Ipv4 ipv4;
    int prefix_len = 24;
    std::optional<Ipv4> gateway;
    bool operator==(const Interface&) const = default;

    Prefix subnet() const { return Prefix{ipv4, prefix_len}.canonical(); }
};

struct NodeInstance {
    std::string node_id;
    std::string template_id;
    std::vector<Interface> interfaces;
    ConfigMap config;
    NodeResources resources;
    std::optional<std::pair<std::string, std::string>> vulnerable_telnet;
    bool operator==(const NodeInstance&) const = default;

    const Interface& iface0() const { return interfaces.at(0); }
    std::string cfg(const std::string& key, const std::string& dflt = "") const {
        auto it = config.find(key);
        return it == config.end() ? dflt : it->second;
    }
    std::int64_t cfg_int(const std::string& key, std::int64_t dflt) const {
        auto it = config.find(key);
        return it == config.end() ? dflt : std::strtoll(it->second.c_str(), nullptr, 10);
    }
    double cfg_double(const std::string& key, double dflt) const {
        auto it = config.find(key);
        return it == config.end() ? dflt : std::strtod(it->second.c_str(), nullptr);
    }
    bool cfg_bool(const std::string& key, bool dflt = false) const {
        auto it = config.find(key);
        if (it == config.end()) return dflt;
        return it->second == "true" || it->second == "1";
    }
};

struct Endpoint {
    std::string node_id;
    std::string iface_id;
    bool operator==(const Endpoint&) const = default;
};

struct Link {
    std::string link_id;
    Endpoint a, b;
    linkshape::QosProfile qos_ab, qos_ba;
    bool capture_enabled = false;
    bool operator==(const Link&) const = default;
};

struct Subnet {
    Prefix prefix;
    std::string description;
    bool operator==(const Subnet&) const = default;
};

struct Topology {
    std::vector<NodeTemplate> templates;
    std::vector<NodeInstance> nodes;
    std::vector<Link> links;
    std::vector<Subnet> subnets;
    Prefix public_range{Ipv4(192, 168, 0, 0), 16};

    bool operator==(const Topology&) const = default;

    const NodeTemplate* find_template(const std::string& id) const {
        for (const auto& t : templates)
            if (t.template_id == id) return &t;
        return nullptr;
    }
    const NodeInstance* find_node(const std::string& id) const {
        for (const auto& n : nodes)
            if (n.node_id == id) return &n;
        return nullptr;
    }
    NodeInstance* find_node(const std::string& id) {
        for (auto& n : nodes)
            if (n.node_id == id) return &n;
        return nullptr;
    }
    const Link* find_link(const std::string& id) const {
        for (const auto& l : links)
            if (l.link_id == id) return &l;
        return nullptr;
    }
    Link* find_link(const std::string& id) {
        for (auto& l : links)
            if (l.link_id == id) return &l;
        return nullptr;
    }
    const NodeTemplate& template_of(const NodeInstance& n) const {
        const auto* t = find_template(n.template_id);
        if (!t) throw Error("unknown template: " + n.template_id);
        return *t;
    }
    NodeKind kind_of(const NodeInstance& n) const { return template_of(n).kind; }
    const NodeInstance* node_by_addr(Ipv4 a) const {
        for (const auto& n : nodes)
            for (const auto& i : n.interfaces)
                if (i.ipv4 == a) return &n;
        return nullptr;
    }

    // Instantiates a node from a template. Template defaults merge with
    // overrides (override wins); node_id = template_id + ordinal.
    NodeInstance& instantiate_node(const std::string& template_id, const ConfigMap& overrides,
                                   Interface addr) {
        const auto* tpl = find_template(template_id);
        if (!tpl) throw Error("unknown template: " + template_id);
        for (const auto& [k, v] : overrides)
            if (!tpl->default_config.count(k))
                throw Error("malformed override key '" + k + "' for template " + template_id);
        if (tpl->kind != NodeKind::Switch && node_by_addr(addr.ipv4))
            throw Error("address collision: " + addr.ipv4.str());
        int ordinal = 1;
        for (const auto& n : nodes)
            if (n.template_id == template_id) ++ordinal;
        NodeInstance inst;
        inst.node_id = template_id + "-" + std::to_string(ordinal);
        inst.template_id = template_id;
        inst.config = tpl->default_config;
        for (const auto& [k, v] : overrides) inst.config[k] = v;
        inst.resources = tpl->default_resources;
        if (addr.iface_id.empty()) addr.iface_id = "eth0";
        if (addr.mac == Mac{})
            addr.mac = Mac::local(static_cast<std::uint32_t>(nodes.size() + 1), 0);
        inst.interfaces.push_back(addr);
        nodes.push_back(std::move(inst));
        return nodes.back();
    }

    Link& connect(const std::string& node_a, const std::string& iface_a, const std::string& node_b,
                  const std::string& iface_b) {
        Link l;
        l.link_id = node_a + "--" + node_b;
        int n = 0;
        for (const auto& existing : links)
            if (starts_with(existing.link_id, l.link_id)) ++n;
        if (n > 0) l.link_id += "#" + std::to_string(n + 1);
        l.a = {node_a, iface_a};
        l.b = {node_b, iface_b};
        links.push_back(std::move(l));
        return links.back();
    }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string code;     // duplicate-ip, dangling-endpoint, ...
    std::string message;
    bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

inline ValidationReport validate_topology(const Topology& t) {
    ValidationReport rep;
    auto add = [&](const std::string& code, const std::string& msg) {
        rep.push_back({code, msg});
    };

    std::map<std::uint32_t, std::string> ips;
    std::map<Mac, std::string> macs;
    std::set<std::string> node_ids;
    for (const auto& n : t.nodes) {
        if (!node_ids.insert(n.node_id).second) add("duplicate-node-id", n.node_id);
        const auto* tpl = t.find_template(n.template_id);
        if (!tpl) {
            add("unknown-template", n.node_id + " -> " + n.template_id);
            continue;
        }
        if (tpl->kind != NodeKind::Switch && tpl->kind != NodeKind::Router &&
            tpl->behavior_id.empty())
            add("missing-behavior", n.template_id);
        for (const auto& i : n.interfaces) {
            if (tpl->kind != NodeKind::Switch) {
                auto [it, fresh] = ips.emplace(i.ipv4.v, n.node_id);
                if (!fresh)
                    add("duplicate-ip", i.ipv4.str() + " on " + it->second + " and " + n.node_id);
            }
            auto [mit, mfresh] = macs.emplace(i.mac, n.node_id);
            if (!mfresh)
                add("duplicate-mac", i.mac.str() + " on " + mit->second + " and " + n.node_id);
        }
        switch (tpl->kind) {
            case NodeKind::IotDevice:
            case NodeKind::CloudService:
            case NodeKind::Attacker:
                if (n.interfaces.size() != 1)
                    add("multi-homed-device", n.node_id + " has " +
                                                  std::to_string(n.interfaces.size()) +
                                                  " interfaces");
                break;
            default: break;
        }
        if (n.vulnerable_telnet && tpl->kind != NodeKind::IotDevice)
            add("vulnerable-non-iot", n.node_id);
        if (n.resources.cpu_share <= 0 || n.resources.cpu_share > 1.0)
            add("bad-cpu-share", n.node_id);
        if (n.resources.memory_mb < 1) add("bad-memory", n.node_id);
    }

    std::map<std::string, int> switch_ports;
    std::set<std::string> link_ids;
    for (const auto& l : t.links) {
        if (!link_ids.insert(l.link_id).second) add("duplicate-link-id", l.link_id);
        for (const auto* ep : {&l.a, &l.b}) {
            const auto* n = t.find_node(ep->node_id);
            if (!n) {
                add("dangling-endpoint", l.link_id + " -> " + ep->node_id);
                continue;
            }
            bool found = false;
            for (const auto& i : n->interfaces) found |= i.iface_id == ep->iface_id;
            if (!found) add("dangling-endpoint", l.link_id + " -> " + ep->node_id + ":" + ep->iface_id);
            if (t.find_template(n->template_id) && t.kind_of(*n) == NodeKind::Switch)
                switch_ports[n->node_id]++;
        }
        if (l.a.node_id == l.b.node_id && l.a.iface_id == l.b.iface_id)
            add("self-loop", l.link_id);
        try {
            l.qos_ab.validate();
            l.qos_ba.validate();
        } catch (const Error& e) {
            add("bad-qos", l.link_id + ": " + e.what());
        }
    }
    for (const auto& [sw, ports] : switch_ports)
        if (ports > 16) add("switch-port-overflow", sw + " has " + std::to_string(ports));

    // Connectivity over non-isolated nodes.
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& l : t.links) {
        if (!t.find_node(l.a.node_id) || !t.find_node(l.b.node_id)) continue;
        adj[l.a.node_id].push_back(l.b.node_id);
        adj[l.b.node_id].push_back(l.a.node_id);
    }
    if (!adj.empty()) {
        std::set<std::string> seen;
        std::vector<std::string> stack{adj.begin()->first};
        while (!stack.empty()) {
            auto cur = stack.back();
            stack.pop_back();
            if (!seen.insert(cur).second) continue;
            for (const auto& nb : adj[cur]) stack.push_back(nb);
        }
        for (const auto& [node, _] : adj)
            if (!seen.count(node)) add("disconnected-node", node);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Routing
// ---------------------------------------------------------------------------

struct RouteEntry {
    Prefix dest;
    std::optional<Ipv4> next_hop;  // absent = directly connected
    std::string out_iface;
    bool operator==(const RouteEntry&) const = default;
};

enum class RoutingMode { Static, Dynamic };

struct RoutingTable {
    std::string router_id;
    RoutingMode mode = RoutingMode::Static;
    std::vector<RouteEntry> entries;

    const RouteEntry* lookup(Ipv4 dst) const {
        const RouteEntry* best = nullptr;
        for (const auto& e : entries)
            if (e.dest.contains(dst) && (!best || e.dest.len > best->dest.len)) best = &e;
        return best;
    }
};

// Shortest-path routes over the router adjacency graph (routers sharing a
// subnet are adjacent; unit cost; lowest-router-id tiebreak). Dynamic
// routers get per-subnet routes, static routers get connected subnets plus
// a default route to their backbone uplink.
inline std::vector<RoutingTable> compute_routes(const Topology& t) {
    struct RouterInfo {
        const NodeInstance* node;
        RoutingMode mode;
    };
    std::vector<RouterInfo> routers;
    for (const auto& n : t.nodes)
        if (t.kind_of(n) == NodeKind::Router)
            routers.push_back(
                {&n, n.cfg("routing") == "dynamic" ? RoutingMode::Dynamic : RoutingMode::Static});
    std::sort(routers.begin(), routers.end(),
              [](const auto& a, const auto& b) { return a.node->node_id < b.node->node_id; });

    // subnet -> attached routers (iface + index into routers)
    std::map<Prefix, std::vector<std::pair<std::size_t, const Interface*>>> subnet_routers;
    for (std::size_t r = 0; r < routers.size(); ++r)
        for (const auto& i : routers[r].node->interfaces)
            subnet_routers[i.subnet()].push_back({r, &i});

    // adjacency, sorted by neighbor id for deterministic tiebreaks
    std::vector<std::vector<std::size_t>> adj(routers.size());
    for (const auto& [prefix, attached] : subnet_routers)
        for (const auto& [r1, i1] : attached)
            for (const auto& [r2, i2] : attached)
                if (r1 != r2) adj[r1].push_back(r2);
    for (auto& v : adj) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }

    // connectivity check over the router graph
    if (!routers.empty()) {
        std::vector<bool> seen(routers.size(), false);
        std::vector<std::size_t> stack{0};
        while (!stack.empty()) {
            auto cur = stack.back();
            stack.pop_back();
            if (seen[cur]) continue;
            seen[cur] = true;
            for (auto nb : adj[cur]) stack.push_back(nb);
        }
        for (std::size_t r = 0; r < routers.size(); ++r)
            if (!seen[r]) throw Error("disconnected router graph at " + routers[r].node->node_id);
    }

    // all destination subnets
    std::set<Prefix> all_subnets;
    for (const auto& n : t.nodes)
        if (t.kind_of(n) != NodeKind::Switch)
            for (const auto& i : n.interfaces) all_subnets.insert(i.subnet());

    auto iface_on = [&](std::size_t r, const Prefix& p) -> const Interface* {
        for (const auto& i : routers[r].node->interfaces)
            if (i.subnet() == p) return &i;
        return nullptr;
    };

    std::vector<RoutingTable> tables;
    for (std::size_t r = 0; r < routers.size(); ++r) {
        RoutingTable rt;
        rt.router_id = routers[r].node->node_id;
        rt.mode = routers[r].mode;
        // connected routes first
        for (const auto& i : routers[r].node->interfaces)
            rt.entries.push_back({i.subnet(), std::nullopt, i.iface_id});

        if (routers[r].mode == RoutingMode::Dynamic) {
            // BFS from r; parent choice prefers lower-id routers (adj sorted).
            std::vector<int> dist(routers.size(), -1);
            std::vector<std::size_t> first_hop(routers.size(), SIZE_MAX);
            std::vector<std::size_t> queue{r};
            dist[r] = 0;
            for (std::size_t qi = 0; qi < queue.size(); ++qi) {
                auto cur = queue[qi];
                for (auto nb : adj[cur]) {
                    if (dist[nb] != -1) continue;
                    dist[nb] = dist[cur] + 1;
                    first_hop[nb] = cur == r ? nb : first_hop[cur];
                    queue.push_back(nb);
                }
            }
            for (const auto& subnet : all_subnets) {
                if (iface_on(r, subnet)) continue;  // connected already
                auto it = subnet_routers.find(subnet);
                if (it == subnet_routers.end()) continue;  // no router serves it
                // nearest attached router, lowest id on ties (routers sorted)
                std::size_t best = SIZE_MAX;
                for (const auto& [cand, _] : it->second) {
                    if (dist[cand] < 0) continue;
                    if (best == SIZE_MAX || dist[cand] < dist[best]) best = cand;
                }
                if (best == SIZE_MAX) continue;
                std::size_t hop = best == r ? r : first_hop[best];
                if (hop == SIZE_MAX) continue;
                // next-hop address: the hop router's iface on a subnet we share
                for (const auto& i : routers[r].node->interfaces) {
                    const Interface* peer = iface_on(hop, i.subnet());
                    if (peer) {
                        rt.entries.push_back({subnet, peer->ipv4, i.iface_id});
                        break;
                    }
                }
            }
        } else {
            // static: default route to the backbone uplink (the dynamic
            // router sharing a subnet with us)
            for (const auto& i : routers[r].node->interfaces) {
                auto it = subnet_routers.find(i.subnet());
                if (it == subnet_routers.end()) continue;
                const Interface* up = nullptr;
                for (const auto& [cand, ci] : it->second)
                    if (cand != r && routers[cand].mode == RoutingMode::Dynamic) up = ci;
                if (up) {
                    rt.entries.push_back({Prefix{Ipv4(0), 0}, up->ipv4, i.iface_id});
                    break;
                }
            }
        }
        tables.push_back(std::move(rt));
    }
    return tables;
}

// ---------------------------------------------------------------------------
// DNS name table: every non-network node resolves as <node_id>.gotham;
// cloud services also get a <node_id>.gotham.cloud alias.
// ---------------------------------------------------------------------------

inline std::map<std::string, Ipv4> name_table(const Topology& t) {
    std::map<std::string, Ipv4> names;
    for (const auto& n : t.nodes) {
        auto kind = t.kind_of(n);
        if (kind == NodeKind::Switch || kind == NodeKind::Router) continue;
        if (n.interfaces.empty()) continue;
        names[n.node_id + ".gotham"] = n.iface0().ipv4;
        if (kind == NodeKind::CloudService) names[n.node_id + ".gotham.cloud"] = n.iface0().ipv4;
    }
    return names;
}

// ---------------------------------------------------------------------------
// Template catalog (Tables 1-3 device models)
// ---------------------------------------------------------------------------

inline const std::vector<std::pair<std::string, std::string>>& mirai_credential_list() {
    static const std::vector<std::pair<std::string, std::string>> creds = {
        {"root", "xc3511"},   {"root", "vizxv"},    {"admin", "admin"}, {"root", "admin"},
        {"root", "888888"},   {"root", "54321"},    {"support", "support"},
        {"root", "default"},  {"admin", "password"}, {"root", "root"},  {"user", "user"},
        {"admin", "1234"},
    };
    return creds;
}

// Username/password pairs accepted by the authenticating broker.
inline const std::vector<std::pair<std::string, std::string>>& broker_credentials() {
    static const std::vector<std::pair<std::string, std::string>> creds = {
        {"iotuser1", "gotham-metrics"},
        {"iotuser2", "gotham-telemetry"},
    };
    return creds;
}

inline std::vector<NodeTemplate> default_catalog() {
    std::vector<NodeTemplate> cat;
    auto add = [&](std::string id, NodeKind kind, std::string behavior, ConfigMap cfg,
                   NodeResources res) {
        cat.push_back({std::move(id), kind, std::move(behavior), std::move(cfg), res});
    };
    const NodeResources iot{1.0, 64};
    const NodeResources cloud{1.0, 512};
    const NodeResources attacker{1.0, 256};

    // MQTT telemetry devices (Table 1). Periods are instance-tunable.
    auto mqtt_dev = [&](std::string id, ConfigMap extra) {
        ConfigMap cfg = {
            {"broker", ""},          {"tls", "false"},         {"username", ""},
            {"password", ""},        {"qos", "0"},             {"period_s", "10"},
            {"period_std_s", "1"},   {"active_s", "0"},        {"inactive_s", "0"},
            {"connection", "open-close"},
            {"dns_period_s", "300"}, {"ntp_period_s", "60"},   {"icmp_period_s", "30"},
        };
        for (auto& [k, v] : extra) cfg[k] = v;
        add(std::move(id), NodeKind::IotDevice, "mqtt-telemetry", std::move(cfg), iot);
    };
    mqtt_dev("air-quality", {{"format", "xml"}, {"record_bytes", "1190"}, {"sensors", "15"},
                             {"topics", "1"}});
    mqtt_dev("building-monitor", {{"format", "json"}, {"record_bytes", "100"}, {"sensors", "27"},
                                  {"topics", "11"}});
    mqtt_dev("cooler-motor",
             {{"format", "base64"}, {"record_bytes", "56"}, {"sensors", "5"}, {"topics", "1"},
              {"connection", "always-open"}, {"active_s", "60"}, {"inactive_s", "60"}});
    mqtt_dev("domotic-monitor", {{"format", "xml"}, {"record_bytes", "1743"}, {"sensors", "24"},
                                 {"topics", "1"}});
    mqtt_dev("hydraulic-system", {{"format", "json-base64"}, {"record_bytes", "7678"},
                                  {"sensors", "17"}, {"topics", "1"},
                                  {"connection", "always-open"}});
    mqtt_dev("predictive-maintenance", {{"format", "json"}, {"record_bytes", "632"},
                                        {"sensors", "14"}, {"topics", "3"}});

    // CoAP servers (Table 1)
    add("city-power", NodeKind::IotDevice, "coap-server",
        {{"resources", "9"}, {"resource_bytes", "10"}, {"dtls", "false"},
         {"icmp_period_s", "30"}},
        iot);
    add("combined-cycle", NodeKind::IotDevice, "coap-server",
        {{"resources", "5"}, {"resource_bytes", "10"}, {"dtls", "false"},
         {"icmp_period_s", "30"}},
        iot);

    // Streaming devices (Table 1)
    add("ip-camera", NodeKind::IotDevice, "camera",
        {{"stream_server", ""}, {"stream_name", ""}, {"bitrate_bps", "1800000"},
         {"packet_bytes", "1400"}, {"fps", "15"}, {"dns_period_s", "300"},
         {"icmp_period_s", "30"}},
        iot);
    add("ip-camera-consumer", NodeKind::IotDevice, "stream-consumer",
        {{"stream_server", ""}, {"stream_name", ""}, {"attach_s", "120"}, {"detach_s", "120"},
         {"dns_period_s", "300"}, {"icmp_period_s", "30"}},
        iot);

    // Cloud services (Table 3)
    add("mqtt-broker", NodeKind::CloudService, "mqtt-broker",
        {{"auth", "open"}, {"tls", "false"}, {"keepalive_s", "60"}}, cloud);
    add("coap-client", NodeKind::CloudService, "coap-poller",
        {{"targets", ""}, {"dtls", "false"}, {"poll_period_s", "10"}, {"icmp_period_s", "30"}},
        cloud);
    add("stream-server", NodeKind::CloudService, "stream-server", {}, cloud);
    add("dns-server", NodeKind::CloudService, "dns-server", {}, cloud);
    add("ntp-server", NodeKind::CloudService, "ntp-server", {}, cloud);

    // Threat actor nodes (Table 1, bottom)
    add("mirai-bot", NodeKind::Attacker, "mirai-bot",
        {{"cnc", "mirai-cnc-1.gotham"}, {"report", "mirai-scan-listener-1.gotham"},
         {"scan_rate_pps", "20"}, {"keepalive_s", "30"}, {"scan_alt_ratio", "10"}},
        iot);
    add("mirai-cnc", NodeKind::Attacker, "mirai-cnc", {}, attacker);
    add("mirai-scan-listener", NodeKind::Attacker, "mirai-scan-listener",
        {{"loader", "mirai-loader-1.gotham"}}, attacker);
    add("mirai-loader", NodeKind::Attacker, "mirai-loader",
        {{"download", "mirai-download-server-1.gotham"}}, attacker);
    add("mirai-download-server", NodeKind::Attacker, "http-file-server",
        {{"file_bytes", "61440"}}, attacker);
    add("merlin-cnc", NodeKind::Attacker, "merlin-cnc",
        {{"beacon_proto", "http1"}, {"beacon_period_s", "30"}}, attacker);
    add("scanner", NodeKind::Attacker, "scanner", {}, attacker);
    add("mqtt-attacker", NodeKind::Attacker, "mqtt-attacker", {}, attacker);
    add("coap-attacker", NodeKind::Attacker, "coap-attacker", {}, attacker);
    add("metasploit", NodeKind::Attacker, "metasploit", {}, attacker);

    // Synthetic CPU benchmark target, used by resource emulation checks.
    add("cpu-benchmark", NodeKind::IotDevice, "cpu-benchmark", {{"op_base_us", "50"}}, iot);

    // Network gear (Table 2)
    add("switch", NodeKind::Switch, "", {}, NodeResources{1.0, 128});
    add("router-backbone", NodeKind::Router, "", {{"routing", "dynamic"}},
        NodeResources{1.0, 512});
    add("router-edge", NodeKind::Router, "", {{"routing", "static"}, {"proxy_arp", "true"}},
        NodeResources{1.0, 512});
    return cat;
}

// ---------------------------------------------------------------------------
// Gotham preset
// ---------------------------------------------------------------------------

namespace detail {

class GothamBuilder {
public:
    Topology t;
    std::uint32_t mac_ordinal = 1;

    GothamBuilder() { t.templates = default_catalog(); }

    Mac next_mac() { return Mac::local(mac_ordinal++); }

    NodeInstance& router(const std::string& id, bool backbone) {
        NodeInstance inst;
        inst.node_id = id;
        inst.template_id = backbone ? "router-backbone" : "router-edge";
        inst.config = t.find_template(inst.template_id)->default_config;
        inst.resources = t.find_template(inst.template_id)->default_resources;
        t.nodes.push_back(std::move(inst));
        return t.nodes.back();
    }
    NodeInstance& sw(const std::string& id) {
        NodeInstance inst;
        inst.node_id = id;
        inst.template_id = "switch";
        inst.resources = t.find_template("switch")->default_resources;
        t.nodes.push_back(std::move(inst));
        return t.nodes.back();
    }
    void router_iface(const std::string& router_id, const std::string& iface, Ipv4 ip,
                      int prefix) {
        t.find_node(router_id)->interfaces.push_back({iface, next_mac(), ip, prefix, std::nullopt});
    }
    // Switches get one L2 port per link; ports carry no addresses.
    std::string sw_port(const std::string& sw_id) {
        auto* n = t.find_node(sw_id);
        std::string pid = "p" + std::to_string(n->interfaces.size());
        n->interfaces.push_back({pid, next_mac(), Ipv4(0), 0, std::nullopt});
        return pid;
    }
    void wire_to_switch(const std::string& sw_id, const std::string& node_id,
                        const std::string& iface) {
        t.connect(node_id, iface, sw_id, sw_port(sw_id));
    }
    void wire_switches(const std::string& a, const std::string& b) {
        t.connect(a, sw_port(a), b, sw_port(b));
    }
    NodeInstance& device(const std::string& tpl, const std::string& sw_id, Ipv4 ip, Ipv4 gw,
                         const ConfigMap& overrides) {
        Interface addr{"eth0", next_mac(), ip, 24, gw};
        auto& inst = t.instantiate_node(tpl, overrides, addr);
        wire_to_switch(sw_id, inst.node_id, "eth0");
        return inst;
    }
    void subnet(Ipv4 base, const std::string& desc) {
        t.subnets.push_back({Prefix{base, 24}.canonical(), desc});
    }
};

}  // namespace detail

// The canonical scenario: Fig. 3 population over a deterministic /24 plan
// carved from 192.168.0.0/16. 100 devices, 30 switches, 10 routers.
inline Topology build_gotham() {
    detail::GothamBuilder b;
    auto ip = [](unsigned c, unsigned d) { return Ipv4(192, 168, c, d); };

    // Routers
    for (const auto& id : {"RCLOUD", "RCITY", "RTHREAT"}) b.router(id, true);
    for (const auto& id : {"RC1", "RC2", "RC3", "RC4"}) b.router(id, false);
    for (const auto& id : {"RT1", "RT2", "RT3"}) b.router(id, false);

    // Backbone LAN: the three dynamic routers meet on SBACKBONE.
    b.subnet(ip(0, 0), "backbone");
    b.sw("SBACKBONE");
    b.router_iface("RCLOUD", "eth0", ip(0, 1), 24);
    b.router_iface("RCITY", "eth0", ip(0, 2), 24);
    b.router_iface("RTHREAT", "eth0", ip(0, 3), 24);
    b.wire_to_switch("SBACKBONE", "RCLOUD", "eth0");
    b.wire_to_switch("SBACKBONE", "RCITY", "eth0");
    b.wire_to_switch("SBACKBONE", "RTHREAT", "eth0");

    // City and threat uplinks: point-to-point /24s.
    struct Uplink {
        const char* agg;   // backbone router
        const char* edge;  // edge router
        unsigned net;
    };
    const Uplink uplinks[] = {{"RCITY", "RC1", 2},   {"RCITY", "RC2", 3}, {"RCITY", "RC3", 4},
                              {"RCITY", "RC4", 5},   {"RTHREAT", "RT1", 6},
                              {"RTHREAT", "RT2", 7}, {"RTHREAT", "RT3", 8}};
    std::map<std::string, int> rifc{{"RCITY", 1}, {"RTHREAT", 1}};
    for (const auto& u : uplinks) {
        b.subnet(ip(u.net, 0), std::string(u.agg) + "-" + u.edge + " uplink");
        std::string agg_if = "eth" + std::to_string(rifc[u.agg]++);
        b.router_iface(u.agg, agg_if, ip(u.net, 1), 24);
        b.router_iface(u.edge, "eth0", ip(u.net, 2), 24);
        b.t.connect(u.agg, agg_if, u.edge, "eth0");
    }

    // Cloud layer: SCLOUD aggregates seven access switches.
    b.subnet(ip(1, 0), "cloud services");
    b.sw("SCLOUD");
    b.router_iface("RCLOUD", "eth1", ip(1, 1), 24);
    b.wire_to_switch("SCLOUD", "RCLOUD", "eth1");
    for (const auto& sw : {"SCLOUD-BRK-A", "SCLOUD-BRK-B", "SCLOUD-DNS", "SCLOUD-NTP",
                           "SCLOUD-EXT", "SCLOUD-STREAM", "SCLOUD-COAP"}) {
        b.sw(sw);
        b.wire_switches("SCLOUD", sw);
    }
    Ipv4 cloud_gw = ip(1, 1);
    unsigned host = 10;
    for (int i = 0; i < 3; ++i)
        b.device("mqtt-broker", "SCLOUD-BRK-A", ip(1, host++), cloud_gw, {});
    b.device("mqtt-broker", "SCLOUD-BRK-B", ip(1, host++), cloud_gw, {{"auth", "userpass"}});
    b.device("mqtt-broker", "SCLOUD-BRK-B", ip(1, host++), cloud_gw,
             {{"auth", "tls"}, {"tls", "true"}});
    b.device("dns-server", "SCLOUD-DNS", ip(1, host++), cloud_gw, {});
    b.device("ntp-server", "SCLOUD-NTP", ip(1, host++), cloud_gw, {});
    b.device("mirai-bot", "SCLOUD-EXT", ip(1, host++), cloud_gw, {});
    for (int i = 0; i < 2; ++i)
        b.device("stream-server", "SCLOUD-STREAM", ip(1, host++), cloud_gw, {});
    b.device("coap-client", "SCLOUD-COAP", ip(1, host++), cloud_gw,
             {{"targets", "city-power-1.gotham:9"}});
    b.device("coap-client", "SCLOUD-COAP", ip(1, host++), cloud_gw,
             {{"targets",
               "combined-cycle-1.gotham:5,combined-cycle-2.gotham:5,combined-cycle-3.gotham:5,"
               "combined-cycle-4.gotham:5,combined-cycle-5.gotham:5,combined-cycle-6.gotham:5,"
               "combined-cycle-7.gotham:5,combined-cycle-8.gotham:5,combined-cycle-9.gotham:5,"
               "combined-cycle-10.gotham:5"}});
    b.device("coap-client", "SCLOUD-COAP", ip(1, host++), cloud_gw,
             {{"dtls", "true"},
              {"targets",
               "combined-cycle-11.gotham:5,combined-cycle-12.gotham:5,combined-cycle-13.gotham:5,"
               "combined-cycle-14.gotham:5,combined-cycle-15.gotham:5"}});

    // City zone LANs.
    auto city_lan = [&](const char* router, unsigned net, const char* agg,
                        std::initializer_list<const char*> access) {
        b.subnet(ip(net, 0), std::string(router) + " LAN");
        b.router_iface(router, "eth1", ip(net, 1), 24);
        b.sw(agg);
        b.wire_to_switch(agg, router, "eth1");
        for (const auto* sw : access) {
            b.sw(sw);
            b.wire_switches(agg, sw);
        }
    };

    // RC1: natural history museum
    city_lan("RC1", 10, "SRC1", {"SRC1-MON", "SRC1-CAM", "SRC1-CON"});
    host = 10;
    for (int i = 0; i < 5; ++i)
        b.device("building-monitor", "SRC1-MON", ip(10, host++), ip(10, 1),
                 {{"broker", "mqtt-broker-1.gotham"}});
    for (int i = 0; i < 2; ++i)
        b.device("ip-camera", "SRC1-CAM", ip(10, host++), ip(10, 1),
                 {{"stream_server", "stream-server-1.gotham"},
                  {"stream_name", "museum-cam-" + std::to_string(i + 1)},
                  {"fps", i == 0 ? "15" : "25"}});
    for (int i = 0; i < 2; ++i)
        b.device("ip-camera-consumer", "SRC1-CON", ip(10, host++), ip(10, 1),
                 {{"stream_server", "stream-server-1.gotham"},
                  {"stream_name", "museum-cam-" + std::to_string(i + 1)}});

    // RC2: Bristol neighborhood
    city_lan("RC2", 11, "SRC2", {"SRC2-DOM", "SRC2-CAM", "SRC2-ENV"});
    host = 10;
    for (int i = 0; i < 5; ++i)
        b.device("domotic-monitor", "SRC2-DOM", ip(11, host++), ip(11, 1),
                 {{"broker", "mqtt-broker-2.gotham"}});
    for (int i = 0; i < 2; ++i)
        b.device("ip-camera", "SRC2-CAM", ip(11, host++), ip(11, 1),
                 {{"stream_server", "stream-server-2.gotham"},
                  {"stream_name", "bristol-cam-" + std::to_string(i + 1)},
                  {"fps", i == 0 ? "15" : "25"}});
    b.device("air-quality", "SRC2-ENV", ip(11, host++), ip(11, 1),
             {{"broker", "mqtt-broker-2.gotham"}});
    b.device("city-power", "SRC2-ENV", ip(11, host++), ip(11, 1), {});

    // RC3: Rennington steel
    city_lan("RC3", 12, "SRC3", {"SRC3-COOL-A", "SRC3-COOL-B", "SRC3-PRED-A", "SRC3-PRED-B"});
    host = 10;
    const auto& bcreds = broker_credentials();
    for (int i = 0; i < 15; ++i) {
        ConfigMap cfg;
        if (i < 10) {
            cfg = {{"broker", "mqtt-broker-4.gotham"},
                   {"username", bcreds[0].first},
                   {"password", bcreds[0].second}};
        } else {
            cfg = {{"broker", "mqtt-broker-5.gotham"}, {"tls", "true"}};
        }
        b.device("cooler-motor", i < 8 ? "SRC3-COOL-A" : "SRC3-COOL-B", ip(12, host++), ip(12, 1),
                 cfg);
    }
    for (int i = 0; i < 15; ++i) {
        ConfigMap cfg;
        if (i < 10) {
            cfg = {{"broker", "mqtt-broker-4.gotham"},
                   {"username", bcreds[1].first},
                   {"password", bcreds[1].second}};
        } else {
            cfg = {{"broker", "mqtt-broker-5.gotham"}, {"tls", "true"}};
        }
        b.device("predictive-maintenance", i < 8 ? "SRC3-PRED-A" : "SRC3-PRED-B", ip(12, host++),
                 ip(12, 1), cfg);
    }

    // RC4: Gotham Light and Power
    city_lan("RC4", 13, "SRC4", {"SRC4-COMB-A", "SRC4-COMB-B", "SRC4-HYD-A", "SRC4-HYD-B"});
    host = 10;
    for (int i = 0; i < 15; ++i) {
        ConfigMap cfg;
        if (i >= 10) cfg["dtls"] = "true";
        b.device("combined-cycle", i < 8 ? "SRC4-COMB-A" : "SRC4-COMB-B", ip(13, host++),
                 ip(13, 1), cfg);
    }
    for (int i = 0; i < 15; ++i) {
        ConfigMap cfg;
        if (i < 10) {
            cfg = {{"broker", "mqtt-broker-3.gotham"}};
        } else {
            cfg = {{"broker", "mqtt-broker-5.gotham"}, {"tls", "true"}};
        }
        b.device("hydraulic-system", i < 8 ? "SRC4-HYD-A" : "SRC4-HYD-B", ip(13, host++),
                 ip(13, 1), cfg);
    }

    // Threat zone LANs.
    auto threat_lan = [&](const char* router, unsigned net, const char* sw) {
        b.subnet(ip(net, 0), std::string(router) + " LAN");
        b.router_iface(router, "eth1", ip(net, 1), 24);
        b.sw(sw);
        b.wire_to_switch(sw, router, "eth1");
    };
    threat_lan("RT1", 20, "SRT1");
    host = 10;
    b.device("mirai-cnc", "SRT1", ip(20, host++), ip(20, 1), {});
    b.device("mirai-scan-listener", "SRT1", ip(20, host++), ip(20, 1), {});
    b.device("mirai-loader", "SRT1", ip(20, host++), ip(20, 1), {});
    b.device("mirai-download-server", "SRT1", ip(20, host++), ip(20, 1), {});

    threat_lan("RT2", 21, "SRT2");
    b.device("merlin-cnc", "SRT2", ip(21, 10), ip(21, 1), {});

    threat_lan("RT3", 22, "SRT3");
    host = 10;
    b.device("scanner", "SRT3", ip(22, host++), ip(22, 1), {});
    b.device("mqtt-attacker", "SRT3", ip(22, host++), ip(22, 1), {});
    b.device("coap-attacker", "SRT3", ip(22, host++), ip(22, 1), {});
    b.device("metasploit", "SRT3", ip(22, host++), ip(22, 1), {});

    // Mirai victim provisioning: 24 edge nodes run telnet with credentials
    // from the brute-force table (10 cooler motors, 10 hydraulic systems,
    // 4 predictive maintenance).
    const auto& creds = mirai_credential_list();
    int vuln = 0;
    auto make_vulnerable = [&](const std::string& node_id) {
        b.t.find_node(node_id)->vulnerable_telnet = creds[vuln % creds.size()];
        ++vuln;
    };
    for (int i = 1; i <= 10; ++i) make_vulnerable("cooler-motor-" + std::to_string(i));
    for (int i = 1; i <= 10; ++i) make_vulnerable("hydraulic-system-" + std::to_string(i));
    for (int i = 1; i <= 4; ++i) make_vulnerable("predictive-maintenance-" + std::to_string(i));

    return b.t;
}

// ---------------------------------------------------------------------------
// Export / import (JSON, round-trips to an identical topology)
// ---------------------------------------------------------------------------

inline nlohmann::json qos_to_json(const linkshape::QosProfile& q) {
    nlohmann::json j = nlohmann::json::object();
    if (q.rate_bps) j["rate_bps"] = *q.rate_bps;
    if (q.bucket_bytes) j["bucket_bytes"] = q.bucket_bytes;
    if (q.delay_ms != 0) j["delay_ms"] = q.delay_ms;
    if (q.jitter_ms != 0) j["jitter_ms"] = q.jitter_ms;
    if (q.loss_pct != 0) j["loss_pct"] = q.loss_pct;
    if (q.corrupt_pct != 0) j["corrupt_pct"] = q.corrupt_pct;
    if (q.queue_bytes != 1500000) j["queue_bytes"] = q.queue_bytes;
    if (!q.filter.match_all()) j["filter"] = linkshape::print_filter(q.filter);
    return j;
}

inline linkshape::QosProfile qos_from_json(const nlohmann::json& j) {
    linkshape::QosProfile q;
    if (j.is_null()) return q;
    for (const auto& [key, val] : j.items()) {
        if (key == "rate_bps") q.rate_bps = val.get<std::uint64_t>();
        else if (key == "bucket_bytes") q.bucket_bytes = val.get<std::uint64_t>();
        else if (key == "delay_ms") q.delay_ms = val.get<double>();
        else if (key == "jitter_ms") q.jitter_ms = val.get<double>();
        else if (key == "loss_pct") q.loss_pct = val.get<double>();
        else if (key == "corrupt_pct") q.corrupt_pct = val.get<double>();
        else if (key == "queue_bytes") q.queue_bytes = val.get<std::uint64_t>();
        else if (key == "filter") q.filter = linkshape::parse_filter(val.get<std::string>());
        else throw Error("qos: unknown key '" + key + "'");
    }
    q.validate();
    return q;
}

inline nlohmann::json topology_to_json(const Topology& t) {
    nlohmann::json j;
    j["public_range"] = t.public_range.str();
    j["templates"] = nlohmann::json::array();
    for (const auto& tpl : t.templates) {
        nlohmann::json tj;
        tj["template_id"] = tpl.template_id;
        tj["kind"] = kind_str(tpl.kind);
        tj["behavior_id"] = tpl.behavior_id;
        tj["default_config"] = tpl.default_config;
        tj["default_resources"] = {{"cpu_share", tpl.default_resources.cpu_share},
                                   {"memory_mb", tpl.default_resources.memory_mb}};
        j["templates"].push_back(tj);
    }
    j["subnets"] = nlohmann::json::array();
    for (const auto& s : t.subnets)
        j["subnets"].push_back({{"prefix", s.prefix.str()}, {"description", s.description}});
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : t.nodes) {
        nlohmann::json nj;
        nj["node_id"] = n.node_id;
        nj["template_id"] = n.template_id;
        nj["interfaces"] = nlohmann::json::array();
        for (const auto& i : n.interfaces) {
            nlohmann::json ij;
            ij["iface_id"] = i.iface_id;
            ij["mac"] = i.mac.str();
            ij["ipv4"] = i.ipv4.str();
            ij["prefix_len"] = i.prefix_len;
            if (i.gateway) ij["gateway"] = i.gateway->str();
            nj["interfaces"].push_back(ij);
        }
        nj["config"] = n.config;
        nj["resources"] = {{"cpu_share", n.resources.cpu_share},
                           {"memory_mb", n.resources.memory_mb}};
        if (n.vulnerable_telnet)
            nj["vulnerable_telnet"] = {{"username", n.vulnerable_telnet->first},
                                       {"password", n.vulnerable_telnet->second}};
        j["nodes"].push_back(nj);
    }
    j["links"] = nlohmann::json::array();
    for (const auto& l : t.links) {
        nlohmann::json lj;
        lj["link_id"] = l.link_id;
        lj["a"] = {{"node", l.a.node_id}, {"iface", l.a.iface_id}};
        lj["b"] = {{"node", l.b.node_id}, {"iface", l.b.iface_id}};
        lj["qos_ab"] = qos_to_json(l.qos_ab);
        lj["qos_ba"] = qos_to_json(l.qos_ba);
        if (l.capture_enabled) lj["capture"] = true;
        j["links"].push_back(lj);
    }
    return j;
}

inline std::string export_topology(const Topology& t) { return topology_to_json(t).dump(2); }

inline Topology topology_from_json(const nlohmann::json& j) {
    Topology t;
    if (j.contains("public_range")) {
        auto p = Prefix::parse(j["public_range"].get<std::string>());
        if (!p) throw Error("topology: bad public_range");
        t.public_range = *p;
    }
    for (const auto& tj : j.value("templates", nlohmann::json::array())) {
        NodeTemplate tpl;
        tpl.template_id = tj.at("template_id").get<std::string>();
        auto kind = parse_kind(tj.at("kind").get<std::string>());
        if (!kind) throw Error("topology: bad kind in template " + tpl.template_id);
        tpl.kind = *kind;
        tpl.behavior_id = tj.value("behavior_id", "");
        const auto cfg = tj.value("default_config", nlohmann::json::object());
        for (const auto& [k, v] : cfg.items()) tpl.default_config[k] = v.get<std::string>();
        if (tj.contains("default_resources")) {
            tpl.default_resources.cpu_share = tj["default_resources"].value("cpu_share", 1.0);
            tpl.default_resources.memory_mb = tj["default_resources"].value("memory_mb", 64u);
        }
        t.templates.push_back(std::move(tpl));
    }
    for (const auto& sj : j.value("subnets", nlohmann::json::array())) {
        auto p = Prefix::parse(sj.at("prefix").get<std::string>());
        if (!p) throw Error("topology: bad subnet prefix");
        t.subnets.push_back({*p, sj.value("description", "")});
    }
    for (const auto& nj : j.value("nodes", nlohmann::json::array())) {
        NodeInstance n;
        n.node_id = nj.at("node_id").get<std::string>();
        n.template_id = nj.at("template_id").get<std::string>();
        for (const auto& ij : nj.value("interfaces", nlohmann::json::array())) {
            Interface i;
            i.iface_id = ij.at("iface_id").get<std::string>();
            auto mac = Mac::parse(ij.at("mac").get<std::string>());
            auto addr = Ipv4::parse(ij.at("ipv4").get<std::string>());
            if (!mac || !addr) throw Error("topology: bad interface on " + n.node_id);
            i.mac = *mac;
            i.ipv4 = *addr;
            i.prefix_len = ij.value("prefix_len", 24);
            if (ij.contains("gateway")) {
                auto gw = Ipv4::parse(ij["gateway"].get<std::string>());
                if (!gw) throw Error("topology: bad gateway on " + n.node_id);
                i.gateway = *gw;
            }
            n.interfaces.push_back(i);
        }
        const auto cfg = nj.value("config", nlohmann::json::object());
        for (const auto& [k, v] : cfg.items()) n.config[k] = v.get<std::string>();
        if (nj.contains("resources")) {
            n.resources.cpu_share = nj["resources"].value("cpu_share", 1.0);
            n.resources.memory_mb = nj["resources"].value("memory_mb", 64u);
        }
        if (nj.contains("vulnerable_telnet"))
            n.vulnerable_telnet = {nj["vulnerable_telnet"].at("username").get<std::string>(),
                                   nj["vulnerable_telnet"].at("password").get<std::string>()};
        t.nodes.push_back(std::move(n));
    }
    for (const auto& lj : j.value("links", nlohmann::json::array())) {
        Link l;
        l.link_id = lj.at("link_id").get<std::string>();
        l.a = {lj.at("a").at("node").get<std::string>(), lj.at("a").at("iface").get<std::string>()};
        l.b = {lj.at("b").at("node").get<std::string>(), lj.at("b").at("iface").get<std::string>()};
        l.qos_ab = qos_from_json(lj.value("qos_ab", nlohmann::json::object()));
        l.qos_ba = qos_from_json(lj.value("qos_ba", nlohmann::json::object()));
        l.capture_enabled = lj.value("capture", false);
        t.links.push_back(std::move(l));
    }
    return t;
}

inline Topology import_topology(const std::string& doc) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(doc);
    } catch (const std::exception& e) {
        throw Error(std::string("topology: parse error: ") + e.what());
    }
    return topology_from_json(j);
}

}  // namespace gotham::topology
