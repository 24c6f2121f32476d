#pragma once

// Shared helpers for the test suites: small hand-built topologies and
// capture conveniences.

#include <gotham/scenario.hpp>

namespace testutil {

using namespace gotham;

// A single-subnet LAN: one switch, hosts from the given templates wired to
// it, addressed 192.168.50.10+ with no router.
inline topology::Topology make_lan(
    const std::vector<std::pair<std::string, topology::ConfigMap>>& hosts) {
    topology::Topology t;
    t.templates = topology::default_catalog();
    topology::NodeInstance sw;
    sw.node_id = "S1";
    sw.template_id = "switch";
    sw.resources = t.find_template("switch")->default_resources;
    t.nodes.push_back(sw);
    unsigned host_octet = 10;
    std::uint32_t mac = 1;
    for (const auto& [tpl, cfg] : hosts) {
        topology::Interface addr{"eth0", Mac::local(mac++), Ipv4(192, 168, 50, host_octet++), 24,
                                 std::nullopt};
        auto& inst = t.instantiate_node(tpl, cfg, addr);
        auto* s = t.find_node("S1");
        std::string port = "p" + std::to_string(s->interfaces.size());
        s->interfaces.push_back({port, Mac::local(0x1000 + mac++), Ipv4(0), 0, std::nullopt});
        t.connect(inst.node_id, "eth0", "S1", port);
    }
    t.subnets.push_back({Prefix{Ipv4(192, 168, 50, 0), 24}, "test lan"});
    return t;
}

// Two LANs joined by one router: hosts_a on 192.168.60.0/24 via RA,
// hosts_b on 192.168.61.0/24.
inline topology::Topology make_routed(
    const std::vector<std::pair<std::string, topology::ConfigMap>>& hosts_a,
    const std::vector<std::pair<std::string, topology::ConfigMap>>& hosts_b) {
    topology::Topology t;
    t.templates = topology::default_catalog();
    std::uint32_t mac = 1;
    auto add_switch = [&](const std::string& id) {
        topology::NodeInstance sw;
        sw.node_id = id;
        sw.template_id = "switch";
        sw.resources = t.find_template("switch")->default_resources;
        t.nodes.push_back(sw);
    };
    add_switch("SA");
    add_switch("SB");
    topology::NodeInstance router;
    router.node_id = "R1";
    router.template_id = "router-edge";
    router.config = t.find_template("router-edge")->default_config;
    router.config["routing"] = "dynamic";  // standalone router computes all routes
    router.resources = t.find_template("router-edge")->default_resources;
    router.interfaces.push_back({"eth0", Mac::local(mac++), Ipv4(192, 168, 60, 1), 24, std::nullopt});
    router.interfaces.push_back({"eth1", Mac::local(mac++), Ipv4(192, 168, 61, 1), 24, std::nullopt});
    t.nodes.push_back(router);
    auto wire = [&](const std::string& node, const std::string& iface, const std::string& sw) {
        auto* s = t.find_node(sw);
        std::string port = "p" + std::to_string(s->interfaces.size());
        s->interfaces.push_back({port, Mac::local(0x2000 + mac++), Ipv4(0), 0, std::nullopt});
        t.connect(node, iface, sw, port);
    };
    wire("R1", "eth0", "SA");
    wire("R1", "eth1", "SB");
    unsigned octet = 10;
    for (const auto& [tpl, cfg] : hosts_a) {
        topology::Interface addr{"eth0", Mac::local(mac++), Ipv4(192, 168, 60, octet++), 24,
                                 Ipv4(192, 168, 60, 1)};
        auto& inst = t.instantiate_node(tpl, cfg, addr);
        wire(inst.node_id, "eth0", "SA");
    }
    octet = 10;
    for (const auto& [tpl, cfg] : hosts_b) {
        topology::Interface addr{"eth0", Mac::local(mac++), Ipv4(192, 168, 61, octet++), 24,
                                 Ipv4(192, 168, 61, 1)};
        auto& inst = t.instantiate_node(tpl, cfg, addr);
        wire(inst.node_id, "eth0", "SB");
    }
    t.subnets.push_back({Prefix{Ipv4(192, 168, 60, 0), 24}, "lan a"});
    t.subnets.push_back({Prefix{Ipv4(192, 168, 61, 0), 24}, "lan b"});
    return t;
}

inline std::vector<wire::FrameRecord> merged_captures(sim::Engine& eng,
                                                      const std::vector<std::string>& cap_ids) {
    std::vector<wire::FrameRecord> all;
    for (const auto& id : cap_ids) {
        const auto& c = eng.capture(id);
        all.insert(all.end(), c.records.begin(), c.records.end());
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const auto& a, const auto& b) { return a.ts < b.ts; });
    return all;
}

// Independent routing oracle: walks forwarding tables hop by hop from a
// source subnet to a destination address; returns visited routers or
// nullopt on a loop / dead end.
inline std::optional<std::vector<std::string>> walk_route(
    const topology::Topology& t, const std::vector<topology::RoutingTable>& tables,
    Ipv4 src_gateway, Ipv4 dst) {
    auto router_by_addr = [&](Ipv4 a) -> const topology::NodeInstance* {
        for (const auto& n : t.nodes) {
            if (t.kind_of(n) != topology::NodeKind::Router) continue;
            for (const auto& i : n.interfaces)
                if (i.ipv4 == a) return &n;
        }
        return nullptr;
    };
    auto table_of = [&](const std::string& id) -> const topology::RoutingTable* {
        for (const auto& rt : tables)
            if (rt.router_id == id) return &rt;
        return nullptr;
    };
    std::vector<std::string> path;
    const auto* cur = router_by_addr(src_gateway);
    std::set<std::string> seen;
    while (cur) {
        if (!seen.insert(cur->node_id).second) return std::nullopt;  // loop
        path.push_back(cur->node_id);
        // delivered when the destination sits on a connected subnet
        for (const auto& i : cur->interfaces)
            if (Prefix{i.ipv4, i.prefix_len}.contains(dst)) return path;
        const auto* rt = table_of(cur->node_id);
        if (!rt) return std::nullopt;
        const auto* e = rt->lookup(dst);
        if (!e || !e->next_hop) return std::nullopt;
        cur = router_by_addr(*e->next_hop);
    }
    return std::nullopt;
}

}  // namespace testutil
