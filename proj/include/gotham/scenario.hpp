#pragma once

// Scenario documents: a single declarative JSON file describing topology,
// seed, duration, captures, QoS/resource/config overrides and the attack
// schedule. One document + one seed = one bit-reproducible dataset.

#include <gotham/datasetout.hpp>
#include <gotham/threats.hpp>

#include <filesystem>
#include <fstream>

namespace gotham::scenario {

using threats::AttackEntry;
using threats::AttackSchedule;

struct QosOverride {
    std::string link;
    wire::FrameRecord::Dir direction = wire::FrameRecord::Dir::ab;
    linkshape::QosProfile profile;
    bool operator==(const QosOverride&) const = default;
};

struct ResourceOverride {
    std::string node;
    topology::NodeResources resources;
    bool operator==(const ResourceOverride&) const = default;
};

struct ScenarioSpec {
    std::string topology_preset;      // "gotham" or empty when inline
    std::optional<topology::Topology> inline_topology;
    std::uint64_t seed = 1;
    double duration_s = 60;
    std::vector<std::string> captures;
    std::vector<QosOverride> qos_overrides;
    std::vector<ResourceOverride> resource_overrides;
    std::map<std::string, topology::ConfigMap> config_overrides;
    AttackSchedule schedule;
    std::string output_dir = "out";

    bool operator==(const ScenarioSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Parse / print (unknown keys are hard errors: reproducibility over leniency)
// ---------------------------------------------------------------------------

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    ScenarioSpec s;
    for (const auto& [key, val] : j.items()) {
        if (key == "topology") {
            if (val.is_string()) {
                s.topology_preset = val.get<std::string>();
                if (s.topology_preset != "gotham")
                    throw Error("scenario: unknown preset '" + s.topology_preset + "'");
            } else if (val.is_object()) {
                s.inline_topology = topology::topology_from_json(val);
            } else {
                throw Error("scenario: 'topology' must be a preset name or an object");
            }
        } else if (key == "seed") {
            s.seed = val.get<std::uint64_t>();
        } else if (key == "duration_s") {
            s.duration_s = val.get<double>();
        } else if (key == "captures") {
            for (const auto& c : val) s.captures.push_back(c.get<std::string>());
        } else if (key == "qos_overrides") {
            for (const auto& o : val) {
                QosOverride q;
                for (const auto& [k2, v2] : o.items()) {
                    if (k2 == "link") q.link = v2.get<std::string>();
                    else if (k2 == "direction") {
                        auto d = v2.get<std::string>();
                        if (d != "ab" && d != "ba")
                            throw Error("scenario: direction must be 'ab' or 'ba'");
                        q.direction = d == "ab" ? wire::FrameRecord::Dir::ab
                                                : wire::FrameRecord::Dir::ba;
                    } else if (k2 == "profile") {
                        q.profile = topology::qos_from_json(v2);
                    } else {
                        throw Error("scenario: unknown key 'qos_overrides." + k2 + "'");
                    }
                }
                s.qos_overrides.push_back(std::move(q));
            }
        } else if (key == "resource_overrides") {
            for (const auto& o : val) {
                ResourceOverride r;
                for (const auto& [k2, v2] : o.items()) {
                    if (k2 == "node") r.node = v2.get<std::string>();
                    else if (k2 == "cpu_share") r.resources.cpu_share = v2.get<double>();
                    else if (k2 == "memory_mb") r.resources.memory_mb = v2.get<std::uint32_t>();
                    else throw Error("scenario: unknown key 'resource_overrides." + k2 + "'");
                }
                s.resource_overrides.push_back(std::move(r));
            }
        } else if (key == "config_overrides") {
            for (const auto& [node, cfg] : val.items())
                for (const auto& [ck, cv] : cfg.items())
                    s.config_overrides[node][ck] = cv.get<std::string>();
        } else if (key == "schedule") {
            for (const auto& e : val) {
                AttackEntry entry;
                for (const auto& [k2, v2] : e.items()) {
                    if (k2 == "at_s") entry.at = static_cast<SimTime>(v2.get<double>() * kSecond);
                    else if (k2 == "actor") entry.actor = v2.get<std::string>();
                    else if (k2 == "action") entry.action = v2.get<std::string>();
                    else if (k2 == "target") entry.target = v2.get<std::string>();
                    else if (k2 == "params") {
                        for (const auto& [pk, pv] : v2.items())
                            entry.params[pk] = pv.get<std::string>();
                    } else {
                        throw Error("scenario: unknown key 'schedule." + k2 + "'");
                    }
                }
                s.schedule.entries.push_back(std::move(entry));
            }
        } else if (key == "output_dir") {
            s.output_dir = val.get<std::string>();
        } else {
            throw Error("scenario: unknown key '" + key + "'");
        }
    }
    if (s.topology_preset.empty() && !s.inline_topology)
        throw Error("scenario: missing 'topology'");
    if (s.duration_s <= 0) throw Error("scenario: duration_s must be positive");
    auto sched_errors = threats::validate_schedule(s.schedule);
    if (!sched_errors.empty()) throw Error("scenario: " + sched_errors[0]);
    return s;
}

inline ScenarioSpec parse_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw Error(std::string("scenario: JSON parse error: ") + e.what());
    }
    return scenario_from_json(j);
}

inline nlohmann::json scenario_to_json(const ScenarioSpec& s) {
    nlohmann::json j;
    if (s.inline_topology) j["topology"] = topology::topology_to_json(*s.inline_topology);
    else j["topology"] = s.topology_preset;
    j["seed"] = s.seed;
    j["duration_s"] = s.duration_s;
    if (!s.captures.empty()) j["captures"] = s.captures;
    if (!s.qos_overrides.empty()) {
        j["qos_overrides"] = nlohmann::json::array();
        for (const auto& q : s.qos_overrides)
            j["qos_overrides"].push_back(
                {{"link", q.link},
                 {"direction", q.direction == wire::FrameRecord::Dir::ab ? "ab" : "ba"},
                 {"profile", topology::qos_to_json(q.profile)}});
    }
    if (!s.resource_overrides.empty()) {
        j["resource_overrides"] = nlohmann::json::array();
        for (const auto& r : s.resource_overrides)
            j["resource_overrides"].push_back({{"node", r.node},
                                               {"cpu_share", r.resources.cpu_share},
                                               {"memory_mb", r.resources.memory_mb}});
    }
    if (!s.config_overrides.empty()) j["config_overrides"] = s.config_overrides;
    if (!s.schedule.entries.empty()) {
        j["schedule"] = nlohmann::json::array();
        for (const auto& e : s.schedule.entries) {
            nlohmann::json ej;
            ej["at_s"] = static_cast<double>(e.at) / kSecond;
            ej["actor"] = e.actor;
            ej["action"] = e.action;
            if (!e.target.empty()) ej["target"] = e.target;
            if (!e.params.empty()) ej["params"] = e.params;
            j["schedule"].push_back(ej);
        }
    }
    j["output_dir"] = s.output_dir;
    return j;
}

inline std::string print_scenario(const ScenarioSpec& s) { return scenario_to_json(s).dump(2); }

// ---------------------------------------------------------------------------
// Topology materialization + validation against references
// ---------------------------------------------------------------------------

inline topology::Topology materialize_topology(const ScenarioSpec& s) {
    topology::Topology t =
        s.inline_topology ? *s.inline_topology : topology::build_gotham();
    for (const auto& [node_id, cfg] : s.config_overrides) {
        auto* n = t.find_node(node_id);
        if (!n) throw Error("scenario: config override for unknown node '" + node_id + "'");
        const auto* tpl = t.find_template(n->template_id);
        for (const auto& [k, v] : cfg) {
            if (tpl && !tpl->default_config.count(k))
                throw Error("scenario: unknown config key '" + k + "' for node " + node_id);
            n->config[k] = v;
        }
    }
    for (const auto& r : s.resource_overrides) {
        auto* n = t.find_node(r.node);
        if (!n) throw Error("scenario: resource override for unknown node '" + r.node + "'");
        if (r.resources.cpu_share <= 0 || r.resources.cpu_share > 1.0)
            throw Error("scenario: cpu_share outside (0,1] for node " + r.node);
        if (r.resources.memory_mb < 1)
            throw Error("scenario: memory_mb must be >= 1 for node " + r.node);
        n->resources = r.resources;
    }
    for (const auto& q : s.qos_overrides) {
        auto* l = t.find_link(q.link);
        if (!l) throw Error("scenario: qos override for unknown link '" + q.link + "'");
        q.profile.validate();
        (q.direction == wire::FrameRecord::Dir::ab ? l->qos_ab : l->qos_ba) = q.profile;
    }
    for (const auto& c : s.captures)
        if (!t.find_link(c)) throw Error("scenario: capture on unknown link '" + c + "'");
    return t;
}

// ---------------------------------------------------------------------------
// Behavior wiring
// ---------------------------------------------------------------------------

// Every node gets its template behavior; IoT devices additionally carry the
// victim telnet service (when provisioned vulnerable) and a dormant Merlin
// agent so install actions can land anywhere.
inline void wire_behaviors(sim::Engine& eng) {
    const auto& topo = eng.topo();
    for (const auto& n : topo.nodes) {
        const auto* tpl = topo.find_template(n.template_id);
        if (!tpl) continue;
        if (tpl->kind == topology::NodeKind::Switch || tpl->kind == topology::NodeKind::Router)
            continue;
        auto comp = std::make_unique<threats::CompositeBehavior>();
        if (auto b = devices::make_behavior(tpl->behavior_id)) comp->add(std::move(b));
        if (auto b = threats::make_behavior(tpl->behavior_id)) comp->add(std::move(b));
        if (n.vulnerable_telnet) comp->add(std::make_unique<threats::VictimTelnetBehavior>());
        if (tpl->kind == topology::NodeKind::IotDevice)
            comp->add(std::make_unique<threats::MerlinAgentBehavior>());
        eng.set_behavior(n.node_id, std::move(comp));
    }
}

// ---------------------------------------------------------------------------
// Run + artifacts
// ---------------------------------------------------------------------------

struct RunResult {
    std::filesystem::path output_dir;
    std::vector<std::filesystem::path> artifacts;
    sim::RunStats stats;
    std::string manifest;
    std::map<std::string, std::uint64_t> label_counts;
};

namespace detail {

inline std::uint64_t file_fnv64(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof(buf));
        std::streamsize got = f.gcount();
        if (got > 0) h = fnv1a64(buf, static_cast<std::size_t>(got), h);
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace detail

// Builds the engine, runs the scenario to its duration and writes every
// artifact: per-link pcaps, frame/flow label tables, per-node logs, the
// protocol histogram and a manifest with artifact checksums. Partial output
// is removed on failure.
inline RunResult run_scenario(const ScenarioSpec& spec,
                              const std::string& document_text = "") {
    namespace fs = std::filesystem;
    fs::path out_dir(spec.output_dir);
    RunResult result;
    result.output_dir = out_dir;
    try {
        auto topo = materialize_topology(spec);
        sim::Engine eng(std::move(topo), spec.seed);
        wire_behaviors(eng);

        std::vector<std::pair<std::string, std::string>> capture_ids;  // link -> capture
        std::set<std::string> requested(spec.captures.begin(), spec.captures.end());
        for (const auto& l : eng.topo().links)
            if (l.capture_enabled) requested.insert(l.link_id);
        for (const auto& link : requested) capture_ids.push_back({link, eng.attach_capture(link)});

        threats::schedule_attacks(eng, spec.schedule);
        eng.start_all();
        result.stats = eng.run(static_cast<SimTime>(spec.duration_s * kSecond));

        fs::create_directories(out_dir / "captures");
        fs::create_directories(out_dir / "labels");
        fs::create_directories(out_dir / "logs");
        fs::create_directories(out_dir / "report");

        std::vector<wire::FrameRecord> merged;
        for (const auto& [link, cap] : capture_ids) {
            const auto& records = eng.capture(cap).records;
            auto path = out_dir / "captures" / (link + ".pcap");
            dataset::write_pcap(records, path);
            result.artifacts.push_back(path);
            merged.insert(merged.end(), records.begin(), records.end());
        }
        std::stable_sort(merged.begin(), merged.end(),
                         [](const auto& a, const auto& b) { return a.ts < b.ts; });

        auto labels = dataset::label_capture(merged, eng.intervals());
        result.label_counts = labels.label_counts;
        auto mismatches = dataset::label_mismatches(merged, labels, eng.prov_table());
        if (mismatches != 0)
            throw Error("label integrity violation: " + std::to_string(mismatches) + " frames");
        dataset::write_frame_csv(labels, out_dir / "labels" / "frames.csv");
        result.artifacts.push_back(out_dir / "labels" / "frames.csv");
        dataset::write_flow_csv(labels, out_dir / "labels" / "flows.csv");
        result.artifacts.push_back(out_dir / "labels" / "flows.csv");

        auto hist = dataset::protocol_histogram(merged);
        dataset::write_histogram_csv(hist, out_dir / "report" / "protocols.csv");
        result.artifacts.push_back(out_dir / "report" / "protocols.csv");

        for (auto& p : dataset::write_logs(eng.logs(), out_dir / "logs"))
            result.artifacts.push_back(p);

        // manifest: scenario hash, seed, artifact checksums
        std::string manifest;
        std::uint64_t doc_hash =
            document_text.empty() ? fnv1a64(print_scenario(spec)) : fnv1a64(document_text);
        manifest += "scenario_hash " + detail::hex64(doc_hash) + "\n";
        manifest += "seed " + std::to_string(spec.seed) + "\n";
        manifest += "duration_s " + std::to_string(spec.duration_s) + "\n";
        manifest += "frames_captured " + std::to_string(merged.size()) + "\n";
        std::sort(result.artifacts.begin(), result.artifacts.end());
        for (const auto& p : result.artifacts) {
            auto rel = fs::relative(p, out_dir).generic_string();
            manifest += "artifact " + rel + " bytes=" + std::to_string(fs::file_size(p)) +
                        " fnv64=" + detail::hex64(detail::file_fnv64(p)) + "\n";
        }
        std::ofstream mf(out_dir / "manifest.txt", std::ios::binary | std::ios::trunc);
        mf << manifest;
        mf.close();
        result.artifacts.push_back(out_dir / "manifest.txt");
        result.manifest = manifest;
        return result;
    } catch (...) {
        std::error_code ec;
        fs::remove_all(out_dir, ec);  // no partial artifacts
        throw;
    }
}

// The canonical scenario document emitted by `preset gotham`.
inline ScenarioSpec gotham_preset_scenario() {
    ScenarioSpec s;
    s.topology_preset = "gotham";
    s.seed = 1;
    s.duration_s = 600;
    s.captures = {"RCLOUD--SCLOUD"};
    s.output_dir = "gotham-out";
    return s;
}

}  // namespace gotham::scenario
