// gotham: scenario generator CLI. Validates scenario documents, runs them
// deterministically and emits dataset artifacts, or prints the canonical
// preset document.
//
// Exit codes: 0 success, 2 validation error, 3 runtime error.

#include <gotham/scenario.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw gotham::Error("cannot read " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

int cmd_validate(const std::string& file) {
    std::string text;
    try {
        text = read_file(file);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        auto spec = gotham::scenario::parse_scenario(text);
        auto topo = gotham::scenario::materialize_topology(spec);
        auto report = gotham::topology::validate_topology(topo);
        if (!report.empty()) {
            for (const auto& v : report)
                std::cout << "violation: " << v.code << " " << v.message << "\n";
            return 2;
        }
        std::cout << "ok: " << topo.nodes.size() << " nodes, " << topo.links.size()
                  << " links, " << spec.schedule.entries.size() << " scheduled actions\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_run(const std::string& file, const std::string& out_override,
            std::optional<std::uint64_t> seed_override, std::optional<double> duration_override) {
    std::string text;
    gotham::scenario::ScenarioSpec spec;
    try {
        text = read_file(file);
        spec = gotham::scenario::parse_scenario(text);
        // flags override document fields
        if (!out_override.empty()) spec.output_dir = out_override;
        if (seed_override) spec.seed = *seed_override;
        if (duration_override) spec.duration_s = *duration_override;
    } catch (const std::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    }
    try {
        bool flags_changed = !out_override.empty() || seed_override || duration_override;
        auto result = gotham::scenario::run_scenario(spec, flags_changed ? "" : text);
        std::cout << "wrote " << result.artifacts.size() << " artifacts to "
                  << result.output_dir.string() << "\n";
        std::cout << "frames: origin=" << result.stats.frames_origin
                  << " forwarded=" << result.stats.frames_forwarded
                  << " delivered=" << result.stats.frames_delivered << "\n";
        for (const auto& [label, count] : result.label_counts)
            std::cout << "label " << label << " " << count << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
}

int cmd_preset(const std::string& name, const std::string& out,
               const std::string& topology_out) {
    if (name != "gotham") {
        std::cerr << "validation error: unknown preset '" << name << "'\n";
        return 2;
    }
    try {
        auto spec = gotham::scenario::gotham_preset_scenario();
        std::string doc = gotham::scenario::print_scenario(spec);
        if (out.empty() || out == "-") {
            std::cout << doc << "\n";
        } else {
            std::ofstream f(out, std::ios::binary | std::ios::trunc);
            if (!f) throw gotham::Error("cannot write " + out);
            f << doc << "\n";
            std::cout << "wrote scenario document to " << out << "\n";
        }
        if (!topology_out.empty()) {
            auto topo = gotham::topology::build_gotham();
            std::ofstream f(topology_out, std::ios::binary | std::ios::trunc);
            if (!f) throw gotham::Error("cannot write " + topology_out);
            f << gotham::topology::export_topology(topo) << "\n";
            std::cout << "wrote topology export to " << topology_out << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gotham: deterministic IoT security scenario simulator"};
    app.require_subcommand(1);

    std::string validate_file;
    auto* validate = app.add_subcommand("validate", "validate a scenario document");
    validate->add_option("file", validate_file, "scenario JSON document")->required();

    std::string run_file, run_out;
    std::uint64_t run_seed = 0;
    double run_duration = 0;
    auto* run = app.add_subcommand("run", "run a scenario and write artifacts");
    run->add_option("file", run_file, "scenario JSON document")->required();
    run->add_option("--out", run_out, "output directory (overrides the document)");
    auto* seed_opt = run->add_option("--seed", run_seed, "seed override");
    auto* duration_opt = run->add_option("--duration", run_duration, "duration override, seconds");

    std::string preset_name = "gotham", preset_out, preset_topology_out;
    auto* preset = app.add_subcommand("preset", "emit a canonical scenario document");
    preset->add_option("name", preset_name, "preset name (gotham)")->required();
    preset->add_option("--out", preset_out, "output file ('-' for stdout)");
    preset->add_option("--topology-out", preset_topology_out,
                       "also export the preset topology document");

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return cmd_validate(validate_file);
    if (run->parsed())
        return cmd_run(run_file, run_out,
                       seed_opt->count() ? std::optional<std::uint64_t>(run_seed) : std::nullopt,
                       duration_opt->count() ? std::optional<double>(run_duration)
                                             : std::nullopt);
    if (preset->parsed()) return cmd_preset(preset_name, preset_out, preset_topology_out);
    return 2;
}
