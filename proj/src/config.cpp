// SPDX-License-Identifier: Apache-2.0

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "otfsce/errors.hpp"
#include "otfsce/harness.hpp"

namespace otfsce {

namespace {

std::string where(const YAML::Node& node) {
    const YAML::Mark mark = node.Mark();
    if (mark.is_null()) return "";
    return "line " + std::to_string(mark.line + 1) + ": ";
}

template <typename T>
T read(const YAML::Node& node, const std::string& name) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where(node) + "invalid value for '" + name + "'");
    }
}

// Every key of `map` must be in `allowed`.
void check_keys(const YAML::Node& map, const std::string& section,
                const std::set<std::string>& allowed) {
    if (!map.IsMap()) {
        throw ConfigError(where(map) + "'" + section + "' must be a mapping");
    }
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.contains(key)) {
            throw ConfigError(where(kv.first) + "unknown key '" + key + "' in " + section);
        }
    }
}

template <typename T>
void assign(const YAML::Node& map, const char* key, const std::string& prefix, T& out) {
    if (const YAML::Node n = map[key]) out = read<T>(n, prefix + key);
}

std::pair<double, double> read_pair(const YAML::Node& node, const std::string& name) {
    if (!node.IsSequence() || node.size() != 2) {
        throw ConfigError(where(node) + "'" + name + "' must be a two-element list");
    }
    return {read<double>(node[0], name), read<double>(node[1], name)};
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    ExperimentConfig cfg;
    if (!root || root.IsNull()) return cfg;
    check_keys(root, "config",
               {"mode", "seed", "trials", "threads", "ipi_elimination", "noiseless", "sweep_db",
                "grid", "scenario", "pilot", "search", "ser", "output"});

    if (const YAML::Node n = root["mode"]) {
        try {
            cfg.mode = parse_mode(read<std::string>(n, "mode"));
        } catch (const ConfigError& e) {
            throw ConfigError(where(n) + e.what());
        }
    }
    assign(root, "seed", "", cfg.seed);
    assign(root, "trials", "", cfg.trials);
    assign(root, "threads", "", cfg.threads);
    assign(root, "ipi_elimination", "", cfg.ipi_elimination);
    assign(root, "noiseless", "", cfg.noiseless);
    if (const YAML::Node n = root["sweep_db"]) {
        if (!n.IsSequence()) throw ConfigError(where(n) + "'sweep_db' must be a list");
        cfg.sweep_db.clear();
        for (const auto& v : n) cfg.sweep_db.push_back(read<double>(v, "sweep_db"));
    }

    if (const YAML::Node g = root["grid"]) {
        check_keys(g, "grid", {"M", "N", "delta_f_hz", "fc_hz"});
        assign(g, "M", "grid.", cfg.grid.M);
        assign(g, "N", "grid.", cfg.grid.N);
        assign(g, "delta_f_hz", "grid.", cfg.grid.delta_f_hz);
        assign(g, "fc_hz", "grid.", cfg.grid.fc_hz);
    }
    if (const YAML::Node s = root["scenario"]) {
        check_keys(s, "scenario", {"num_paths", "rice_factor_db", "fixed_delay_gap_s",
                                   "delay_range_s", "max_doppler_hz"});
        assign(s, "num_paths", "scenario.", cfg.scenario.num_paths);
        assign(s, "rice_factor_db", "scenario.", cfg.scenario.rice_factor_db);
        assign(s, "fixed_delay_gap_s", "scenario.", cfg.scenario.fixed_delay_gap_s);
        assign(s, "max_doppler_hz", "scenario.", cfg.scenario.max_doppler_hz);
        if (const YAML::Node r = s["delay_range_s"]) {
            cfg.scenario.delay_range_s = read_pair(r, "scenario.delay_range_s");
        }
    }
    if (const YAML::Node p = root["pilot"]) {
        check_keys(p, "pilot", {"k", "l", "energy"});
        assign(p, "k", "pilot.", cfg.pilot.k_pilot);
        assign(p, "l", "pilot.", cfg.pilot.l_pilot);
        assign(p, "energy", "pilot.", cfg.pilot.energy);
    }
    if (const YAML::Node s = root["search"]) {
        check_keys(s, "search", {"half_width", "step", "max_paths"});
        assign(s, "half_width", "search.", cfg.search.half_width);
        assign(s, "step", "search.", cfg.search.step);
        assign(s, "max_paths", "search.", cfg.search.max_paths);
    }
    if (const YAML::Node s = root["ser"]) {
        check_keys(s, "ser", {"M", "N", "order"});
        assign(s, "M", "ser.", cfg.ser.M);
        assign(s, "N", "ser.", cfg.ser.N);
        assign(s, "order", "ser.", cfg.ser.order);
    }
    if (const YAML::Node o = root["output"]) {
        check_keys(o, "output", {"dir", "two_way_range"});
        if (const YAML::Node d = o["dir"]) cfg.output_dir = read<std::string>(d, "output.dir");
        assign(o, "two_way_range", "output.", cfg.two_way_range);
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_config(text.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string to_yaml(const ExperimentConfig& cfg) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "mode" << YAML::Value << to_string(cfg.mode);
    out << YAML::Key << "seed" << YAML::Value << cfg.seed;
    out << YAML::Key << "trials" << YAML::Value << cfg.trials;
    out << YAML::Key << "threads" << YAML::Value << cfg.threads;
    out << YAML::Key << "ipi_elimination" << YAML::Value << cfg.ipi_elimination;
    out << YAML::Key << "noiseless" << YAML::Value << cfg.noiseless;
    out << YAML::Key << "sweep_db" << YAML::Value << YAML::Flow << cfg.sweep_db;

    out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "M" << YAML::Value << cfg.grid.M;
    out << YAML::Key << "N" << YAML::Value << cfg.grid.N;
    out << YAML::Key << "delta_f_hz" << YAML::Value << cfg.grid.delta_f_hz;
    out << YAML::Key << "fc_hz" << YAML::Value << cfg.grid.fc_hz;
    out << YAML::EndMap;

    out << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "num_paths" << YAML::Value << cfg.scenario.num_paths;
    out << YAML::Key << "rice_factor_db" << YAML::Value << cfg.scenario.rice_factor_db;
    out << YAML::Key << "fixed_delay_gap_s" << YAML::Value << cfg.scenario.fixed_delay_gap_s;
    out << YAML::Key << "delay_range_s" << YAML::Value << YAML::Flow << YAML::BeginSeq
        << cfg.scenario.delay_range_s.first << cfg.scenario.delay_range_s.second << YAML::EndSeq;
    out << YAML::Key << "max_doppler_hz" << YAML::Value << cfg.scenario.max_doppler_hz;
    out << YAML::EndMap;

    out << YAML::Key << "pilot" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "k" << YAML::Value << cfg.pilot.k_pilot;
    out << YAML::Key << "l" << YAML::Value << cfg.pilot.l_pilot;
    out << YAML::Key << "energy" << YAML::Value << cfg.pilot.energy;
    out << YAML::EndMap;

    out << YAML::Key << "search" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "half_width" << YAML::Value << cfg.search.half_width;
    out << YAML::Key << "step" << YAML::Value << cfg.search.step;
    out << YAML::Key << "max_paths" << YAML::Value << cfg.search.max_paths;
    out << YAML::EndMap;

    out << YAML::Key << "ser" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "M" << YAML::Value << cfg.ser.M;
    out << YAML::Key << "N" << YAML::Value << cfg.ser.N;
    out << YAML::Key << "order" << YAML::Value << cfg.ser.order;
    out << YAML::EndMap;

    out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "dir" << YAML::Value << cfg.output_dir.string();
    out << YAML::Key << "two_way_range" << YAML::Value << cfg.two_way_range;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace otfsce
