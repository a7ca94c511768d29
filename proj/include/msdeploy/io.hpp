#pragma once

#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "msdeploy/errors.hpp"
#include "msdeploy/model.hpp"
#include "msdeploy/sca.hpp"

// File formats (format_version 1, explicit unit tags):
//   instance JSON:   servers / layers / apps / adjacency / units
//   deployment JSON: placements (one record per service, virtual included)
//                    plus the derived layer_pulls matrix
//   sca trace:       JSON lines, one record per iteration

namespace msdeploy {

using nlohmann::json;

inline json units_block() {
    return json{{"size", "MB"},   {"bandwidth", "MB/s"}, {"traffic", "KB"},
                {"cpu", "GHz"},   {"delay", "s"},        {"overhead", "hop*KB"}};
}

/// Serializes an unaugmented instance (files never carry virtual sources;
/// they are re-attached after loading).
inline json instance_to_json(const Instance& inst, const std::vector<std::vector<int>>& adjacency) {
    if (inst.augmented) throw BadInput("instance_to_json: store unaugmented instances only");
    json j;
    j["format_version"] = 1;
    j["units"] = units_block();
    j["servers"] = json::array();
    for (const auto& s : inst.servers)
        j["servers"].push_back({{"id", s.id},
                                {"cpu_ghz", s.cpu_ghz},
                                {"storage_mb", s.storage_mb},
                                {"cloud_bw_mbps", s.cloud_bw_mbps}});
    j["layers"] = json::array();
    for (const auto& l : inst.layers)
        j["layers"].push_back({{"id", l.id}, {"size_mb", l.size_mb}});
    j["apps"] = json::array();
    for (const auto& app : inst.apps) {
        json ja;
        ja["id"] = app.id;
        ja["source_server"] = app.source_server;
        ja["ingress_kb"] = app.ingress_kb;
        ja["services"] = json::array();
        for (const auto& ms : app.services)
            ja["services"].push_back(
                {{"idx", ms.idx}, {"cpu_ghz", ms.cpu_demand_ghz}, {"layers", ms.layers}});
        json traffic = json::array();
        for (std::size_t i = 0; i < app.traffic.rows(); ++i) {
            json row = json::array();
            for (std::size_t c = 0; c < app.traffic.cols(); ++c) row.push_back(app.traffic(i, c));
            traffic.push_back(std::move(row));
        }
        ja["traffic"] = std::move(traffic);
        j["apps"].push_back(std::move(ja));
    }
    j["adjacency"] = adjacency;
    return j;
}

struct LoadedInstance {
    Instance instance;  // unaugmented
    std::vector<std::vector<int>> adjacency;
};

inline LoadedInstance instance_from_json(const json& j) {
    try {
        if (j.at("format_version").get<int>() != 1)
            throw BadInput("instance_from_json: unsupported format_version");
        LoadedInstance out;
        Instance& inst = out.instance;
        for (const auto& js : j.at("servers"))
            inst.servers.push_back(Server{js.at("id").get<int>(), js.at("cpu_ghz").get<double>(),
                                          js.at("storage_mb").get<double>(),
                                          js.at("cloud_bw_mbps").get<double>()});
        for (const auto& jl : j.at("layers"))
            inst.layers.push_back(Layer{jl.at("id").get<int>(), jl.at("size_mb").get<double>()});
        for (const auto& ja : j.at("apps")) {
            Application app;
            app.id = ja.at("id").get<int>();
            app.source_server = ja.at("source_server").get<int>();
            app.ingress_kb = ja.at("ingress_kb").get<double>();
            for (const auto& jm : ja.at("services")) {
                Microservice ms;
                ms.app = app.id;
                ms.idx = jm.at("idx").get<int>();
                ms.cpu_demand_ghz = jm.at("cpu_ghz").get<double>();
                ms.layers = jm.at("layers").get<std::vector<int>>();
                app.services.push_back(std::move(ms));
            }
            const auto& jt = ja.at("traffic");
            const std::size_t a = app.services.size();
            if (jt.size() != a) throw BadInput("instance_from_json: traffic row count mismatch");
            app.traffic = Matrix(a, a, 0.0);
            for (std::size_t i = 0; i < a; ++i) {
                if (jt[i].size() != a)
                    throw BadInput("instance_from_json: traffic column count mismatch");
                for (std::size_t c = 0; c < a; ++c) app.traffic(i, c) = jt[i][c].get<double>();
            }
            inst.apps.push_back(std::move(app));
        }
        out.adjacency = j.at("adjacency").get<std::vector<std::vector<int>>>();
        inst.hops = build_hop_matrix(out.adjacency);
        inst.validate();
        return out;
    } catch (const json::exception& e) {
        throw BadInput(std::string("instance_from_json: ") + e.what());
    }
}

inline json deployment_to_json(const Deployment& dep, const json& meta = json::object()) {
    json j;
    j["format_version"] = 1;
    j["placements"] = json::array();
    for (std::size_t k = 0; k < dep.x.size(); ++k)
        for (std::size_t i = 0; i < dep.x[k].size(); ++i)
            j["placements"].push_back({{"app", k}, {"service", i}, {"server", dep.x[k][i]}});
    json pulls = json::array();
    for (const auto& row : dep.d) {
        json r = json::array();
        for (auto v : row) r.push_back(static_cast<int>(v));
        pulls.push_back(std::move(r));
    }
    j["layer_pulls"] = std::move(pulls);
    if (!meta.empty()) j["meta"] = meta;
    return j;
}

/// Loads a deployment against an augmented instance (dimension-checked).
inline Deployment deployment_from_json(const Instance& inst, const json& j) {
    try {
        if (j.at("format_version").get<int>() != 1)
            throw BadInput("deployment_from_json: unsupported format_version");
        Deployment dep;
        dep.x.resize(inst.apps.size());
        for (std::size_t k = 0; k < inst.apps.size(); ++k)
            dep.x[k].assign(inst.apps[k].services.size(), -1);
        for (const auto& jp : j.at("placements")) {
            const auto k = jp.at("app").get<std::size_t>();
            const auto i = jp.at("service").get<std::size_t>();
            if (k >= dep.x.size() || i >= dep.x[k].size())
                throw BadInput("deployment_from_json: placement out of range");
            dep.x[k][i] = jp.at("server").get<int>();
        }
        for (const auto& row : dep.x)
            for (int s : row)
                if (s < 0) throw BadInput("deployment_from_json: missing placement record");
        const auto& jd = j.at("layer_pulls");
        for (const auto& row : jd) {
            std::vector<std::uint8_t> r;
            for (const auto& v : row) r.push_back(static_cast<std::uint8_t>(v.get<int>()));
            dep.d.push_back(std::move(r));
        }
        return dep;
    } catch (const json::exception& e) {
        throw BadInput(std::string("deployment_from_json: ") + e.what());
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BadInput("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw BadInput("parse error in " + path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw BadInput("cannot write " + path);
    out << text;
}

/// One JSON object per iteration: objective pieces, step norms, and
/// subproblem stats, for auditing the descent property offline.
inline void write_trace(std::ostream& out, const ScaTrace& trace) {
    for (std::size_t r = 0; r < trace.iterates.size(); ++r) {
        const auto& it = trace.iterates[r];
        json j;
        j["iter"] = r;
        j["u"] = it.u;
        j["t_s"] = it.t;
        j["r_hopkb"] = it.r;
        j["step_x"] = it.step_x;
        j["step_d"] = it.step_d;
        j["nodes_expanded"] = it.stats.nodes_expanded;
        j["subproblem_optimal"] = it.stats.optimal;
        j["placements"] = it.placement;
        out << j.dump() << "\n";
    }
}

inline void write_trace_file(const std::string& path, const ScaTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw BadInput("cannot write " + path);
    write_trace(out, trace);
}

} // namespace msdeploy
