#pragma once

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "msdeploy/baselines.hpp"
#include "msdeploy/generator.hpp"
#include "msdeploy/io.hpp"
#include "msdeploy/objective.hpp"
#include "msdeploy/reallocation.hpp"
#include "msdeploy/sca.hpp"

// Experiment orchestration: a config names instances (files or generator
// draws), methods, and a theta grid; every (instance, method, theta) cell is
// solved and measured. Cells are independent and may run on a worker pool;
// results do not depend on the worker count. The CSV rendering carries only
// deterministic columns so identical configs reproduce identical bytes;
// wall-clock readings live in the JSON report.

namespace msdeploy {

struct BaselineMetrics {
    double pull_delay_s = 0.0;      // no layer sharing: all image bytes over mean bandwidth
    double comm_overhead_kb = 0.0;  // all chain traffic, every edge charged
};

/// Reference values the ratio metrics divide by.
inline BaselineMetrics baseline_metrics(const Instance& inst) {
    if (!inst.augmented) throw NotAugmented("baseline_metrics: attach virtual sources first");
    BaselineMetrics b;
    double mean_bw = 0.0;
    for (const auto& s : inst.servers) mean_bw += s.cloud_bw_mbps;
    mean_bw /= static_cast<double>(inst.servers.size());
    double bytes = 0.0;
    for (const auto& app : inst.apps) {
        for (const auto& ms : app.services) bytes += inst.image_size_mb(ms);
        for (std::size_t i = 0; i < app.services.size(); ++i)
            for (std::size_t j = 0; j < app.services.size(); ++j)
                b.comm_overhead_kb += app.traffic(i, j);
    }
    b.pull_delay_s = bytes / mean_bw;
    return b;
}

struct InstanceSource {
    std::string file;    // mutually exclusive with preset
    std::string preset;  // table3 | nsfnet | testbed5
    std::uint64_t seed = 0;
    std::optional<IntRange> apps;
    std::optional<IntRange> servers;
    std::optional<IntRange> services;

    std::string id() const {
        if (!file.empty()) return file;
        return preset + "-" + std::to_string(seed);
    }
};

struct ExperimentConfig {
    std::vector<InstanceSource> instances;
    std::vector<std::string> methods;  // sca gds ls k8s lds cds
    std::vector<double> thetas;
    double alpha = 1.0;
    double epsilon = 0.5;
    int max_iters = 50;
    std::uint64_t subproblem_budget = 150000;
    std::uint64_t seed = 0;
    int jobs = 1;
    bool reallocation = true;
    std::string save_plans_dir;
};

struct CellResult {
    std::string instance_id;
    std::string method;
    double theta = 0.0;
    bool failed = false;
    std::string error;
    double f = 0.0;        // normalized utility, constant included
    double t_s = 0.0;
    double r_hopkb = 0.0;
    double t_ratio = 0.0;
    double r_ratio = 0.0;
    int iterations = 0;
    std::uint64_t nodes = 0;
    bool budget_exhausted = false;
    double runtime_s = 0.0;
    std::uint64_t est_peak_bytes = 0;
    Deployment deployment;
    std::map<int, ReallocationResult> realloc;
};

struct ExperimentReport {
    std::vector<CellResult> cells;
};

inline GeneratorParams params_for(const InstanceSource& src) {
    GeneratorParams p;
    if (src.preset == "table3" || src.preset.empty())
        p = table3_params();
    else if (src.preset == "nsfnet")
        p = nsfnet_params();
    else if (src.preset == "testbed5")
        p = testbed5_params();
    else
        throw BadInput("unknown preset: " + src.preset);
    p.seed = src.seed;
    if (src.apps) p.n_apps = *src.apps;
    if (src.servers) {
        p.n_servers = *src.servers;
        if (!p.topology.empty() && static_cast<int>(p.topology.size()) != p.n_servers.lo)
            p.topology.clear();  // override breaks the preset topology; fall back to random
    }
    if (src.services) p.services_per_app = *src.services;
    return p;
}

inline Instance materialize_instance(const InstanceSource& src) {
    if (!src.file.empty()) return instance_from_json(read_json_file(src.file)).instance;
    return generate_instance(params_for(src));
}

namespace detail {

inline Deployment run_method(const std::string& method, const Instance& inst, double theta,
                             const ExperimentConfig& cfg, ScaTrace* trace_out) {
    ScaConfig sc;
    sc.alpha = cfg.alpha;
    sc.epsilon = cfg.epsilon;
    sc.max_iters = cfg.max_iters;
    sc.subproblem_budget = cfg.subproblem_budget;
    sc.seed = cfg.seed;
    sc.theta = theta;
    if (method == "sca") {
        ScaResult r = sca_solve(inst, sc);
        if (trace_out) *trace_out = std::move(r.trace);
        return std::move(r.deployment);
    }
    if (method == "lds") {
        sc.theta = 1.0;
        ScaResult r = sca_solve(inst, sc);
        if (trace_out) *trace_out = std::move(r.trace);
        return std::move(r.deployment);
    }
    if (method == "cds") {
        sc.theta = 0.0;
        ScaResult r = sca_solve(inst, sc);
        if (trace_out) *trace_out = std::move(r.trace);
        return std::move(r.deployment);
    }
    if (method == "gds") return gds(inst, theta);
    if (method == "ls") return ls(inst);
    if (method == "k8s") return k8s_default(inst);
    throw BadInput("unknown method: " + method);
}

inline std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s)
        out.push_back((std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')
                          ? c
                          : '_');
    return out;
}

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace detail

inline CellResult run_cell(const Instance& augmented, const InstanceSource& src,
                           const std::string& method, double theta,
                           const ExperimentConfig& cfg) {
    CellResult cell;
    cell.instance_id = src.id();
    cell.method = method;
    cell.theta = theta;
    const auto start = std::chrono::steady_clock::now();
    try {
        ScaTrace trace;
        cell.deployment = detail::run_method(method, augmented, theta, cfg, &trace);
        const FeasibilityReport rep = check_feasibility(augmented, cell.deployment);
        if (!rep.ok) throw Error("method produced an infeasible deployment");

        cell.iterations = trace.iterates.empty() ? 0 : static_cast<int>(trace.iterates.size()) - 1;
        for (const auto& it : trace.iterates) cell.nodes += it.stats.nodes_expanded;
        cell.budget_exhausted = trace.budget_exhausted;

        cell.t_s = pull_delay(augmented, cell.deployment.d);
        cell.r_hopkb = communication_overhead(augmented, cell.deployment.x);
        const NormalizationBounds bounds = normalization_bounds(augmented);
        cell.f = utility(make_utility_config(bounds, theta, /*include_const=*/true), cell.t_s,
                         cell.r_hopkb);
        const BaselineMetrics base = baseline_metrics(augmented);
        cell.t_ratio = cell.t_s / base.pull_delay_s;
        cell.r_ratio = base.comm_overhead_kb > 0.0 ? cell.r_hopkb / base.comm_overhead_kb : 0.0;
        if (cfg.reallocation) cell.realloc = reallocate_deployment(augmented, cell.deployment);

        const std::size_t x_len = augmented.total_services() * augmented.servers.size();
        const bool sca_family = method == "sca" || method == "lds" || method == "cds";
        cell.est_peak_bytes =
            sca_family ? 2 * x_len * x_len * sizeof(double) +
                             cell.nodes * (2 * augmented.total_services() + 48)
                       : x_len * sizeof(double);
    } catch (const Error& e) {
        cell.failed = true;
        cell.error = e.what();
    }
    cell.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return cell;
}

/// Runs every (instance, method, theta) cell; per-cell failures are recorded
/// and the run continues.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    struct Prepared {
        InstanceSource src;
        Instance augmented;
    };
    std::vector<Prepared> prepared;
    prepared.reserve(cfg.instances.size());
    for (const auto& src : cfg.instances) {
        Instance inst = materialize_instance(src);
        if (!cfg.save_plans_dir.empty()) {
            // persist the generated instance next to the plans
            std::vector<std::vector<int>> adjacency(inst.servers.size(),
                                                    std::vector<int>(inst.servers.size(), 0));
            for (std::size_t a = 0; a < inst.servers.size(); ++a)
                for (std::size_t b = 0; b < inst.servers.size(); ++b)
                    adjacency[a][b] = inst.hops(static_cast<int>(a), static_cast<int>(b)) == 1;
            write_text_file(cfg.save_plans_dir + "/instance_" + detail::sanitize(src.id()) + ".json",
                            instance_to_json(inst, adjacency).dump(2) + "\n");
        }
        prepared.push_back({src, attach_virtual_sources(std::move(inst))});
    }

    struct CellSpec {
        std::size_t inst;
        std::string method;
        double theta;
    };
    std::vector<CellSpec> specs;
    for (std::size_t i = 0; i < prepared.size(); ++i)
        for (const auto& method : cfg.methods)
            for (double theta : cfg.thetas) specs.push_back({i, method, theta});

    ExperimentReport report;
    report.cells.resize(specs.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t at = cursor.fetch_add(1);
            if (at >= specs.size()) return;
            const auto& s = specs[at];
            report.cells[at] =
                run_cell(prepared[s.inst].augmented, prepared[s.inst].src, s.method, s.theta, cfg);
        }
    };
    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1 || specs.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min<int>(jobs, static_cast<int>(specs.size())); ++t)
            pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    if (!cfg.save_plans_dir.empty()) {
        for (const auto& cell : report.cells) {
            if (cell.failed) continue;
            json meta{{"method", cell.method}, {"theta", cell.theta}, {"instance", cell.instance_id}};
            const std::string name = cfg.save_plans_dir + "/plan_" +
                                     detail::sanitize(cell.instance_id) + "_" + cell.method +
                                     "_theta" + detail::fmt_double(cell.theta) + ".json";
            write_text_file(name, deployment_to_json(cell.deployment, meta).dump(2) + "\n");
        }
    }
    return report;
}

inline const char* csv_header() {
    return "instance,method,theta,feasible,F,T_s,R_hopKB,T_ratio,R_ratio,iterations,"
           "subproblem_nodes,budget_exhausted,error";
}

/// Deterministic rows: same config and seeds give identical bytes.
inline std::string report_csv(const ExperimentReport& report) {
    std::string out = csv_header();
    out += "\n";
    for (const auto& c : report.cells) {
        out += c.instance_id + "," + c.method + "," + detail::fmt_double(c.theta) + ",";
        out += c.failed ? "0," : "1,";
        out += detail::fmt_double(c.f) + "," + detail::fmt_double(c.t_s) + "," +
               detail::fmt_double(c.r_hopkb) + "," + detail::fmt_double(c.t_ratio) + "," +
               detail::fmt_double(c.r_ratio) + "," + std::to_string(c.iterations) + "," +
               std::to_string(c.nodes) + "," + (c.budget_exhausted ? "1" : "0") + "," +
               detail::sanitize(c.error);
        out += "\n";
    }
    return out;
}

inline json report_json(const ExperimentReport& report) {
    json cells = json::array();
    for (const auto& c : report.cells) {
        json jc;
        jc["instance"] = c.instance_id;
        jc["method"] = c.method;
        jc["theta"] = c.theta;
        jc["feasible"] = !c.failed;
        if (c.failed) jc["error"] = c.error;
        jc["F"] = c.f;
        jc["T_s"] = c.t_s;
        jc["R_hopKB"] = c.r_hopkb;
        jc["T_ratio"] = c.t_ratio;
        jc["R_ratio"] = c.r_ratio;
        jc["iterations"] = c.iterations;
        jc["subproblem_nodes"] = c.nodes;
        jc["budget_exhausted"] = c.budget_exhausted;
        jc["runtime_s"] = c.runtime_s;
        jc["est_peak_bytes"] = c.est_peak_bytes;
        json realloc = json::object();
        for (const auto& [server, res] : c.realloc) {
            json jr;
            jr["f_ghz"] = res.f;
            jr["e"] = res.e;
            jr["total_u_before"] = res.total_u_before;
            jr["total_u_after"] = res.total_u_after;
            realloc[std::to_string(server)] = std::move(jr);
        }
        jc["reallocation"] = std::move(realloc);
        cells.push_back(std::move(jc));
    }
    json j;
    j["format_version"] = 1;
    j["cells"] = std::move(cells);
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    try {
        ExperimentConfig cfg;
        for (const auto& ji : j.at("instances")) {
            InstanceSource src;
            if (ji.contains("file")) src.file = ji.at("file").get<std::string>();
            if (ji.contains("preset")) src.preset = ji.at("preset").get<std::string>();
            if (ji.contains("seed")) src.seed = ji.at("seed").get<std::uint64_t>();
            auto range = [&](const char* key) -> std::optional<IntRange> {
                if (!ji.contains(key)) return std::nullopt;
                const auto& r = ji.at(key);
                if (r.is_number_integer()) return IntRange{r.get<int>(), r.get<int>()};
                return IntRange{r.at(0).get<int>(), r.at(1).get<int>()};
            };
            src.apps = range("apps");
            src.servers = range("servers");
            src.services = range("services");
            if (src.file.empty() && src.preset.empty())
                throw BadInput("instance source needs file or preset");
            cfg.instances.push_back(std::move(src));
        }
        cfg.methods = j.at("methods").get<std::vector<std::string>>();
        cfg.thetas = j.at("thetas").get<std::vector<double>>();
        if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
        if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
        if (j.contains("max_iters")) cfg.max_iters = j.at("max_iters").get<int>();
        if (j.contains("subproblem_budget"))
            cfg.subproblem_budget = j.at("subproblem_budget").get<std::uint64_t>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
        if (j.contains("reallocation")) cfg.reallocation = j.at("reallocation").get<bool>();
        if (j.contains("save_plans_dir"))
            cfg.save_plans_dir = j.at("save_plans_dir").get<std::string>();
        return cfg;
    } catch (const json::exception& e) {
        throw BadInput(std::string("config_from_json: ") + e.what());
    }
}

} // namespace msdeploy
