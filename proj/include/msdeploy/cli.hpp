#pragma once

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msdeploy/baselines.hpp"
#include "msdeploy/experiment.hpp"
#include "msdeploy/generator.hpp"
#include "msdeploy/io.hpp"
#include "msdeploy/reallocation.hpp"
#include "msdeploy/sca.hpp"

// Command-line front end. Exit codes: 0 success, 1 infeasible problem,
// 2 bad input or usage.

namespace msdeploy {

namespace cli_detail {

inline int solve_cmd(const std::string& instance_path, const std::string& method, double theta,
                     double alpha, double epsilon, int max_iters, std::uint64_t budget,
                     std::uint64_t seed, const std::string& out_path,
                     const std::string& trace_path, std::ostream& out, std::ostream& err) {
    const Instance inst =
        attach_virtual_sources(instance_from_json(read_json_file(instance_path)).instance);

    ExperimentConfig cfg;
    cfg.alpha = alpha;
    cfg.epsilon = epsilon;
    cfg.max_iters = max_iters;
    cfg.subproblem_budget = budget;
    cfg.seed = seed;

    ScaTrace trace;
    const Deployment dep = detail::run_method(method, inst, theta, cfg, &trace);
    const FeasibilityReport rep = check_feasibility(inst, dep);
    if (!rep.ok) {
        err << "infeasible deployment produced";
        for (const auto& v : rep.violations) err << "\n  " << v.detail;
        err << "\n";
        return 1;
    }
    if (trace.budget_exhausted)
        err << "warning: subproblem node budget exhausted; plan may be suboptimal\n";

    const double t = pull_delay(inst, dep.d);
    const double r = communication_overhead(inst, dep.x);
    const double f = utility(make_utility_config(normalization_bounds(inst), theta), t, r);
    out << "method=" << method << " theta=" << theta << " F=" << f << " T_s=" << t
        << " R_hopKB=" << r << "\n";

    json meta{{"method", method}, {"theta", theta}, {"instance", instance_path},
              {"F", f},           {"T_s", t},       {"R_hopKB", r}};
    if (!out_path.empty()) write_text_file(out_path, deployment_to_json(dep, meta).dump(2) + "\n");
    if (!trace_path.empty()) write_trace_file(trace_path, trace);
    return 0;
}

} // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"microservice deployment planner balancing layer and chain sharing"};
    app.require_subcommand(1);

    // generate
    std::string gen_preset = "table3";
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    int gen_servers = -1, gen_apps = -1, gen_services = -1;
    auto* gen = app.add_subcommand("generate", "draw a random instance and write it as JSON");
    gen->add_option("--preset", gen_preset, "table3|nsfnet|testbed5")->capture_default_str();
    gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
    gen->add_option("--out", gen_out, "output instance file")->required();
    gen->add_option("--servers", gen_servers, "fix the server count");
    gen->add_option("--apps", gen_apps, "fix the application count");
    gen->add_option("--services", gen_services, "fix the services-per-app count");

    // solve
    std::string sol_instance, sol_method = "sca", sol_out, sol_trace;
    double sol_theta = 0.5, sol_alpha = 1.0, sol_epsilon = 0.5;
    int sol_iters = 50;
    std::uint64_t sol_budget = 150000, sol_seed = 0;
    auto* sol = app.add_subcommand("solve", "compute a deployment plan for one instance");
    sol->add_option("--instance", sol_instance, "instance JSON file")->required();
    sol->add_option("--method", sol_method, "sca|gds|ls|k8s|lds|cds")->capture_default_str();
    sol->add_option("--theta", sol_theta, "delay-vs-overhead weight in [0,1]")->capture_default_str();
    sol->add_option("--alpha", sol_alpha, "step size in (0,1]")->capture_default_str();
    sol->add_option("--epsilon", sol_epsilon, "convergence tolerance")->capture_default_str();
    sol->add_option("--max-iters", sol_iters, "iteration cap")->capture_default_str();
    sol->add_option("--budget", sol_budget, "subproblem node budget")->capture_default_str();
    sol->add_option("--seed", sol_seed, "seed")->capture_default_str();
    sol->add_option("--out", sol_out, "deployment JSON output");
    sol->add_option("--trace", sol_trace, "iteration trace output (JSON lines)");

    // compare
    std::string cmp_config, cmp_out;
    auto* cmp = app.add_subcommand("compare", "run an experiment config across methods");
    cmp->add_option("--config", cmp_config, "experiment config JSON")->required();
    cmp->add_option("--out", cmp_out, "output prefix (<out>.csv and <out>.json)")->required();

    // reallocate
    std::string re_instance, re_plan, re_out;
    auto* rea = app.add_subcommand("reallocate", "redistribute per-server cpu for a plan");
    rea->add_option("--instance", re_instance, "instance JSON file")->required();
    rea->add_option("--plan", re_plan, "deployment JSON file")->required();
    rea->add_option("--out", re_out, "reallocation JSON output");

    // report
    std::string rep_in, rep_out;
    auto* rep = app.add_subcommand("report", "re-render the CSV from a JSON report");
    rep->add_option("--in", rep_in, "experiment report JSON")->required();
    rep->add_option("--out", rep_out, "CSV output file")->required();

    std::vector<std::string> argv = args;
    std::reverse(argv.begin(), argv.end());  // CLI11 consumes in reverse
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            out << app.help();
            return 0;
        }
        err << e.what() << "\n";
        return 2;
    }

    try {
        if (gen->parsed()) {
            GeneratorParams p;
            InstanceSource src;
            src.preset = gen_preset;
            src.seed = gen_seed;
            if (gen_servers > 0) src.servers = IntRange{gen_servers, gen_servers};
            if (gen_apps > 0) src.apps = IntRange{gen_apps, gen_apps};
            if (gen_services > 0) src.services = IntRange{gen_services, gen_services};
            p = params_for(src);
            const Instance inst = generate_instance(p);
            std::vector<std::vector<int>> adjacency(inst.servers.size(),
                                                    std::vector<int>(inst.servers.size(), 0));
            for (std::size_t a = 0; a < inst.servers.size(); ++a)
                for (std::size_t b = 0; b < inst.servers.size(); ++b)
                    adjacency[a][b] = inst.hops(static_cast<int>(a), static_cast<int>(b)) == 1;
            write_text_file(gen_out, instance_to_json(inst, adjacency).dump(2) + "\n");
            out << "wrote " << gen_out << " (" << inst.servers.size() << " servers, "
                << inst.apps.size() << " apps, " << inst.layers.size() << " layers)\n";
            return 0;
        }
        if (sol->parsed())
            return cli_detail::solve_cmd(sol_instance, sol_method, sol_theta, sol_alpha,
                                         sol_epsilon, sol_iters, sol_budget, sol_seed, sol_out,
                                         sol_trace, out, err);
        if (cmp->parsed()) {
            const ExperimentConfig cfg = config_from_json(read_json_file(cmp_config));
            const ExperimentReport report = run_experiment(cfg);
            write_text_file(cmp_out + ".csv", report_csv(report));
            write_text_file(cmp_out + ".json", report_json(report).dump(2) + "\n");
            int failures = 0;
            for (const auto& c : report.cells) failures += c.failed ? 1 : 0;
            out << report.cells.size() << " cells, " << failures << " failures -> " << cmp_out
                << ".csv\n";
            for (const auto& c : report.cells)
                if (c.budget_exhausted)
                    err << "warning: budget exhausted on " << c.instance_id << " " << c.method
                        << " theta=" << c.theta << "\n";
            return failures == static_cast<int>(report.cells.size()) && !report.cells.empty() ? 1
                                                                                              : 0;
        }
        if (rea->parsed()) {
            const Instance inst =
                attach_virtual_sources(instance_from_json(read_json_file(re_instance)).instance);
            const Deployment dep = deployment_from_json(inst, read_json_file(re_plan));
            const FeasibilityReport frep = check_feasibility(inst, dep);
            if (!frep.ok) {
                err << "plan is infeasible for this instance\n";
                return 1;
            }
            const auto realloc = reallocate_deployment(inst, dep);
            json j;
            j["format_version"] = 1;
            for (const auto& [server, res] : realloc) {
                json table = json::array();
                std::size_t idx = 0;
                for (std::size_t k = 0; k < inst.apps.size(); ++k)
                    for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i) {
                        const auto& ms = inst.apps[k].services[i];
                        if (ms.is_virtual || ms.cpu_demand_ghz <= 0.0 || dep.x[k][i] != server)
                            continue;
                        table.push_back({{"app", k},
                                         {"service", i},
                                         {"u_ghz", ms.cpu_demand_ghz},
                                         {"f_ghz", res.f[idx]},
                                         {"e", res.e[idx]}});
                        ++idx;
                    }
                j["servers"][std::to_string(server)] = {{"allocations", std::move(table)},
                                                        {"total_u_before", res.total_u_before},
                                                        {"total_u_after", res.total_u_after}};
            }
            const std::string text = j.dump(2) + "\n";
            if (re_out.empty())
                out << text;
            else
                write_text_file(re_out, text);
            return 0;
        }
        if (rep->parsed()) {
            const json j = read_json_file(rep_in);
            ExperimentReport report;
            for (const auto& jc : j.at("cells")) {
                CellResult c;
                c.instance_id = jc.at("instance").get<std::string>();
                c.method = jc.at("method").get<std::string>();
                c.theta = jc.at("theta").get<double>();
                c.failed = !jc.at("feasible").get<bool>();
                if (jc.contains("error")) c.error = jc.at("error").get<std::string>();
                c.f = jc.at("F").get<double>();
                c.t_s = jc.at("T_s").get<double>();
                c.r_hopkb = jc.at("R_hopKB").get<double>();
                c.t_ratio = jc.at("T_ratio").get<double>();
                c.r_ratio = jc.at("R_ratio").get<double>();
                c.iterations = jc.at("iterations").get<int>();
                c.nodes = jc.at("subproblem_nodes").get<std::uint64_t>();
                c.budget_exhausted = jc.at("budget_exhausted").get<bool>();
                report.cells.push_back(std::move(c));
            }
            write_text_file(rep_out, report_csv(report));
            out << "wrote " << rep_out << "\n";
            return 0;
        }
    } catch (const InfeasibleInstance& e) {
        err << e.what() << "\n";
        return 1;
    } catch (const NoFeasiblePoint& e) {
        err << e.what() << "\n";
        return 1;
    } catch (const OverSubscribed& e) {
        err << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        err << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        err << e.what() << "\n";
        return 2;
    }
    return 2;
}

} // namespace msdeploy
