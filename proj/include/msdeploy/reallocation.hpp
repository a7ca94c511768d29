#pragma once

#include <map>
#include <vector>

#include "msdeploy/errors.hpp"
#include "msdeploy/model.hpp"

// Post-placement cpu reallocation: once a server's set of services is fixed,
// spare cpu is handed out in proportion to each service's request,
// f_j = u_j * C / sum(u), which exhausts the capacity, keeps every f_j above
// its request, and equalizes the speedup factor across the server.

namespace msdeploy {

struct ReallocationResult {
    std::vector<double> f;        // allocated GHz per service
    std::vector<double> e;        // evaluation values u_j / f_j
    double total_u_before = 0.0;  // sum of u_j/u_j, i.e. the service count
    double total_u_after = 0.0;   // sum of u_j/f_j
};

/// Closed-form proportional reallocation. Demands must be positive and sum
/// to at most the capacity (guaranteed upstream by any feasible deployment).
inline ReallocationResult reallocate(double capacity, const std::vector<double>& demands) {
    double total = 0.0;
    for (double u : demands) {
        if (u <= 0.0) throw BadInput("reallocate: demands must be positive");
        total += u;
    }
    if (total > capacity + 1e-9)
        throw OverSubscribed("reallocate: total demand exceeds capacity");

    ReallocationResult res;
    res.f.reserve(demands.size());
    res.e.reserve(demands.size());
    for (double u : demands) {
        const double f = u * capacity / total;
        res.f.push_back(f);
        res.e.push_back(u / f);
        res.total_u_after += u / f;
    }
    res.total_u_before = static_cast<double>(demands.size());
    return res;
}

/// Ideal processing time of a workload on an allocated share.
inline double processing_time(double data, double f) {
    if (f <= 0.0) throw BadInput("processing_time: allocation must be positive");
    return data / f;
}

/// Applies the closed form per server over its hosted services' demands.
/// Virtual sources have zero demand and are excluded; servers hosting
/// nothing (or only virtual sources) get no entry.
inline std::map<int, ReallocationResult> reallocate_deployment(const Instance& inst,
                                                               const Deployment& dep) {
    std::map<int, std::vector<double>> demands;
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i) {
            const auto& ms = inst.apps[k].services[i];
            if (ms.is_virtual || ms.cpu_demand_ghz <= 0.0) continue;
            demands[dep.x[k][i]].push_back(ms.cpu_demand_ghz);
        }
    std::map<int, ReallocationResult> out;
    for (const auto& [server, u] : demands)
        out.emplace(server, reallocate(inst.servers[static_cast<std::size_t>(server)].cpu_ghz, u));
    return out;
}

} // namespace msdeploy
