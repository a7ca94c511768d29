#pragma once

// Shared fixtures and independent oracles for the test suite. Oracles
// deliberately re-derive results from first principles (Floyd-Warshall,
// set unions, exhaustive enumeration, scalar double sums) so they share no
// code path with the implementations they check.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "msdeploy/generator.hpp"
#include "msdeploy/model.hpp"
#include "msdeploy/sca.hpp"
#include "msdeploy/vectorize.hpp"

namespace testutil {

using namespace msdeploy;

// -------------------------------------------------------------- fixtures --

/// Two servers, one app with two real services sharing one layer.
inline Instance tiny_instance() {
    Instance inst;
    inst.servers = {Server{0, 4.0, 4000.0, 120.0}, Server{1, 4.0, 4000.0, 160.0}};
    inst.layers = {Layer{0, 500.0}, Layer{1, 300.0}, Layer{2, 200.0}};
    Application app;
    app.id = 0;
    app.source_server = 0;
    app.ingress_kb = 400.0;
    Microservice a;
    a.app = 0;
    a.idx = 0;
    a.cpu_demand_ghz = 1.0;
    a.layers = {0, 1};
    Microservice b;
    b.app = 0;
    b.idx = 1;
    b.cpu_demand_ghz = 0.5;
    b.layers = {1, 2};
    app.services = {a, b};
    app.traffic = Matrix(2, 2, 0.0);
    app.traffic(0, 1) = 800.0;
    inst.apps = {app};
    inst.hops = build_hop_matrix({{0, 1}, {1, 0}});
    return inst;
}

/// Small random instances that stay enumerable: n servers, total real
/// services bounded by max_services.
inline Instance small_instance(std::uint64_t seed, int n_servers = 3, int apps_lo = 1,
                               int apps_hi = 2, int services_lo = 2, int services_hi = 3) {
    GeneratorParams p;
    p.seed = seed;
    p.n_servers = {n_servers, n_servers};
    p.n_apps = {apps_lo, apps_hi};
    p.services_per_app = {services_lo, services_hi};
    return generate_instance(p);
}

// --------------------------------------------------------------- oracles --

/// All-pairs shortest hops by Floyd-Warshall (the implementation uses BFS).
inline std::vector<std::vector<int>> floyd_warshall(const std::vector<std::vector<int>>& adj) {
    const int n = static_cast<int>(adj.size());
    const int inf = std::numeric_limits<int>::max() / 4;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (int i = 0; i < n; ++i) d[i][i] = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (adj[i][j]) d[i][j] = 1;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    return d;
}

/// Per-server set union of service layers.
inline LayerPulls pulls_by_set_union(const Instance& inst, const Placement& x) {
    LayerPulls d(inst.servers.size(),
                 std::vector<std::uint8_t>(inst.layers.size(), 0));
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i)
            for (int l : inst.apps[k].services[i].layers)
                d[static_cast<std::size_t>(x[k][i])][static_cast<std::size_t>(l)] = 1;
    return d;
}

/// Scalar double-sum pull delay.
inline double scalar_pull_delay(const Instance& inst, const LayerPulls& d) {
    double t = 0.0;
    for (std::size_t n = 0; n < inst.servers.size(); ++n) {
        double bytes = 0.0;
        for (std::size_t l = 0; l < inst.layers.size(); ++l)
            if (d[n][l]) bytes += inst.layers[l].size_mb;
        t += bytes / inst.servers[n].cloud_bw_mbps;
    }
    return t;
}

/// Scalar triple-sum communication overhead.
inline double scalar_comm_overhead(const Instance& inst, const Placement& x) {
    double r = 0.0;
    for (std::size_t k = 0; k < inst.apps.size(); ++k) {
        const auto& app = inst.apps[k];
        for (std::size_t i = 0; i < app.services.size(); ++i)
            for (std::size_t j = 0; j < app.services.size(); ++j)
                r += app.traffic(i, j) * inst.hops(x[k][i], x[k][j]);
    }
    return r;
}

/// Direct re-evaluation of the feasibility constraints.
inline bool oracle_feasible(const Instance& inst, const Placement& x) {
    const LayerPulls d = pulls_by_set_union(inst, x);
    for (std::size_t n = 0; n < inst.servers.size(); ++n) {
        double bytes = 0.0;
        for (std::size_t l = 0; l < inst.layers.size(); ++l)
            if (d[n][l]) bytes += inst.layers[l].size_mb;
        if (bytes > inst.servers[n].storage_mb + 1e-9) return false;
    }
    std::vector<double> cpu(inst.servers.size(), 0.0);
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i)
            cpu[static_cast<std::size_t>(x[k][i])] += inst.apps[k].services[i].cpu_demand_ghz;
    for (std::size_t n = 0; n < inst.servers.size(); ++n)
        if (cpu[n] > inst.servers[n].cpu_ghz + 1e-9) return false;
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        if (x[k][0] != inst.apps[k].source_server) return false;
    return true;
}

/// Enumerates every placement of the real services of an augmented instance,
/// invoking fn(placement) for each feasible one.
template <typename Fn>
inline void for_each_feasible_placement(const Instance& inst, Fn&& fn) {
    std::vector<std::pair<int, int>> slots;
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i)
            if (!inst.apps[k].services[i].is_virtual)
                slots.emplace_back(static_cast<int>(k), static_cast<int>(i));
    const int n = inst.n_servers();
    Placement x(inst.apps.size());
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        x[k].assign(inst.apps[k].services.size(), inst.apps[k].source_server);

    std::vector<int> choice(slots.size(), 0);
    for (;;) {
        for (std::size_t s = 0; s < slots.size(); ++s)
            x[static_cast<std::size_t>(slots[s].first)][static_cast<std::size_t>(slots[s].second)] =
                choice[s];
        if (oracle_feasible(inst, x)) fn(const_cast<const Placement&>(x));
        std::size_t at = 0;
        while (at < choice.size()) {
            if (++choice[at] < n) break;
            choice[at] = 0;
            ++at;
        }
        if (at == choice.size()) break;
    }
}

struct EnumerationResult {
    double min_cost = std::numeric_limits<double>::infinity();
    Placement argmin;
    bool found = false;
};

/// Counts real services whose server differs between two placements.
inline double count_moves(const Instance& inst, const Placement& a, const Placement& b) {
    double moves = 0.0;
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i)
            if (!inst.apps[k].services[i].is_virtual && a[k][i] != b[k][i]) moves += 1.0;
    return moves;
}

/// Exhaustive oracle for the subproblem: scalar-form objective
/// c1 T + c2 R + c2 lambda * moves over every feasible placement (valid for
/// binary reference points).
inline EnumerationResult enumerate_subproblem(const Instance& inst, const SubproblemSpec& spec) {
    const double c1 = spec.ucfg.c1();
    const double c2 = spec.ucfg.c2();
    const double lam = spec.split->lambda_q;
    const Placement ref = spec.model->decode_x(spec.x_bar);
    EnumerationResult res;
    for_each_feasible_placement(inst, [&](const Placement& x) {
        const LayerPulls d = pulls_by_set_union(inst, x);
        const double cost = c1 * scalar_pull_delay(inst, d) +
                            c2 * scalar_comm_overhead(inst, x) +
                            c2 * lam * count_moves(inst, ref, x);
        if (cost < res.min_cost) {
            res.min_cost = cost;
            res.argmin = x;
            res.found = true;
        }
    });
    return res;
}

/// Exhaustive oracle for the full problem at one theta: min c1 T + c2 R.
inline EnumerationResult enumerate_best_utility(const Instance& inst, const UtilityConfig& ucfg) {
    EnumerationResult res;
    for_each_feasible_placement(inst, [&](const Placement& x) {
        const double cost = ucfg.c1() * scalar_pull_delay(inst, pulls_by_set_union(inst, x)) +
                            ucfg.c2() * scalar_comm_overhead(inst, x);
        if (cost < res.min_cost) {
            res.min_cost = cost;
            res.argmin = x;
            res.found = true;
        }
    });
    return res;
}

/// Deterministic pseudo-random feasible placement (rejection sampling over
/// uniform assignments; falls back to the first-fit point if unlucky).
inline Placement random_feasible_placement(const Instance& inst, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::pair<int, int>> slots;
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i)
            if (!inst.apps[k].services[i].is_virtual)
                slots.emplace_back(static_cast<int>(k), static_cast<int>(i));
    Placement x(inst.apps.size());
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        x[k].assign(inst.apps[k].services.size(), inst.apps[k].source_server);
    for (int attempt = 0; attempt < 400; ++attempt) {
        for (const auto& [k, i] : slots)
            x[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] =
                rng.uniform_int(0, inst.n_servers() - 1);
        if (oracle_feasible(inst, x)) return x;
    }
    auto [fx, fd] = initial_feasible(inst, seed);
    return fx;
}

} // namespace testutil
