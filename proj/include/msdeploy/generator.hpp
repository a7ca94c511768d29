#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "msdeploy/errors.hpp"
#include "msdeploy/model.hpp"
#include "msdeploy/sca.hpp"
#include "msdeploy/split.hpp"

// Random instance generation over the experimental parameter ranges, plus
// fixed topology presets. Sampling is uniform over each range with a
// self-contained PRNG so identical seeds give identical instances on any
// platform.

namespace msdeploy {

struct Range {
    double lo = 0.0, hi = 0.0;
};
struct IntRange {
    int lo = 0, hi = 0;
};

struct GeneratorParams {
    IntRange n_apps{4, 9};
    IntRange n_servers{4, 9};
    IntRange services_per_app{2, 6};
    Range cpu_capacity{1.4, 2.2};       // GHz
    Range storage{4096.0, 16384.0};     // MB
    Range bandwidth{120.0, 200.0};      // MB/s
    Range layer_size{1.0, 1220.0};      // MB
    Range cpu_demand{0.002, 1.0};       // GHz
    IntRange layers_per_image{1, 2};
    Range traffic{100.0, 2000.0};       // KB
    int max_hops = 5;
    std::uint64_t seed = 0;

    // plumbing knobs
    double layer_pool_factor = 0.75;    // shared layer pool size vs service count
    int max_retries = 100;
    std::vector<std::vector<int>> topology;  // fixed adjacency; empty = random
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ 0x9E3779B97F4A7C15ull) {}
    std::uint64_t next() { return detail::splitmix64(state_); }
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1p-53;
    }
    double uniform(const Range& r) { return uniform(r.lo, r.hi); }
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    int uniform_int(const IntRange& r) { return uniform_int(r.lo, r.hi); }
    bool coin(double p) { return uniform(0.0, 1.0) < p; }

private:
    std::uint64_t state_;
};

/// Table-of-experimental-parameters preset (the library default ranges).
inline GeneratorParams table3_params() { return {}; }

/// Five-server preset mirroring the physical edge-server testbed ranges:
/// images 1.24-1098 MB, demands 0.2-1.4 GHz.
inline GeneratorParams testbed5_params() {
    GeneratorParams p;
    p.n_servers = {5, 5};
    p.n_apps = {4, 8};
    p.cpu_capacity = {3.2, 4.0};
    p.layer_size = {1.24, 1098.0};
    p.cpu_demand = {0.2, 1.4};
    return p;
}

/// US NSFNET T1 backbone as a 15-site edge network: the canonical 14-node
/// T1 edge list plus the second DC-area site attached to NJ and MD.
inline std::vector<std::vector<int>> nsfnet_topology() {
    constexpr int kNodes = 15;
    static const int edges[][2] = {
        {0, 1},  {0, 2},  {0, 7},  {1, 2},   {1, 3},   {2, 5},   {3, 4},   {3, 10},
        {4, 5},  {4, 6},  {5, 9},  {5, 12},  {6, 7},   {7, 8},   {8, 9},   {8, 11},
        {8, 13}, {10, 11}, {10, 13}, {11, 12}, {12, 13}, {11, 14}, {12, 14},
    };
    std::vector<std::vector<int>> adj(kNodes, std::vector<int>(kNodes, 0));
    for (const auto& e : edges) {
        adj[static_cast<std::size_t>(e[0])][static_cast<std::size_t>(e[1])] = 1;
        adj[static_cast<std::size_t>(e[1])][static_cast<std::size_t>(e[0])] = 1;
    }
    return adj;
}

/// 15-server large-scale preset on the NSFNET topology: 16 GB storage,
/// 4 x 1.6 GHz cpu, 80-120 MB/s downlinks.
inline GeneratorParams nsfnet_params() {
    GeneratorParams p;
    p.n_servers = {15, 15};
    p.n_apps = {12, 26};
    p.storage = {16384.0, 16384.0};
    p.cpu_capacity = {6.4, 6.4};
    p.bandwidth = {80.0, 120.0};
    p.topology = nsfnet_topology();
    return p;
}

namespace detail {

inline std::vector<std::vector<int>> random_connected_topology(Rng& rng, int n, int max_hops) {
    double extra_edge_prob = 0.25;
    for (int attempt = 0; attempt < 50; ++attempt) {
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(n),
                                          std::vector<int>(static_cast<std::size_t>(n), 0));
        for (int v = 1; v < n; ++v) {
            const int u = rng.uniform_int(0, v - 1);
            adj[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] = 1;
            adj[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] = 1;
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (!adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] &&
                    rng.coin(extra_edge_prob)) {
                    adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
                    adj[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = 1;
                }
        if (build_hop_matrix(adj).max_hops() <= max_hops) return adj;
        extra_edge_prob = std::min(0.95, extra_edge_prob + 0.15);
    }
    throw GenerationFailed("random_connected_topology: hop diameter cap unreachable");
}

} // namespace detail

/// Draws an instance from the parameter ranges. The result is unaugmented
/// (no virtual sources yet), validates cleanly, and admits a feasible
/// deployment; infeasible draws are resampled up to the retry cap.
inline Instance generate_instance(const GeneratorParams& params) {
    Rng rng(params.seed);
    for (int attempt = 0; attempt < params.max_retries; ++attempt) {
        Instance inst;
        const int n = rng.uniform_int(params.n_servers);
        if (!params.topology.empty() && static_cast<int>(params.topology.size()) != n)
            throw BadInput("generate_instance: fixed topology size differs from n_servers");

        inst.servers.reserve(static_cast<std::size_t>(n));
        for (int s = 0; s < n; ++s)
            inst.servers.push_back(Server{s, rng.uniform(params.cpu_capacity),
                                          rng.uniform(params.storage),
                                          rng.uniform(params.bandwidth)});

        const auto adjacency = params.topology.empty()
                                   ? detail::random_connected_topology(rng, n, params.max_hops)
                                   : params.topology;
        inst.hops = build_hop_matrix(adjacency);

        const int k_apps = rng.uniform_int(params.n_apps);
        std::vector<int> services_per_app(static_cast<std::size_t>(k_apps));
        int total_services = 0;
        for (int k = 0; k < k_apps; ++k) {
            services_per_app[static_cast<std::size_t>(k)] = rng.uniform_int(params.services_per_app);
            total_services += services_per_app[static_cast<std::size_t>(k)];
        }

        const int pool = std::max(4, static_cast<int>(std::lround(
                                          params.layer_pool_factor * total_services)));
        inst.layers.reserve(static_cast<std::size_t>(pool));
        for (int l = 0; l < pool; ++l)
            inst.layers.push_back(Layer{l, rng.uniform(params.layer_size)});

        for (int k = 0; k < k_apps; ++k) {
            Application app;
            app.id = k;
            app.source_server = rng.uniform_int(0, n - 1);
            app.ingress_kb = rng.uniform(params.traffic);
            const int a = services_per_app[static_cast<std::size_t>(k)];
            for (int i = 0; i < a; ++i) {
                Microservice ms;
                ms.app = k;
                ms.idx = i;
                ms.cpu_demand_ghz = rng.uniform(params.cpu_demand);
                const int count = rng.uniform_int(params.layers_per_image);
                while (static_cast<int>(ms.layers.size()) < count) {
                    const int l = rng.uniform_int(0, pool - 1);
                    if (std::find(ms.layers.begin(), ms.layers.end(), l) == ms.layers.end())
                        ms.layers.push_back(l);
                }
                std::sort(ms.layers.begin(), ms.layers.end());
                app.services.push_back(std::move(ms));
            }
            // chain i -> i+1, optionally re-attaching the tail to an earlier
            // service as a single branch
            app.traffic = Matrix(static_cast<std::size_t>(a), static_cast<std::size_t>(a), 0.0);
            const bool branch = a >= 3 && rng.coin(0.5);
            const int branch_src = branch ? rng.uniform_int(0, a - 3) : -1;
            for (int i = 0; i + 1 < a; ++i) {
                if (branch && i + 1 == a - 1) break;
                app.traffic(static_cast<std::size_t>(i), static_cast<std::size_t>(i + 1)) =
                    rng.uniform(params.traffic);
            }
            if (branch)
                app.traffic(static_cast<std::size_t>(branch_src), static_cast<std::size_t>(a - 1)) =
                    rng.uniform(params.traffic);
            inst.apps.push_back(std::move(app));
        }

        try {
            inst.validate();
            const Instance probe = attach_virtual_sources(inst);
            initial_feasible(probe, params.seed);
        } catch (const Error&) {
            continue;  // resample
        }
        return inst;
    }
    throw GenerationFailed("generate_instance: no feasible draw within the retry cap");
}

} // namespace msdeploy
