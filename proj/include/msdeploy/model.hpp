#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "msdeploy/errors.hpp"
#include "msdeploy/matrix.hpp"

// Core domain model: servers, container layers, applications made of
// microservice chains, hop topology, and deployments (placement + the
// per-server layer pulls it induces).
//
// Units are fixed across the library: sizes in MB, bandwidth in MB/s,
// traffic in KB, cpu in GHz, delay in seconds, overhead in hop*KB.

namespace msdeploy {

struct Layer {
    int id = 0;
    double size_mb = 0.0;
};

struct Microservice {
    int app = 0;                 // owning application id
    int idx = 0;                 // position within the app (0 = virtual source)
    double cpu_demand_ghz = 0.0;
    std::vector<int> layers;     // sorted, distinct layer ids
    bool is_virtual = false;
};

struct Application {
    int id = 0;
    int source_server = 0;       // edge server adjacent to the request source
    double ingress_kb = 0.0;     // data volume on the virtual-source edge
    std::vector<Microservice> services;  // services[i].idx == i
    Matrix traffic;              // KB; traffic(i,j) > 0 only on chain edges
};

struct Server {
    int id = 0;
    double cpu_ghz = 0.0;
    double storage_mb = 0.0;
    double cloud_bw_mbps = 0.0;  // downlink from the image registry
};

/// Symmetric matrix of shortest-path hop counts between servers.
class HopMatrix {
public:
    HopMatrix() = default;
    explicit HopMatrix(int n) : n_(n), hops_(static_cast<std::size_t>(n) * n, 0) {}

    int size() const { return n_; }
    int operator()(int a, int b) const { return hops_[static_cast<std::size_t>(a) * n_ + b]; }
    int& at(int a, int b) { return hops_[static_cast<std::size_t>(a) * n_ + b]; }

    int max_hops() const {
        int m = 0;
        for (int h : hops_) m = std::max(m, h);
        return m;
    }

private:
    int n_ = 0;
    std::vector<int> hops_;
};

struct Instance {
    std::vector<Server> servers;
    std::vector<Layer> layers;
    std::vector<Application> apps;
    HopMatrix hops;
    bool augmented = false;  // virtual sources attached

    int n_servers() const { return static_cast<int>(servers.size()); }
    int n_layers() const { return static_cast<int>(layers.size()); }
    int n_apps() const { return static_cast<int>(apps.size()); }

    std::size_t total_services() const {
        std::size_t n = 0;
        for (const auto& app : apps) n += app.services.size();
        return n;
    }

    double image_size_mb(const Microservice& ms) const {
        double s = 0.0;
        for (int l : ms.layers) s += layers[static_cast<std::size_t>(l)].size_mb;
        return s;
    }

    double total_cpu_demand() const {
        double s = 0.0;
        for (const auto& app : apps)
            for (const auto& ms : app.services) s += ms.cpu_demand_ghz;
        return s;
    }

    double total_cpu_capacity() const {
        double s = 0.0;
        for (const auto& srv : servers) s += srv.cpu_ghz;
        return s;
    }

    /// Structural checks on a constructed instance. Throws BadInput on
    /// inconsistent ids/dimensions and InfeasibleInstance when total cpu
    /// demand exceeds total capacity.
    void validate() const;
};

/// Dense placement encoding: x[k][i] = hosting server of service i of app k.
/// Uniqueness of placement (one server per service) holds by construction.
using Placement = std::vector<std::vector<int>>;

/// pulls[n][l] = 1 iff layer l is downloaded to server n.
using LayerPulls = std::vector<std::vector<std::uint8_t>>;

struct Deployment {
    Placement x;
    LayerPulls d;
};

struct Violation {
    enum class Kind { ServerRange, LayerInduction, Storage, Cpu, VirtualPin };
    Kind kind;
    int server = -1;  // offending server (when applicable)
    int app = -1;
    int service = -1;
    double slack = 0.0;  // negative = amount by which the constraint is broken
    std::string detail;
};

struct FeasibilityReport {
    bool ok = true;
    std::vector<Violation> violations;
};

// ---------------------------------------------------------------------------

/// Shortest-path hop counts via BFS from every server.
/// Throws BadInput for non-symmetric adjacency or nonzero diagonal and
/// DisconnectedTopology when some pair is unreachable.
inline HopMatrix build_hop_matrix(const std::vector<std::vector<int>>& adjacency) {
    const int n = static_cast<int>(adjacency.size());
    if (n == 0) throw BadInput("build_hop_matrix: empty adjacency");
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(adjacency[i].size()) != n)
            throw BadInput("build_hop_matrix: adjacency not square");
        if (adjacency[i][i] != 0)
            throw BadInput("build_hop_matrix: nonzero diagonal");
        for (int j = 0; j < n; ++j)
            if ((adjacency[i][j] != 0) != (adjacency[j][i] != 0))
                throw BadInput("build_hop_matrix: adjacency not symmetric");
    }

    HopMatrix hm(n);
    std::vector<int> dist(n);
    std::deque<int> queue;
    for (int src = 0; src < n; ++src) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[src] = 0;
        queue.clear();
        queue.push_back(src);
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            for (int w = 0; w < n; ++w) {
                if (adjacency[v][w] != 0 && dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        for (int t = 0; t < n; ++t) {
            if (dist[t] < 0) {
                std::ostringstream os;
                os << "build_hop_matrix: servers " << src << " and " << t << " unreachable";
                throw DisconnectedTopology(os.str());
            }
            hm.at(src, t) = dist[t];
        }
    }
    return hm;
}

/// Prepends the zero-cost virtual source service to every application and
/// extends the traffic matrix with the ingress edge source -> first service.
/// The virtual source is pinned to the app's source_server by every solver.
inline Instance attach_virtual_sources(Instance inst) {
    if (inst.augmented) throw AlreadyAugmented("attach_virtual_sources: called twice");
    for (auto& app : inst.apps) {
        const int a = static_cast<int>(app.services.size());
        Matrix traffic(a + 1, a + 1, 0.0);
        for (int i = 0; i < a; ++i)
            for (int j = 0; j < a; ++j) traffic(i + 1, j + 1) = app.traffic(i, j);
        if (a > 0) traffic(0, 1) = app.ingress_kb;

        Microservice virt;
        virt.app = app.id;
        virt.idx = 0;
        virt.cpu_demand_ghz = 0.0;
        virt.is_virtual = true;

        std::vector<Microservice> services;
        services.reserve(static_cast<std::size_t>(a) + 1);
        services.push_back(virt);
        for (auto& ms : app.services) {
            ms.idx += 1;
            services.push_back(std::move(ms));
        }
        app.services = std::move(services);
        app.traffic = std::move(traffic);
    }
    inst.augmented = true;
    return inst;
}

/// Layer pulls induced by a placement: a layer is downloaded to a server once
/// iff at least one service hosted there contains it.
inline LayerPulls derive_layer_pulls(const Instance& inst, const Placement& x) {
    const int n = inst.n_servers();
    const int l = inst.n_layers();
    if (x.size() != inst.apps.size())
        throw DimensionMismatch("derive_layer_pulls: app count mismatch");
    LayerPulls d(static_cast<std::size_t>(n), std::vector<std::uint8_t>(static_cast<std::size_t>(l), 0));
    for (std::size_t k = 0; k < inst.apps.size(); ++k) {
        const auto& app = inst.apps[k];
        if (x[k].size() != app.services.size())
            throw DimensionMismatch("derive_layer_pulls: service count mismatch");
        for (std::size_t i = 0; i < app.services.size(); ++i) {
            const int srv = x[k][i];
            for (int layer : app.services[i].layers)
                d[static_cast<std::size_t>(srv)][static_cast<std::size_t>(layer)] = 1;
        }
    }
    return d;
}

/// Verifies a deployment against the instance: server ids in range, layer
/// pulls equal to the induction of the placement, per-server storage and cpu
/// limits, and virtual sources sitting on their pinned server.
inline FeasibilityReport check_feasibility(const Instance& inst, const Deployment& dep) {
    const int n = inst.n_servers();
    FeasibilityReport rep;
    if (dep.x.size() != inst.apps.size())
        throw DimensionMismatch("check_feasibility: app count mismatch");
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        if (dep.x[k].size() != inst.apps[k].services.size())
            throw DimensionMismatch("check_feasibility: service count mismatch");
    if (dep.d.size() != static_cast<std::size_t>(n))
        throw DimensionMismatch("check_feasibility: layer-pull row count mismatch");
    for (const auto& row : dep.d)
        if (row.size() != static_cast<std::size_t>(inst.n_layers()))
            throw DimensionMismatch("check_feasibility: layer-pull column count mismatch");

    auto add = [&rep](Violation v) {
        rep.ok = false;
        rep.violations.push_back(std::move(v));
    };

    for (std::size_t k = 0; k < inst.apps.size(); ++k) {
        const auto& app = inst.apps[k];
        for (std::size_t i = 0; i < app.services.size(); ++i) {
            const int srv = dep.x[k][i];
            if (srv < 0 || srv >= n) {
                std::ostringstream os;
                os << "service (" << app.id << "," << i << ") mapped to invalid server " << srv;
                add({Violation::Kind::ServerRange, srv, app.id, static_cast<int>(i), 0.0, os.str()});
            } else if (app.services[i].is_virtual && srv != app.source_server) {
                std::ostringstream os;
                os << "virtual source of app " << app.id << " on server " << srv
                   << " instead of " << app.source_server;
                add({Violation::Kind::VirtualPin, srv, app.id, static_cast<int>(i), 0.0, os.str()});
            }
        }
    }
    if (!rep.ok) return rep;  // induced pulls are meaningless with bad ids

    const LayerPulls induced = derive_layer_pulls(inst, dep.x);
    for (int s = 0; s < n; ++s) {
        for (int l = 0; l < inst.n_layers(); ++l) {
            if (dep.d[s][l] != induced[s][l]) {
                std::ostringstream os;
                os << "layer pull (" << s << "," << l << ") is " << int(dep.d[s][l])
                   << ", induction gives " << int(induced[s][l]);
                add({Violation::Kind::LayerInduction, s, -1, -1, 0.0, os.str()});
            }
        }
    }

    for (int s = 0; s < n; ++s) {
        double used = 0.0;
        for (int l = 0; l < inst.n_layers(); ++l)
            if (dep.d[s][l]) used += inst.layers[static_cast<std::size_t>(l)].size_mb;
        const double slack = inst.servers[static_cast<std::size_t>(s)].storage_mb - used;
        if (slack < 0.0) {
            std::ostringstream os;
            os << "server " << s << " storage over by " << -slack << " MB";
            add({Violation::Kind::Storage, s, -1, -1, slack, os.str()});
        }
    }

    std::vector<double> cpu_used(static_cast<std::size_t>(n), 0.0);
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i)
            cpu_used[static_cast<std::size_t>(dep.x[k][i])] += inst.apps[k].services[i].cpu_demand_ghz;
    for (int s = 0; s < n; ++s) {
        const double slack = inst.servers[static_cast<std::size_t>(s)].cpu_ghz - cpu_used[static_cast<std::size_t>(s)];
        if (slack < 0.0) {
            std::ostringstream os;
            os << "server " << s << " cpu over by " << -slack << " GHz";
            add({Violation::Kind::Cpu, s, -1, -1, slack, os.str()});
        }
    }
    return rep;
}

inline void Instance::validate() const {
    const int n = n_servers();
    const int l = n_layers();
    if (n == 0) throw BadInput("instance: no servers");
    if (hops.size() != n) throw BadInput("instance: hop matrix size mismatch");
    for (int i = 0; i < n; ++i) {
        if (servers[static_cast<std::size_t>(i)].id != i) throw BadInput("instance: server ids not dense");
        if (servers[static_cast<std::size_t>(i)].cpu_ghz <= 0.0 ||
            servers[static_cast<std::size_t>(i)].storage_mb <= 0.0 ||
            servers[static_cast<std::size_t>(i)].cloud_bw_mbps <= 0.0)
            throw BadInput("instance: server resources must be positive");
    }
    for (int i = 0; i < l; ++i) {
        if (layers[static_cast<std::size_t>(i)].id != i) throw BadInput("instance: layer ids not dense");
        if (layers[static_cast<std::size_t>(i)].size_mb <= 0.0)
            throw BadInput("instance: layer sizes must be positive");
    }
    for (std::size_t k = 0; k < apps.size(); ++k) {
        const auto& app = apps[k];
        if (app.id != static_cast<int>(k)) throw BadInput("instance: app ids not dense");
        if (app.source_server < 0 || app.source_server >= n)
            throw BadInput("instance: source server out of range");
        const std::size_t a = app.services.size();
        if (a == 0) throw BadInput("instance: app without services");
        if (app.traffic.rows() != a || app.traffic.cols() != a)
            throw BadInput("instance: traffic matrix dimension mismatch");
        for (std::size_t i = 0; i < a; ++i) {
            const auto& ms = app.services[i];
            if (ms.idx != static_cast<int>(i)) throw BadInput("instance: service idx not positional");
            if (ms.cpu_demand_ghz < 0.0) throw BadInput("instance: negative cpu demand");
            if (ms.is_virtual && (ms.cpu_demand_ghz != 0.0 || !ms.layers.empty()))
                throw BadInput("instance: virtual service must have zero demand and no layers");
            for (int layer : ms.layers)
                if (layer < 0 || layer >= l) throw BadInput("instance: layer id out of range");
            if (app.traffic(i, i) != 0.0) throw BadInput("instance: traffic diagonal must be zero");
            for (std::size_t j = 0; j < a; ++j)
                if (app.traffic(i, j) < 0.0) throw BadInput("instance: negative traffic");
        }
        // positive traffic must form a DAG (chains with optional branches)
        std::vector<int> indeg(a, 0);
        for (std::size_t i = 0; i < a; ++i)
            for (std::size_t j = 0; j < a; ++j)
                if (app.traffic(i, j) > 0.0) ++indeg[j];
        std::deque<std::size_t> ready;
        for (std::size_t i = 0; i < a; ++i)
            if (indeg[i] == 0) ready.push_back(i);
        std::size_t seen = 0;
        while (!ready.empty()) {
            const std::size_t v = ready.front();
            ready.pop_front();
            ++seen;
            for (std::size_t j = 0; j < a; ++j)
                if (app.traffic(v, j) > 0.0 && --indeg[j] == 0) ready.push_back(j);
        }
        if (seen != a) throw BadInput("instance: traffic graph has a cycle");
    }
    if (total_cpu_demand() > total_cpu_capacity())
        throw InfeasibleInstance("instance: total cpu demand exceeds total capacity");
}

} // namespace msdeploy
