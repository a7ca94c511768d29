#pragma once

#include <cstddef>
#include <vector>

#include "msdeploy/errors.hpp"
#include "msdeploy/matrix.hpp"
#include "msdeploy/model.hpp"

// Flattened decision vectors and the constraint/objective matrices of the
// linearly constrained integer quadratic program.
//
// Layouts:
//   x: application-major, then service index, then server
//      x[x_index(k,i,n)] = 1 iff service i of app k runs on server n
//   d: server-major, then layer
//      d[d_index(n,l)]   = 1 iff layer l is pulled to server n

namespace msdeploy {

struct VectorizedModel {
    const Instance* instance = nullptr;  // non-owning; instance must outlive

    std::size_t x_len = 0;
    std::size_t d_len = 0;
    int n_servers = 0;
    int n_layers = 0;
    std::vector<std::size_t> app_offset;  // x offset of (k, i=0, n=0)

    std::vector<double> M;   // pull-delay row vector, length d_len
    Matrix W;                // communication quadratic, block diagonal per app

    Matrix Q_eq;             // one-server-per-service equalities, Q_eq x = b1
    std::vector<double> b1;
    Matrix H;                // virtual-source pinning, H x = b2
    std::vector<double> b2;
    Matrix Y;                // layer coupling, d <= Y x and d >= Y x / Z
    Matrix S_storage;        // storage rows, S_storage d <= cS
    std::vector<double> cS;
    Matrix G;                // cpu rows, G x <= cC
    std::vector<double> cC;
    double Z = 2.0;          // relaxation constant, > any per-layer service count

    std::size_t x_index(int k, int i, int n) const {
        return app_offset[static_cast<std::size_t>(k)] +
               static_cast<std::size_t>(i) * static_cast<std::size_t>(n_servers) +
               static_cast<std::size_t>(n);
    }
    std::size_t d_index(int n, int l) const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(n_layers) +
               static_cast<std::size_t>(l);
    }

    std::vector<double> encode_x(const Placement& x) const {
        std::vector<double> v(x_len, 0.0);
        for (std::size_t k = 0; k < x.size(); ++k)
            for (std::size_t i = 0; i < x[k].size(); ++i)
                v[x_index(static_cast<int>(k), static_cast<int>(i), x[k][i])] = 1.0;
        return v;
    }

    Placement decode_x(const std::vector<double>& v) const {
        if (v.size() != x_len) throw DimensionMismatch("decode_x: length mismatch");
        Placement x(instance->apps.size());
        for (std::size_t k = 0; k < instance->apps.size(); ++k) {
            const std::size_t a = instance->apps[k].services.size();
            x[k].resize(a);
            for (std::size_t i = 0; i < a; ++i) {
                int best = 0;
                double best_val = v[x_index(static_cast<int>(k), static_cast<int>(i), 0)];
                for (int n = 1; n < n_servers; ++n) {
                    const double val = v[x_index(static_cast<int>(k), static_cast<int>(i), n)];
                    if (val > best_val) {
                        best_val = val;
                        best = n;
                    }
                }
                x[k][i] = best;
            }
        }
        return x;
    }

    std::vector<double> encode_d(const LayerPulls& d) const {
        std::vector<double> v(d_len, 0.0);
        for (int n = 0; n < n_servers; ++n)
            for (int l = 0; l < n_layers; ++l)
                if (d[static_cast<std::size_t>(n)][static_cast<std::size_t>(l)])
                    v[d_index(n, l)] = 1.0;
        return v;
    }

    LayerPulls decode_d(const std::vector<double>& v) const {
        if (v.size() != d_len) throw DimensionMismatch("decode_d: length mismatch");
        LayerPulls d(static_cast<std::size_t>(n_servers),
                     std::vector<std::uint8_t>(static_cast<std::size_t>(n_layers), 0));
        for (int n = 0; n < n_servers; ++n)
            for (int l = 0; l < n_layers; ++l)
                d[static_cast<std::size_t>(n)][static_cast<std::size_t>(l)] =
                    v[d_index(n, l)] > 0.5 ? 1 : 0;
        return d;
    }
};

/// Builds every matrix of the vectorized program from an augmented instance.
inline VectorizedModel vectorize(const Instance& inst) {
    if (!inst.augmented) throw NotAugmented("vectorize: attach virtual sources first");

    VectorizedModel m;
    m.instance = &inst;
    m.n_servers = inst.n_servers();
    m.n_layers = inst.n_layers();
    const int n = m.n_servers;
    const int nl = m.n_layers;
    const std::size_t total_ms = inst.total_services();

    m.app_offset.resize(inst.apps.size());
    std::size_t off = 0;
    for (std::size_t k = 0; k < inst.apps.size(); ++k) {
        m.app_offset[k] = off;
        off += inst.apps[k].services.size() * static_cast<std::size_t>(n);
    }
    m.x_len = off;
    m.d_len = static_cast<std::size_t>(n) * static_cast<std::size_t>(nl);
    m.Z = 1.0 + static_cast<double>(total_ms);

    // M: [S^T/b_1, ..., S^T/b_N]
    m.M.resize(m.d_len);
    for (int s = 0; s < n; ++s)
        for (int l = 0; l < nl; ++l)
            m.M[m.d_index(s, l)] =
                inst.layers[static_cast<std::size_t>(l)].size_mb /
                inst.servers[static_cast<std::size_t>(s)].cloud_bw_mbps;

    // W: per-app blocks of the traffic matrix Hadamard-tiled with hop counts
    m.W = Matrix(m.x_len, m.x_len, 0.0);
    for (std::size_t k = 0; k < inst.apps.size(); ++k) {
        const auto& app = inst.apps[k];
        const int a = static_cast<int>(app.services.size());
        for (int i = 0; i < a; ++i)
            for (int j = 0; j < a; ++j) {
                const double w = app.traffic(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                if (w == 0.0) continue;
                for (int s = 0; s < n; ++s)
                    for (int t = 0; t < n; ++t) {
                        const int hop = inst.hops(s, t);
                        if (hop != 0)
                            m.W(m.x_index(static_cast<int>(k), i, s),
                                m.x_index(static_cast<int>(k), j, t)) = w * hop;
                    }
            }
    }

    // Q_eq x = b1: each service on exactly one server
    m.Q_eq = Matrix(total_ms, m.x_len, 0.0);
    m.b1.assign(total_ms, 1.0);
    {
        std::size_t row = 0;
        for (std::size_t k = 0; k < inst.apps.size(); ++k)
            for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i, ++row)
                for (int s = 0; s < n; ++s)
                    m.Q_eq(row, m.x_index(static_cast<int>(k), static_cast<int>(i), s)) = 1.0;
    }

    // H x = b2: virtual source of app k pinned to its source server
    m.H = Matrix(inst.apps.size() * static_cast<std::size_t>(n), m.x_len, 0.0);
    m.b2.assign(inst.apps.size() * static_cast<std::size_t>(n), 0.0);
    for (std::size_t k = 0; k < inst.apps.size(); ++k) {
        for (int s = 0; s < n; ++s) {
            const std::size_t row = k * static_cast<std::size_t>(n) + static_cast<std::size_t>(s);
            m.H(row, m.x_index(static_cast<int>(k), 0, s)) = 1.0;
            if (s == inst.apps[k].source_server) m.b2[row] = 1.0;
        }
    }

    // Y: row (n,l) sums the placements on server n of services containing l
    m.Y = Matrix(m.d_len, m.x_len, 0.0);
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i)
            for (int layer : inst.apps[k].services[i].layers)
                for (int s = 0; s < n; ++s)
                    m.Y(m.d_index(s, layer),
                        m.x_index(static_cast<int>(k), static_cast<int>(i), s)) = 1.0;

    // storage: block-diagonal layer sizes
    m.S_storage = Matrix(static_cast<std::size_t>(n), m.d_len, 0.0);
    m.cS.resize(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        for (int l = 0; l < nl; ++l)
            m.S_storage(static_cast<std::size_t>(s), m.d_index(s, l)) =
                inst.layers[static_cast<std::size_t>(l)].size_mb;
        m.cS[static_cast<std::size_t>(s)] = inst.servers[static_cast<std::size_t>(s)].storage_mb;
    }

    // cpu: demand coefficients per server row
    m.G = Matrix(static_cast<std::size_t>(n), m.x_len, 0.0);
    m.cC.resize(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        for (std::size_t k = 0; k < inst.apps.size(); ++k)
            for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i)
                m.G(static_cast<std::size_t>(s),
                    m.x_index(static_cast<int>(k), static_cast<int>(i), s)) =
                    inst.apps[k].services[i].cpu_demand_ghz;
        m.cC[static_cast<std::size_t>(s)] = inst.servers[static_cast<std::size_t>(s)].cpu_ghz;
    }

    return m;
}

} // namespace msdeploy
