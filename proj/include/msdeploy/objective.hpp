#pragma once

#include <algorithm>
#include <vector>

#include "msdeploy/errors.hpp"
#include "msdeploy/model.hpp"
#include "msdeploy/vectorize.hpp"

// Image pull delay T, communication overhead R, analytic normalization
// bounds, and the scalarized utility F.

namespace msdeploy {

struct NormalizationBounds {
    double t_min = 0.0;
    double t_max = 1.0;
    double r_min = 0.0;
    double r_max = 1.0;
    bool degenerate_t = false;  // t_max == t_min before the denominator fallback
    bool degenerate_r = false;
};

struct UtilityConfig {
    double theta = 0.5;  // preference for pull delay over communication overhead
    double t_min = 0.0;
    double t_max = 1.0;
    double r_min = 0.0;
    double r_max = 1.0;
    bool include_const = true;

    double c1() const { return theta / (t_max - t_min); }
    double c2() const { return (1.0 - theta) / (r_max - r_min); }
    double constant() const {
        return -theta * t_min / (t_max - t_min) - (1.0 - theta) * r_min / (r_max - r_min);
    }
};

/// Total image pull delay in seconds: sum over servers of pulled bytes over
/// that server's cloud downlink bandwidth.
inline double pull_delay(const Instance& inst, const LayerPulls& d) {
    const int n = inst.n_servers();
    const int nl = inst.n_layers();
    if (d.size() != static_cast<std::size_t>(n))
        throw DimensionMismatch("pull_delay: server count mismatch");
    double total = 0.0;
    for (int s = 0; s < n; ++s) {
        if (d[static_cast<std::size_t>(s)].size() != static_cast<std::size_t>(nl))
            throw DimensionMismatch("pull_delay: layer count mismatch");
        double bytes = 0.0;
        for (int l = 0; l < nl; ++l)
            if (d[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)])
                bytes += inst.layers[static_cast<std::size_t>(l)].size_mb;
        total += bytes / inst.servers[static_cast<std::size_t>(s)].cloud_bw_mbps;
    }
    return total;
}

/// Vector form: T = M d.
inline double pull_delay(const VectorizedModel& model, const std::vector<double>& d) {
    if (d.size() != model.d_len) throw DimensionMismatch("pull_delay: d length mismatch");
    return dot(model.M, d);
}

/// Total communication overhead in hop*KB: traffic volume of every chain edge
/// times the hop distance between the hosting servers.
inline double communication_overhead(const Instance& inst, const Placement& x) {
    double total = 0.0;
    for (std::size_t k = 0; k < inst.apps.size(); ++k) {
        const auto& app = inst.apps[k];
        const std::size_t a = app.services.size();
        for (std::size_t i = 0; i < a; ++i)
            for (std::size_t j = 0; j < a; ++j) {
                const double w = app.traffic(i, j);
                if (w > 0.0) total += w * inst.hops(x[k][i], x[k][j]);
            }
    }
    return total;
}

/// Deterministic analytic bounds bracketing T and R over all feasible
/// deployments. Degenerate spans fall back to a denominator of 1.
inline NormalizationBounds normalization_bounds(const Instance& inst) {
    if (!inst.augmented) throw NotAugmented("normalization_bounds: attach virtual sources first");
    NormalizationBounds b;

    double b_max = 0.0, b_min = 0.0;
    for (const auto& srv : inst.servers) {
        b_max = std::max(b_max, srv.cloud_bw_mbps);
        b_min = (b_min == 0.0) ? srv.cloud_bw_mbps : std::min(b_min, srv.cloud_bw_mbps);
    }

    std::vector<char> used(static_cast<std::size_t>(inst.n_layers()), 0);
    double total_image_bytes = 0.0;
    double total_traffic = 0.0;
    for (const auto& app : inst.apps) {
        for (const auto& ms : app.services) {
            for (int l : ms.layers) used[static_cast<std::size_t>(l)] = 1;
            total_image_bytes += inst.image_size_mb(ms);
        }
        for (std::size_t i = 0; i < app.services.size(); ++i)
            for (std::size_t j = 0; j < app.services.size(); ++j) total_traffic += app.traffic(i, j);
    }
    double used_bytes = 0.0;
    for (int l = 0; l < inst.n_layers(); ++l)
        if (used[static_cast<std::size_t>(l)]) used_bytes += inst.layers[static_cast<std::size_t>(l)].size_mb;

    b.t_min = used_bytes / b_max;
    b.t_max = total_image_bytes / b_min;
    b.r_min = 0.0;
    b.r_max = total_traffic * inst.hops.max_hops();

    if (!(b.t_max > b.t_min)) {
        b.degenerate_t = true;
        b.t_max = b.t_min + 1.0;
    }
    if (!(b.r_max > b.r_min)) {
        b.degenerate_r = true;
        b.r_max = b.r_min + 1.0;
    }
    return b;
}

inline UtilityConfig make_utility_config(const NormalizationBounds& b, double theta,
                                         bool include_const = true) {
    UtilityConfig cfg;
    cfg.theta = theta;
    cfg.t_min = b.t_min;
    cfg.t_max = b.t_max;
    cfg.r_min = b.r_min;
    cfg.r_max = b.r_max;
    cfg.include_const = include_const;
    return cfg;
}

/// Scalarized utility. With include_const the value is the normalized
/// weighted sum in [0,1] for in-bounds T and R; without it, the C1*T + C2*R
/// form the optimizers minimize (same argmin, shifted by a constant).
inline double utility(const UtilityConfig& cfg, double t, double r) {
    const double value = cfg.c1() * t + cfg.c2() * r;
    return cfg.include_const ? value + cfg.constant() : value;
}

} // namespace msdeploy
