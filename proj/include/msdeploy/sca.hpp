#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "msdeploy/errors.hpp"
#include "msdeploy/greedy.hpp"
#include "msdeploy/model.hpp"
#include "msdeploy/objective.hpp"
#include "msdeploy/split.hpp"
#include "msdeploy/subproblem.hpp"
#include "msdeploy/vectorize.hpp"

// Successive convex approximation: split the communication quadratic,
// repeatedly solve the convex subproblem at the current iterate, and step
// with size alpha until the iterate stops moving.
//
// alpha = 1 keeps every iterate binary and guarantees a non-increasing
// objective sequence; alpha < 1 is a diagnostic relaxed mode with iterates in
// [0,1]^n and one final exact solve to return to binary.
//
// The starting point is the best of the cheap heuristic placements (first
// fit, gds, ls, k8s) under the configured theta. The majorizer charges
// lambda_q per moved service, so descent from a strong start dominates
// descent from an arbitrary feasible point; every property of the iteration
// (majorization, monotone objective, stationarity at fixed points) holds for
// any feasible start.

namespace msdeploy {

struct ScaIterate {
    Placement placement;         // argmax decode in relaxed mode
    std::vector<double> x_vec;
    std::vector<double> d_vec;
    double u = 0.0;              // C1 T + C2 R, the minimized form
    double t = 0.0;
    double r = 0.0;
    double step_x = 0.0;         // L1 distance from the previous iterate
    double step_d = 0.0;
    SubproblemStats stats;       // zeroed for the initial point
};

struct ScaTrace {
    std::vector<ScaIterate> iterates;
    bool converged = false;
    double final_gap = 0.0;
    bool budget_exhausted = false;  // some subproblem returned a non-proven incumbent
};

struct ScaResult {
    Deployment deployment;
    ScaTrace trace;
};

/// Called after each subproblem solve; lets tests audit every iteration.
using ScaObserver = std::function<void(int iter, const SubproblemSpec&, const SubproblemSolution&)>;

/// Deterministic feasible starting point: virtual sources pinned, then
/// first-fit-decreasing by cpu demand onto servers ordered by residual cpu,
/// with storage tracked through incremental layer pulls. Follow-up attempts
/// reshuffle the service order from the seed before giving up.
inline std::pair<Placement, LayerPulls> initial_feasible(const Instance& inst, std::uint64_t seed) {
    if (!inst.augmented) throw NotAugmented("initial_feasible: attach virtual sources first");
    const int n = inst.n_servers();

    struct Item {
        int app, idx;
        double cpu;
        const std::vector<int>* layers;
    };
    std::vector<Item> items;
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i) {
            const auto& ms = inst.apps[k].services[i];
            if (!ms.is_virtual)
                items.push_back({static_cast<int>(k), static_cast<int>(i), ms.cpu_demand_ghz, &ms.layers});
        }
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        if (a.cpu != b.cpu) return a.cpu > b.cpu;
        if (a.app != b.app) return a.app < b.app;
        return a.idx < b.idx;
    });

    std::string tightest;
    constexpr int kAttempts = 64;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        std::vector<Item> order = items;
        if (attempt > 0) {
            std::uint64_t state = seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(attempt);
            for (std::size_t i = order.size(); i > 1; --i) {
                const std::size_t j = detail::splitmix64(state) % i;
                std::swap(order[i - 1], order[j]);
            }
        }

        Placement x(inst.apps.size());
        for (std::size_t k = 0; k < inst.apps.size(); ++k)
            x[k].assign(inst.apps[k].services.size(), inst.apps[k].source_server);

        std::vector<double> residual(static_cast<std::size_t>(n));
        std::vector<double> storage_used(static_cast<std::size_t>(n), 0.0);
        LayerPulls pulled(static_cast<std::size_t>(n),
                          std::vector<std::uint8_t>(static_cast<std::size_t>(inst.n_layers()), 0));
        for (int s = 0; s < n; ++s) residual[static_cast<std::size_t>(s)] = inst.servers[static_cast<std::size_t>(s)].cpu_ghz;

        bool ok = true;
        for (const auto& it : order) {
            std::vector<int> servers(static_cast<std::size_t>(n));
            for (int s = 0; s < n; ++s) servers[static_cast<std::size_t>(s)] = s;
            std::stable_sort(servers.begin(), servers.end(), [&](int a, int b) {
                if (residual[static_cast<std::size_t>(a)] != residual[static_cast<std::size_t>(b)])
                    return residual[static_cast<std::size_t>(a)] > residual[static_cast<std::size_t>(b)];
                return a < b;
            });
            int chosen = -1;
            for (int s : servers) {
                if (it.cpu > residual[static_cast<std::size_t>(s)] + 1e-12) continue;
                double newbytes = 0.0;
                for (int l : *it.layers)
                    if (!pulled[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)])
                        newbytes += inst.layers[static_cast<std::size_t>(l)].size_mb;
                if (storage_used[static_cast<std::size_t>(s)] + newbytes >
                    inst.servers[static_cast<std::size_t>(s)].storage_mb + 1e-9)
                    continue;
                chosen = s;
                residual[static_cast<std::size_t>(s)] -= it.cpu;
                storage_used[static_cast<std::size_t>(s)] += newbytes;
                for (int l : *it.layers) pulled[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)] = 1;
                break;
            }
            if (chosen < 0) {
                std::ostringstream os;
                os << "service (" << it.app << "," << it.idx << ") fits no server (cpu "
                   << it.cpu << " GHz, image " << [&] {
                          double b = 0.0;
                          for (int l : *it.layers) b += inst.layers[static_cast<std::size_t>(l)].size_mb;
                          return b;
                      }() << " MB)";
                tightest = os.str();
                ok = false;
                break;
            }
            x[static_cast<std::size_t>(it.app)][static_cast<std::size_t>(it.idx)] = chosen;
        }
        if (ok) {
            LayerPulls d = derive_layer_pulls(inst, x);
            return {std::move(x), std::move(d)};
        }
    }
    throw NoFeasiblePoint("initial_feasible: no feasible point found; tightest: " + tightest);
}

namespace detail {

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

struct StartPoint {
    Placement x;
    LayerPulls d;
    bool budget_exhausted = false;
};

/// Best feasible start under the given weights: the first-fit point, the
/// greedy strategies at a few weights, and the exact minimum-delay plan (one
/// linear subproblem solve). Candidates that fail on tight instances are
/// skipped; if none succeeds the first-fit error propagates.
inline StartPoint best_start(const Instance& inst, const VectorizedModel& model,
                             const SplitMatrices& split, const UtilityConfig& ucfg,
                             const ScaConfig& cfg) {
    StartPoint best;
    double best_u = std::numeric_limits<double>::infinity();
    std::string first_error;
    auto consider = [&](auto&& make) {
        try {
            Deployment dep = make();
            const double u = ucfg.c1() * pull_delay(inst, dep.d) +
                             ucfg.c2() * communication_overhead(inst, dep.x);
            if (u < best_u) {
                best_u = u;
                best.x = std::move(dep.x);
                best.d = std::move(dep.d);
            }
        } catch (const NoFeasiblePoint& e) {
            if (first_error.empty()) first_error = e.what();
        }
    };
    Placement ffd_x;
    consider([&] {
        auto [x, d] = initial_feasible(inst, cfg.seed);
        ffd_x = x;
        return Deployment{std::move(x), std::move(d)};
    });
    consider([&] { return gds(inst, cfg.theta); });
    consider([&] { return gds(inst, 0.0); });  // chain-heavy candidate
    consider([&] { return gds(inst, 1.0); });  // layer-heavy candidate
    consider([&] { return ls(inst); });
    consider([&] { return k8s_default(inst); });
    if (!ffd_x.empty() && ucfg.theta < 1.0) {
        // exact minimum-delay plan: the quadratic drops out at theta = 1, so
        // one subproblem solve from any feasible reference is the global
        // min-T point and anchors the delay side of the trade-off
        consider([&] {
            UtilityConfig delay_only = ucfg;
            delay_only.theta = 1.0;
            const SubproblemSpec spec =
                build_subproblem(model, split, delay_only, cfg, model.encode_x(ffd_x),
                                 model.encode_d(derive_layer_pulls(inst, ffd_x)));
            SubproblemSolution sol = solve_subproblem(spec);
            if (!sol.stats.optimal) best.budget_exhausted = true;
            return Deployment{std::move(sol.placement), std::move(sol.pulls)};
        });
    }
    if (!std::isfinite(best_u))
        throw NoFeasiblePoint("sca_solve: no feasible starting point; " + first_error);
    return best;
}

} // namespace detail

/// Runs the full pipeline on an augmented instance: vectorize, split the
/// quadratic, iterate subproblem solves. Deterministic given the config.
inline ScaResult sca_solve(const Instance& inst, const ScaConfig& cfg,
                           const ScaObserver& observer = {}) {
    if (!inst.augmented) throw NotAugmented("sca_solve: attach virtual sources first");
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw BadInput("sca_solve: alpha must be in (0,1]");
    if (!(cfg.epsilon > 0.0)) throw BadInput("sca_solve: epsilon must be positive");
    if (cfg.max_iters < 1) throw BadInput("sca_solve: max_iters must be >= 1");
    if (!(cfg.theta >= 0.0 && cfg.theta <= 1.0)) throw BadInput("sca_solve: theta must be in [0,1]");

    const bool relaxed = cfg.alpha < 1.0;
    const NormalizationBounds bounds = normalization_bounds(inst);
    const UtilityConfig ucfg = make_utility_config(bounds, cfg.theta, /*include_const=*/false);

    const VectorizedModel model = vectorize(inst);
    Matrix q(model.x_len, model.x_len);
    for (std::size_t r = 0; r < model.x_len; ++r)
        for (std::size_t c = 0; c < model.x_len; ++c) q(r, c) = model.W(r, c) + model.W(c, r);
    const SplitMatrices split = split_matrix(q);

    detail::StartPoint start = detail::best_start(inst, model, split, ucfg, cfg);
    Placement x0 = std::move(start.x);
    LayerPulls d0 = std::move(start.d);

    ScaTrace trace;
    trace.budget_exhausted = start.budget_exhausted;
    auto record = [&](const Placement& placement, const std::vector<double>& x_vec,
                      const std::vector<double>& d_vec, double step_x, double step_d,
                      const SubproblemStats& stats) {
        ScaIterate it;
        it.placement = placement;
        it.x_vec = x_vec;
        it.d_vec = d_vec;
        if (relaxed) {
            it.t = pull_delay(model, d_vec);
            it.r = quad_form(model.W, x_vec);
        } else {
            it.t = pull_delay(inst, model.decode_d(d_vec));
            it.r = communication_overhead(inst, placement);
        }
        it.u = ucfg.c1() * it.t + ucfg.c2() * it.r;
        it.step_x = step_x;
        it.step_d = step_d;
        it.stats = stats;
        trace.iterates.push_back(std::move(it));
    };

    std::vector<double> x_vec = model.encode_x(x0);
    std::vector<double> d_vec = model.encode_d(d0);
    Placement placement = x0;
    record(placement, x_vec, d_vec, 0.0, 0.0, SubproblemStats{});

    for (int r = 1; r <= cfg.max_iters; ++r) {
        const SubproblemSpec spec = build_subproblem(model, split, ucfg, cfg, x_vec, d_vec);
        const SubproblemSolution sol = solve_subproblem(spec);
        if (!sol.stats.optimal) trace.budget_exhausted = true;
        if (observer) observer(r, spec, sol);

        const std::vector<double> z_x = model.encode_x(sol.placement);
        const std::vector<double> z_d = model.encode_d(sol.pulls);
        std::vector<double> new_x(model.x_len), new_d(model.d_len);
        if (relaxed) {
            for (std::size_t i = 0; i < model.x_len; ++i)
                new_x[i] = x_vec[i] + cfg.alpha * (z_x[i] - x_vec[i]);
            for (std::size_t i = 0; i < model.d_len; ++i)
                new_d[i] = d_vec[i] + cfg.alpha * (z_d[i] - d_vec[i]);
        } else {
            new_x = z_x;
            new_d = z_d;
        }

        const double step_x = detail::l1_distance(new_x, x_vec);
        const double step_d = detail::l1_distance(new_d, d_vec);
        x_vec = std::move(new_x);
        d_vec = std::move(new_d);
        placement = relaxed ? model.decode_x(x_vec) : sol.placement;
        record(placement, x_vec, d_vec, step_x, step_d, sol.stats);

        trace.final_gap = step_x + step_d;
        if (trace.final_gap <= cfg.epsilon) {
            trace.converged = true;
            break;
        }
    }

    ScaResult result;
    result.trace = std::move(trace);
    if (relaxed) {
        // one exact solve at the final relaxed point returns a binary plan
        const SubproblemSpec spec = build_subproblem(model, split, ucfg, cfg, x_vec, d_vec);
        SubproblemSolution sol = solve_subproblem(spec);
        if (!sol.stats.optimal) result.trace.budget_exhausted = true;
        result.deployment = Deployment{std::move(sol.placement), std::move(sol.pulls)};
    } else {
        result.deployment = Deployment{placement, derive_layer_pulls(inst, placement)};
    }
    return result;
}

} // namespace msdeploy
