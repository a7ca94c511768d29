#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "msdeploy/errors.hpp"
#include "msdeploy/model.hpp"

// Greedy placement heuristics. GDS weighs chain edges against layer sizes
// and places the sorted items greedily; LS maximizes locally present layer
// bytes; K8S prefers servers already holding the image and otherwise
// minimizes the bytes left to pull.

namespace msdeploy {
namespace detail {

/// Incremental placement state shared by the greedy strategies.
class GreedyState {
public:
    explicit GreedyState(const Instance& inst) : inst_(inst) {
        const int n = inst.n_servers();
        x_.resize(inst.apps.size());
        placed_.resize(inst.apps.size());
        for (std::size_t k = 0; k < inst.apps.size(); ++k) {
            x_[k].assign(inst.apps[k].services.size(), inst.apps[k].source_server);
            placed_[k].assign(inst.apps[k].services.size(), 0);
            placed_[k][0] = 1;  // virtual source is pinned
        }
        residual_.resize(static_cast<std::size_t>(n));
        storage_used_.assign(static_cast<std::size_t>(n), 0.0);
        pulled_.assign(static_cast<std::size_t>(n),
                       std::vector<std::uint8_t>(static_cast<std::size_t>(inst.n_layers()), 0));
        for (int s = 0; s < n; ++s)
            residual_[static_cast<std::size_t>(s)] = inst.servers[static_cast<std::size_t>(s)].cpu_ghz;
    }

    bool is_placed(int k, int i) const {
        return placed_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] != 0;
    }
    int server_of(int k, int i) const {
        return x_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
    }

    bool fits(const Microservice& ms, int s) const {
        if (ms.cpu_demand_ghz > residual_[static_cast<std::size_t>(s)] + 1e-12) return false;
        return storage_used_[static_cast<std::size_t>(s)] + new_bytes(ms, s) <=
               inst_.servers[static_cast<std::size_t>(s)].storage_mb + 1e-9;
    }

    double new_bytes(const Microservice& ms, int s) const {
        double b = 0.0;
        for (int l : ms.layers)
            if (!pulled_[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)])
                b += inst_.layers[static_cast<std::size_t>(l)].size_mb;
        return b;
    }

    double local_bytes(const Microservice& ms, int s) const {
        double b = 0.0;
        for (int l : ms.layers)
            if (pulled_[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)])
                b += inst_.layers[static_cast<std::size_t>(l)].size_mb;
        return b;
    }

    double residual_cpu(int s) const { return residual_[static_cast<std::size_t>(s)]; }

    void place(int k, int i, int s) {
        const auto& ms = inst_.apps[static_cast<std::size_t>(k)].services[static_cast<std::size_t>(i)];
        x_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = s;
        placed_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = 1;
        residual_[static_cast<std::size_t>(s)] -= ms.cpu_demand_ghz;
        storage_used_[static_cast<std::size_t>(s)] += new_bytes(ms, s);
        for (int l : ms.layers) pulled_[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)] = 1;
    }

    /// Feasible server closest to `anchor` by hops; ties broken by larger
    /// residual cpu, then lower id.
    int closest_feasible(const Microservice& ms, int anchor) const {
        int best = -1;
        for (int s = 0; s < inst_.n_servers(); ++s) {
            if (!fits(ms, s)) continue;
            if (best < 0) {
                best = s;
                continue;
            }
            const int hb = inst_.hops(anchor, best);
            const int hs = inst_.hops(anchor, s);
            if (hs < hb ||
                (hs == hb && residual_[static_cast<std::size_t>(s)] >
                                 residual_[static_cast<std::size_t>(best)] + 1e-12))
                best = s;
        }
        return best;
    }

    /// Feasible server with the largest cloud bandwidth; ties to lower id.
    int max_bandwidth_feasible(const Microservice& ms) const {
        int best = -1;
        for (int s = 0; s < inst_.n_servers(); ++s) {
            if (!fits(ms, s)) continue;
            if (best < 0 || inst_.servers[static_cast<std::size_t>(s)].cloud_bw_mbps >
                                inst_.servers[static_cast<std::size_t>(best)].cloud_bw_mbps)
                best = s;
        }
        return best;
    }

    Deployment finish() const {
        Deployment dep;
        dep.x = x_;
        dep.d = derive_layer_pulls(inst_, x_);
        return dep;
    }

private:
    const Instance& inst_;
    Placement x_;
    std::vector<std::vector<std::uint8_t>> placed_;
    std::vector<double> residual_;
    std::vector<double> storage_used_;
    LayerPulls pulled_;
};

/// Real services in descending cpu demand; the capacity-aware fallback order
/// every strategy retries with when its own order wedges into a dead end.
inline std::vector<std::pair<int, int>> cpu_ordered_services(const Instance& inst) {
    std::vector<std::pair<int, int>> order;
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i)
            if (!inst.apps[k].services[i].is_virtual)
                order.emplace_back(static_cast<int>(k), static_cast<int>(i));
    std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
        const double ca = inst.apps[static_cast<std::size_t>(a.first)]
                              .services[static_cast<std::size_t>(a.second)]
                              .cpu_demand_ghz;
        const double cb = inst.apps[static_cast<std::size_t>(b.first)]
                              .services[static_cast<std::size_t>(b.second)]
                              .cpu_demand_ghz;
        if (ca != cb) return ca > cb;
        return a < b;
    });
    return order;
}

} // namespace detail

namespace detail {

/// One gds pass over the sorted item list; throws when an item wedges.
inline Deployment gds_attempt(const Instance& inst, double theta) {
    detail::GreedyState st(inst);

    struct ChainItem {
        int k, i, j;
        double w;
    };
    struct LayerItem {
        int layer;
        double size;
        std::vector<std::pair<int, int>> members;  // (app, idx) containing the layer
    };
    std::vector<ChainItem> chain;
    std::vector<LayerItem> layer_items;

    double w_min = 0.0, w_max = 0.0;
    bool first_w = true;
    for (std::size_t k = 0; k < inst.apps.size(); ++k) {
        const auto& app = inst.apps[k];
        for (std::size_t i = 0; i < app.services.size(); ++i)
            for (std::size_t j = 0; j < app.services.size(); ++j) {
                const double w = app.traffic(i, j);
                if (w <= 0.0) continue;
                chain.push_back({static_cast<int>(k), static_cast<int>(i), static_cast<int>(j), w});
                if (first_w) {
                    w_min = w_max = w;
                    first_w = false;
                } else {
                    w_min = std::min(w_min, w);
                    w_max = std::max(w_max, w);
                }
            }
    }

    double s_min = 0.0, s_max = 0.0;
    bool first_s = true;
    for (int l = 0; l < inst.n_layers(); ++l) {
        LayerItem item;
        item.layer = l;
        item.size = inst.layers[static_cast<std::size_t>(l)].size_mb;
        for (std::size_t k = 0; k < inst.apps.size(); ++k)
            for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i) {
                const auto& ms = inst.apps[k].services[i];
                if (std::find(ms.layers.begin(), ms.layers.end(), l) != ms.layers.end())
                    item.members.emplace_back(static_cast<int>(k), static_cast<int>(i));
            }
        if (item.members.empty()) continue;
        layer_items.push_back(std::move(item));
        if (first_s) {
            s_min = s_max = inst.layers[static_cast<std::size_t>(l)].size_mb;
            first_s = false;
        } else {
            s_min = std::min(s_min, inst.layers[static_cast<std::size_t>(l)].size_mb);
            s_max = std::max(s_max, inst.layers[static_cast<std::size_t>(l)].size_mb);
        }
    }

    const double w_den = (w_max > w_min) ? (w_max - w_min) : 1.0;
    const double s_den = (s_max > s_min) ? (s_max - s_min) : 1.0;

    struct Item {
        double value;
        int kind;  // 0 = chain, 1 = layer
        std::size_t pos;
    };
    std::vector<Item> items;
    items.reserve(chain.size() + layer_items.size());
    for (std::size_t c = 0; c < chain.size(); ++c)
        items.push_back({(1.0 - theta) * (chain[c].w - w_min) / w_den, 0, c});
    for (std::size_t l = 0; l < layer_items.size(); ++l)
        items.push_back({theta * (layer_items[l].size - s_min) / s_den, 1, l});
    std::stable_sort(items.begin(), items.end(), [&](const Item& a, const Item& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.pos < b.pos;
    });

    auto place_or_throw = [&](int k, int i, int server, const char* what) {
        if (server < 0)
            throw NoFeasiblePoint(std::string("gds: no feasible server for ") + what);
        st.place(k, i, server);
    };

    for (const auto& item : items) {
        if (item.kind == 0) {
            const auto& ci = chain[item.pos];
            const auto& app = inst.apps[static_cast<std::size_t>(ci.k)];
            const bool pi = st.is_placed(ci.k, ci.i);
            const bool pj = st.is_placed(ci.k, ci.j);
            if (pi && pj) continue;
            if (!pi && !pj) {
                // place the upstream endpoint first, on the fastest downlink
                const auto& up = app.services[static_cast<std::size_t>(ci.i)];
                place_or_throw(ci.k, ci.i, st.max_bandwidth_feasible(up), "chain upstream");
            }
            if (!st.is_placed(ci.k, ci.i)) {
                const auto& ms = app.services[static_cast<std::size_t>(ci.i)];
                place_or_throw(ci.k, ci.i,
                               st.closest_feasible(ms, st.server_of(ci.k, ci.j)), "chain item");
            } else if (!st.is_placed(ci.k, ci.j)) {
                const auto& ms = app.services[static_cast<std::size_t>(ci.j)];
                place_or_throw(ci.k, ci.j,
                               st.closest_feasible(ms, st.server_of(ci.k, ci.i)), "chain item");
            }
        } else {
            const auto& li = layer_items[item.pos];
            for (const auto& [k, i] : li.members) {
                if (st.is_placed(k, i)) continue;
                const auto& ms = inst.apps[static_cast<std::size_t>(k)].services[static_cast<std::size_t>(i)];
                place_or_throw(k, i, st.max_bandwidth_feasible(ms), "layer group");
            }
        }
    }

    // services with neither traffic nor layers
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i) {
            if (st.is_placed(static_cast<int>(k), static_cast<int>(i))) continue;
            const auto& ms = inst.apps[k].services[i];
            place_or_throw(static_cast<int>(k), static_cast<int>(i),
                           st.max_bandwidth_feasible(ms), "leftover service");
        }

    return st.finish();
}

/// Capacity-first retry keeping the gds selection rules: biggest cpu demand
/// first, next to a placed chain partner when one exists, else on the
/// fastest feasible downlink.
inline Deployment gds_fallback(const Instance& inst) {
    GreedyState st(inst);
    for (const auto& [k, i] : cpu_ordered_services(inst)) {
        const auto& app = inst.apps[static_cast<std::size_t>(k)];
        const auto& ms = app.services[static_cast<std::size_t>(i)];
        int anchor = -1;
        for (std::size_t j = 0; j < app.services.size(); ++j) {
            const bool adjacent = app.traffic(static_cast<std::size_t>(i), j) > 0.0 ||
                                  app.traffic(j, static_cast<std::size_t>(i)) > 0.0;
            if (adjacent && st.is_placed(k, static_cast<int>(j))) {
                anchor = st.server_of(k, static_cast<int>(j));
                break;
            }
        }
        const int server = anchor >= 0 ? st.closest_feasible(ms, anchor)
                                       : st.max_bandwidth_feasible(ms);
        if (server < 0) throw NoFeasiblePoint("gds: no feasible server in fallback order");
        st.place(k, i, server);
    }
    return st.finish();
}

} // namespace detail

/// Greedy deployment strategy: normalize chain-edge traffic against layer
/// sizes with the weights (1-theta) and theta, sort all items descending, and
/// place chain partners next to each other and layer groups on the fastest
/// downlink with room. The objective weighs delay by theta, so layer items
/// carry theta and chain items 1-theta. An item order can wedge on tight
/// capacity; the strategy then retries once in cpu-descending order with the
/// same selection rules.
inline Deployment gds(const Instance& inst, double theta) {
    if (!inst.augmented) throw NotAugmented("gds: attach virtual sources first");
    try {
        return detail::gds_attempt(inst, theta);
    } catch (const NoFeasiblePoint&) {
        return detail::gds_fallback(inst);
    }
}

namespace detail {

/// Real services in descending total image size, ties by (app, idx).
inline std::vector<std::pair<int, int>> size_ordered_services(const Instance& inst) {
    std::vector<std::pair<int, int>> order;
    for (std::size_t k = 0; k < inst.apps.size(); ++k)
        for (std::size_t i = 0; i < inst.apps[k].services.size(); ++i)
            if (!inst.apps[k].services[i].is_virtual)
                order.emplace_back(static_cast<int>(k), static_cast<int>(i));
    std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
        const double sa = inst.image_size_mb(
            inst.apps[static_cast<std::size_t>(a.first)].services[static_cast<std::size_t>(a.second)]);
        const double sb = inst.image_size_mb(
            inst.apps[static_cast<std::size_t>(b.first)].services[static_cast<std::size_t>(b.second)]);
        if (sa != sb) return sa > sb;
        return a < b;
    });
    return order;
}

/// One locality-scored pass over the given service order. most_local picks
/// the feasible server with the most image bytes already present (ls);
/// otherwise the one with the fewest bytes left to pull (k8s). Ties prefer
/// the faster downlink, then the lower id.
inline Deployment locality_pass(const Instance& inst, const std::vector<std::pair<int, int>>& order,
                                bool most_local, const char* who) {
    GreedyState st(inst);
    for (const auto& [k, i] : order) {
        const auto& ms = inst.apps[static_cast<std::size_t>(k)].services[static_cast<std::size_t>(i)];
        int best = -1;
        double best_score = 0.0;
        for (int s = 0; s < inst.n_servers(); ++s) {
            if (!st.fits(ms, s)) continue;
            const double score = most_local ? st.local_bytes(ms, s) : st.new_bytes(ms, s);
            const bool better = most_local ? score > best_score + 1e-9 : score < best_score - 1e-9;
            if (best < 0 || better ||
                (std::fabs(score - best_score) <= 1e-9 &&
                 inst.servers[static_cast<std::size_t>(s)].cloud_bw_mbps >
                     inst.servers[static_cast<std::size_t>(best)].cloud_bw_mbps)) {
                best = s;
                best_score = score;
            }
        }
        if (best < 0) throw NoFeasiblePoint(std::string(who) + ": no feasible server");
        st.place(k, i, best);
    }
    return st.finish();
}

} // namespace detail

/// Layer-match scheduling: each service goes to the feasible server holding
/// the most of its image bytes already; ties prefer faster downlink, then
/// lower id. Retries once in cpu-descending order when the image-size order
/// wedges.
inline Deployment ls(const Instance& inst) {
    if (!inst.augmented) throw NotAugmented("ls: attach virtual sources first");
    try {
        return detail::locality_pass(inst, detail::size_ordered_services(inst), true, "ls");
    } catch (const NoFeasiblePoint&) {
        return detail::locality_pass(inst, detail::cpu_ordered_services(inst), true, "ls");
    }
}

/// Kubernetes default image-locality policy: a server already holding the
/// full image wins (zero bytes left), otherwise the feasible server with the
/// least remaining download; ties and the dead-end retry as in ls.
inline Deployment k8s_default(const Instance& inst) {
    if (!inst.augmented) throw NotAugmented("k8s_default: attach virtual sources first");
    try {
        return detail::locality_pass(inst, detail::size_ordered_services(inst), false, "k8s");
    } catch (const NoFeasiblePoint&) {
        return detail::locality_pass(inst, detail::cpu_ordered_services(inst), false, "k8s");
    }
}
} // namespace msdeploy
