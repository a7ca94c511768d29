#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

#include "msdeploy/errors.hpp"
#include "msdeploy/objective.hpp"
#include "msdeploy/split.hpp"
#include "msdeploy/vectorize.hpp"

// Convex approximation subproblem around a reference point (x_bar, d_bar):
//
//   min  C1 M d + 1/2 C2 x^T P x - C2 x_bar^T N x + 1/2 C2 x_bar^T N x_bar
//   s.t. placement / pinning / coupling / capacity constraints, x,d binary
//
// and an exact branch-and-bound solver for it. Layer pulls are eliminated
// inside the solver: M is strictly positive, so for any fixed placement the
// minimal induced d is optimal. On one-hot placements the objective collapses
// to C1 T + C2 R plus a proximity term lambda_q C2 per service moved away
// from the reference, which is what the search works with; the matrix form
// stays available through SubproblemSpec::evaluate for auditing.

namespace msdeploy {

struct SubproblemStats {
    std::uint64_t nodes_expanded = 0;
    std::uint64_t nodes_created = 0;
    std::uint64_t incumbent_updates = 0;
    bool optimal = false;  // search space exhausted within the node budget
};

struct SubproblemSolution {
    Placement placement;
    LayerPulls pulls;
    double objective = 0.0;  // U_qp at the returned point
    SubproblemStats stats;
};

struct ScaConfig {
    double alpha = 1.0;      // step size; 1 keeps iterates binary
    double epsilon = 0.5;    // stop when the L1 step norm drops to this
    int max_iters = 50;
    double theta = 0.5;
    std::uint64_t subproblem_budget = 150000;  // branch-and-bound node cap
    std::uint64_t seed = 0;
};

struct SubproblemSpec {
    const VectorizedModel* model = nullptr;
    const SplitMatrices* split = nullptr;
    UtilityConfig ucfg;
    std::uint64_t node_budget = 0;
    std::vector<double> x_bar;
    std::vector<double> d_bar;

    /// Matrix-form subproblem objective U_qp(x, d; x_bar).
    double evaluate(const std::vector<double>& x, const std::vector<double>& d) const {
        if (x.size() != model->x_len || d.size() != model->d_len)
            throw DimensionMismatch("SubproblemSpec::evaluate: vector length mismatch");
        const double c1 = ucfg.c1();
        const double c2 = ucfg.c2();
        const double lam = split->lambda_q;
        return c1 * dot(model->M, d) + 0.5 * c2 * quad_form(split->P, x) -
               c2 * lam * dot(x_bar, x) + 0.5 * c2 * lam * dot(x_bar, x_bar);
    }

    double reference_objective() const { return evaluate(x_bar, d_bar); }
};

inline SubproblemSpec build_subproblem(const VectorizedModel& model, const SplitMatrices& split,
                                       const UtilityConfig& ucfg, const ScaConfig& cfg,
                                       const std::vector<double>& x_bar,
                                       const std::vector<double>& d_bar) {
    if (x_bar.size() != model.x_len || d_bar.size() != model.d_len)
        throw DimensionMismatch("build_subproblem: reference point length mismatch");
    constexpr double tol = 1e-6;

    const std::vector<double> qx = mat_vec(model.Q_eq, x_bar);
    for (std::size_t r = 0; r < qx.size(); ++r)
        if (std::fabs(qx[r] - model.b1[r]) > tol)
            throw InfeasibleReference("build_subproblem: reference violates placement sums");
    const std::vector<double> hx = mat_vec(model.H, x_bar);
    for (std::size_t r = 0; r < hx.size(); ++r)
        if (std::fabs(hx[r] - model.b2[r]) > tol)
            throw InfeasibleReference("build_subproblem: reference violates virtual-source pins");
    const std::vector<double> yx = mat_vec(model.Y, x_bar);
    for (std::size_t r = 0; r < yx.size(); ++r)
        if (d_bar[r] > yx[r] + tol || d_bar[r] < yx[r] / model.Z - tol)
            throw InfeasibleReference("build_subproblem: reference violates layer coupling");
    const std::vector<double> sd = mat_vec(model.S_storage, d_bar);
    for (std::size_t r = 0; r < sd.size(); ++r)
        if (sd[r] > model.cS[r] + tol)
            throw InfeasibleReference("build_subproblem: reference violates storage capacity");
    const std::vector<double> gx = mat_vec(model.G, x_bar);
    for (std::size_t r = 0; r < gx.size(); ++r)
        if (gx[r] > model.cC[r] + tol)
            throw InfeasibleReference("build_subproblem: reference violates cpu capacity");

    SubproblemSpec spec;
    spec.model = &model;
    spec.split = &split;
    spec.ucfg = ucfg;
    spec.ucfg.include_const = false;
    spec.node_budget = cfg.subproblem_budget;
    spec.x_bar = x_bar;
    spec.d_bar = d_bar;
    return spec;
}

namespace detail {

/// Best-first branch-and-bound over service-to-server assignments.
/// Services are fixed in (app, idx) order, so every node is a prefix of the
/// assignment vector; the bound decomposes into the exact cost of the prefix
/// plus per-service admissible marginals for the suffix.
class SubproblemSearch {
public:
    explicit SubproblemSearch(const SubproblemSpec& spec)
        : spec_(spec), model_(*spec.model), inst_(*spec.model->instance) {
        compile();
    }

    SubproblemSolution run() {
        SubproblemStats stats;
        seed_incumbent();

        std::priority_queue<Node> open;
        if (m_ > 0) {
            State st;
            const std::vector<std::int16_t> root_assign;
            replay(root_assign, 0, st);
            compute_reps(0);
            double summarg = 0.0;
            bool dead = false;
            for (int t = 0; t < m_; ++t) {
                minmarg_[t] = best_marginal(t, 0, root_assign, st);
                if (minmarg_[t] == kInf) {
                    dead = true;
                    break;
                }
                summarg += minmarg_[t];
            }
            if (!dead) {
                const double bound = st.fixed_cost + offset_const_ + summarg;
                if (bound < best_cost_) {
                    open.push(Node{bound, 0, {}});
                    ++stats.nodes_created;
                }
            }
        }

        std::uint64_t seq = 1;
        bool budget_hit = false;
        State st;
        while (!open.empty()) {
            Node node = open.top();
            open.pop();
            if (node.bound >= best_cost_) continue;  // stale
            if (stats.nodes_expanded >= spec_.node_budget) {
                budget_hit = true;
                break;
            }
            ++stats.nodes_expanded;

            const int depth = static_cast<int>(node.assigned.size());
            replay(node.assigned, depth, st);
            compute_reps(depth);
            double summarg = 0.0;
            bool dead = false;
            for (int t = depth; t < m_; ++t) {
                minmarg_[t] = best_marginal(t, depth, node.assigned, st);
                if (minmarg_[t] == kInf) {
                    dead = true;
                    break;
                }
                summarg += minmarg_[t];
            }
            if (dead) continue;
            if (st.fixed_cost + offset_const_ + summarg >= best_cost_) continue;

            expand(node, depth, st, summarg, open, seq, stats);
        }

        stats.optimal = !budget_hit;
        if (best_assign_.empty() && m_ > 0)
            throw NoFeasiblePoint("solve_subproblem: no feasible assignment");

        SubproblemSolution sol;
        sol.placement = assemble_placement();
        sol.pulls = derive_layer_pulls(inst_, sol.placement);
        sol.objective = best_cost_;
        sol.stats = stats;
        return sol;
    }

private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    struct Node {
        double bound;
        std::uint64_t seq;
        std::vector<std::int16_t> assigned;
        bool operator<(const Node& o) const {  // min-heap via reversed comparison
            if (bound != o.bound) return bound > o.bound;
            return seq > o.seq;
        }
    };

    struct State {
        std::vector<double> residual_cpu;
        std::vector<double> storage_used;
        std::vector<std::uint8_t> pulled;  // n_ * l_ bitmap
        double fixed_cost = 0.0;
    };

    struct RealService {
        int app, idx;
        double cpu;
        std::vector<int> layers;
        std::vector<std::pair<int, double>> virt_edges;  // (pinned server, weight)
        std::vector<std::pair<int, double>> real_edges;  // (other real service, weight)
    };

    void compile() {
        n_ = inst_.n_servers();
        l_ = inst_.n_layers();
        c1_ = spec_.ucfg.c1();
        c2_ = spec_.ucfg.c2();
        c2l_ = c2_ * spec_.split->lambda_q;

        std::vector<std::vector<int>> real_id(inst_.apps.size());
        for (std::size_t k = 0; k < inst_.apps.size(); ++k) {
            const auto& app = inst_.apps[k];
            real_id[k].assign(app.services.size(), -1);
            for (std::size_t i = 0; i < app.services.size(); ++i) {
                if (app.services[i].is_virtual) continue;
                RealService rs;
                rs.app = static_cast<int>(k);
                rs.idx = static_cast<int>(i);
                rs.cpu = app.services[i].cpu_demand_ghz;
                rs.layers = app.services[i].layers;
                real_id[k][i] = static_cast<int>(services_.size());
                services_.push_back(std::move(rs));
            }
        }
        m_ = static_cast<int>(services_.size());

        for (std::size_t k = 0; k < inst_.apps.size(); ++k) {
            const auto& app = inst_.apps[k];
            const std::size_t a = app.services.size();
            for (std::size_t i = 0; i < a; ++i)
                for (std::size_t j = 0; j < a; ++j) {
                    const double w = app.traffic(i, j);
                    if (w <= 0.0) continue;
                    const bool vi = app.services[i].is_virtual;
                    const bool vj = app.services[j].is_virtual;
                    if (vi && vj) continue;
                    if (vi)
                        services_[static_cast<std::size_t>(real_id[k][j])].virt_edges.emplace_back(
                            app.source_server, w);
                    else if (vj)
                        services_[static_cast<std::size_t>(real_id[k][i])].virt_edges.emplace_back(
                            app.source_server, w);
                    else {
                        const int ti = real_id[k][i];
                        const int tj = real_id[k][j];
                        // one undirected entry per endpoint; the bound charges an
                        // edge only when exactly one endpoint is fixed
                        services_[static_cast<std::size_t>(ti)].real_edges.emplace_back(tj, w);
                        services_[static_cast<std::size_t>(tj)].real_edges.emplace_back(ti, w);
                    }
                }
        }

        xbar_at_.assign(static_cast<std::size_t>(m_) * n_, 0.0);
        for (int t = 0; t < m_; ++t)
            for (int s = 0; s < n_; ++s)
                xbar_at_[static_cast<std::size_t>(t) * n_ + s] =
                    spec_.x_bar[model_.x_index(services_[static_cast<std::size_t>(t)].app,
                                               services_[static_cast<std::size_t>(t)].idx, s)];

        layer_members_.assign(static_cast<std::size_t>(l_), {});
        for (int t = 0; t < m_; ++t)
            for (int l : services_[static_cast<std::size_t>(t)].layers)
                layer_members_[static_cast<std::size_t>(l)].push_back(t);

        double xbar_sq = 0.0;
        for (double v : spec_.x_bar) xbar_sq += v * v;
        const double m_total = static_cast<double>(inst_.total_services());
        offset_const_ =
            c2l_ * (0.5 * (m_total + xbar_sq) - static_cast<double>(inst_.apps.size()));

        minmarg_.assign(static_cast<std::size_t>(m_), 0.0);
        rep_.assign(static_cast<std::size_t>(l_), -1);
    }

    void replay(const std::vector<std::int16_t>& assigned, int depth, State& st) const {
        st.residual_cpu.assign(static_cast<std::size_t>(n_), 0.0);
        for (int s = 0; s < n_; ++s)
            st.residual_cpu[static_cast<std::size_t>(s)] = inst_.servers[static_cast<std::size_t>(s)].cpu_ghz;
        st.storage_used.assign(static_cast<std::size_t>(n_), 0.0);
        st.pulled.assign(static_cast<std::size_t>(n_) * l_, 0);
        st.fixed_cost = 0.0;
        for (int t = 0; t < depth; ++t) apply(t, assigned[static_cast<std::size_t>(t)], assigned, st);
    }

    /// Exact cost increments of fixing service t on server s, given that
    /// services 0..t-1 are already applied.
    void apply(int t, int s, const std::vector<std::int16_t>& assigned, State& st) const {
        const auto& rs = services_[static_cast<std::size_t>(t)];
        double comm = 0.0;
        for (const auto& [srv, w] : rs.virt_edges) comm += w * inst_.hops(s, srv);
        for (const auto& [peer, w] : rs.real_edges)
            if (peer < t) comm += w * inst_.hops(s, assigned[static_cast<std::size_t>(peer)]);
        st.fixed_cost += c2_ * comm - c2l_ * xbar_at_[static_cast<std::size_t>(t) * n_ + s];
        st.residual_cpu[static_cast<std::size_t>(s)] -= rs.cpu;
        for (int l : rs.layers) {
            auto& bit = st.pulled[static_cast<std::size_t>(s) * l_ + l];
            if (!bit) {
                bit = 1;
                const double sz = inst_.layers[static_cast<std::size_t>(l)].size_mb;
                st.storage_used[static_cast<std::size_t>(s)] += sz;
                st.fixed_cost += c1_ * sz / inst_.servers[static_cast<std::size_t>(s)].cloud_bw_mbps;
            }
        }
    }

    /// rep_[l] = first unfixed service containing l (owner of l's one
    /// guaranteed pull in the bound), or -1.
    void compute_reps(int depth) {
        for (int l = 0; l < l_; ++l) {
            rep_[static_cast<std::size_t>(l)] = -1;
            for (int t : layer_members_[static_cast<std::size_t>(l)])
                if (t >= depth) {
                    rep_[static_cast<std::size_t>(l)] = t;
                    break;
                }
        }
    }

    /// Admissible marginal of placing unfixed service t on server s: edges to
    /// fixed peers, the pulls of layers this service owns, and the proximity
    /// reward, all valid lower bounds on the true completion increments.
    double marginal(int t, int s, int depth, const std::vector<std::int16_t>& assigned,
                    const State& st, int rep_shift_from, int rep_shift_depth) const {
        const auto& rs = services_[static_cast<std::size_t>(t)];
        if (rs.cpu > st.residual_cpu[static_cast<std::size_t>(s)] + 1e-12) return kInf;
        double newbytes = 0.0;
        double delay = 0.0;
        for (int l : rs.layers) {
            if (st.pulled[static_cast<std::size_t>(s) * l_ + l]) continue;
            const double sz = inst_.layers[static_cast<std::size_t>(l)].size_mb;
            newbytes += sz;
            int owner = rep_[static_cast<std::size_t>(l)];
            if (owner == rep_shift_from)
                owner = next_member(l, rep_shift_depth);
            if (owner == t) delay += sz;
        }
        if (st.storage_used[static_cast<std::size_t>(s)] + newbytes >
            inst_.servers[static_cast<std::size_t>(s)].storage_mb + 1e-9)
            return kInf;
        double comm = 0.0;
        for (const auto& [srv, w] : rs.virt_edges) comm += w * inst_.hops(s, srv);
        for (const auto& [peer, w] : rs.real_edges)
            if (peer < depth) comm += w * inst_.hops(s, assigned[static_cast<std::size_t>(peer)]);
        return c1_ * delay / inst_.servers[static_cast<std::size_t>(s)].cloud_bw_mbps + c2_ * comm -
               c2l_ * xbar_at_[static_cast<std::size_t>(t) * n_ + s];
    }

    double best_marginal(int t, int depth, const std::vector<std::int16_t>& assigned,
                         const State& st, int rep_shift_from = -1, int rep_shift_depth = 0) const {
        double best = kInf;
        for (int s = 0; s < n_; ++s) {
            const double v = marginal(t, s, depth, assigned, st, rep_shift_from, rep_shift_depth);
            if (v < best) best = v;
        }
        return best;
    }

    int next_member(int l, int from) const {
        for (int t : layer_members_[static_cast<std::size_t>(l)])
            if (t >= from) return t;
        return -1;
    }

    void expand(const Node& node, int depth, State& st, double summarg,
                std::priority_queue<Node>& open, std::uint64_t& seq, SubproblemStats& stats) {
        const int t = depth;
        const auto& rs = services_[static_cast<std::size_t>(t)];

        // affected suffix services: layer sharers and chain neighbours of t
        affected_.clear();
        for (int l : rs.layers)
            for (int s2 : layer_members_[static_cast<std::size_t>(l)])
                if (s2 > t) affected_.push_back(s2);
        for (const auto& [peer, w] : rs.real_edges)
            if (peer > t) affected_.push_back(peer);
        std::sort(affected_.begin(), affected_.end());
        affected_.erase(std::unique(affected_.begin(), affected_.end()), affected_.end());

        std::vector<std::int16_t> child = node.assigned;
        child.push_back(-1);

        for (int s = 0; s < n_; ++s) {
            if (rs.cpu > st.residual_cpu[static_cast<std::size_t>(s)] + 1e-12) continue;
            double newbytes = 0.0;
            double delay = 0.0;
            scratch_pulls_.clear();
            for (int l : rs.layers) {
                if (st.pulled[static_cast<std::size_t>(s) * l_ + l]) continue;
                const double sz = inst_.layers[static_cast<std::size_t>(l)].size_mb;
                newbytes += sz;
                delay += sz;
                scratch_pulls_.push_back(l);
            }
            if (st.storage_used[static_cast<std::size_t>(s)] + newbytes >
                inst_.servers[static_cast<std::size_t>(s)].storage_mb + 1e-9)
                continue;
            double comm = 0.0;
            for (const auto& [srv, w] : rs.virt_edges) comm += w * inst_.hops(s, srv);
            for (const auto& [peer, w] : rs.real_edges)
                if (peer < t) comm += w * inst_.hops(s, node.assigned[static_cast<std::size_t>(peer)]);
            const double delta =
                c1_ * delay / inst_.servers[static_cast<std::size_t>(s)].cloud_bw_mbps + c2_ * comm -
                c2l_ * xbar_at_[static_cast<std::size_t>(t) * n_ + s];
            const double child_fixed = st.fixed_cost + delta;

            child[static_cast<std::size_t>(t)] = static_cast<std::int16_t>(s);

            if (depth + 1 == m_) {
                const double cost = child_fixed + offset_const_;
                if (cost < best_cost_) {
                    best_cost_ = cost;
                    best_assign_ = child;
                    ++stats.incumbent_updates;
                }
                continue;
            }

            // child bound: apply the pull/cpu deltas, refresh only marginals the
            // new pulls could have lowered (sharers at server s) or the new
            // fixed edges tighten; untouched marginals stay admissible
            st.residual_cpu[static_cast<std::size_t>(s)] -= rs.cpu;
            st.storage_used[static_cast<std::size_t>(s)] += newbytes;
            for (int l : scratch_pulls_) st.pulled[static_cast<std::size_t>(s) * l_ + l] = 1;

            double child_summarg = summarg - minmarg_[static_cast<std::size_t>(t)];
            bool dead = false;
            for (int s2 : affected_) {
                const double prev = minmarg_[static_cast<std::size_t>(s2)];
                const double now = best_marginal(s2, depth + 1, child, st, t, depth + 1);
                if (now == kInf) {
                    dead = true;
                    break;
                }
                child_summarg += now - prev;
            }

            if (!dead) {
                const double bound = child_fixed + offset_const_ + child_summarg;
                if (bound < best_cost_) {
                    open.push(Node{bound, seq++, child});
                    ++stats.nodes_created;
                }
            }

            for (int l : scratch_pulls_) st.pulled[static_cast<std::size_t>(s) * l_ + l] = 0;
            st.storage_used[static_cast<std::size_t>(s)] -= newbytes;
            st.residual_cpu[static_cast<std::size_t>(s)] += rs.cpu;
        }
    }

    void seed_incumbent() {
        best_cost_ = kInf;
        best_assign_.clear();
        if (m_ == 0) {
            best_cost_ = offset_const_;
            return;
        }
        const Placement ref = model_.decode_x(spec_.x_bar);
        std::vector<std::int16_t> assign(static_cast<std::size_t>(m_));
        for (int t = 0; t < m_; ++t)
            assign[static_cast<std::size_t>(t)] = static_cast<std::int16_t>(
                ref[static_cast<std::size_t>(services_[static_cast<std::size_t>(t)].app)]
                   [static_cast<std::size_t>(services_[static_cast<std::size_t>(t)].idx)]);
        State st;
        replay(assign, m_, st);
        for (int s = 0; s < n_; ++s) {
            if (st.residual_cpu[static_cast<std::size_t>(s)] < -1e-9) return;
            if (st.storage_used[static_cast<std::size_t>(s)] >
                inst_.servers[static_cast<std::size_t>(s)].storage_mb + 1e-9)
                return;
        }
        best_cost_ = st.fixed_cost + offset_const_;
        best_assign_ = std::move(assign);
    }

    Placement assemble_placement() const {
        Placement x(inst_.apps.size());
        for (std::size_t k = 0; k < inst_.apps.size(); ++k)
            x[k].assign(inst_.apps[k].services.size(), inst_.apps[k].source_server);
        for (int t = 0; t < m_; ++t) {
            const auto& rs = services_[static_cast<std::size_t>(t)];
            x[static_cast<std::size_t>(rs.app)][static_cast<std::size_t>(rs.idx)] =
                best_assign_.empty() ? 0 : best_assign_[static_cast<std::size_t>(t)];
        }
        return x;
    }

    const SubproblemSpec& spec_;
    const VectorizedModel& model_;
    const Instance& inst_;

    int n_ = 0, l_ = 0, m_ = 0;
    double c1_ = 0.0, c2_ = 0.0, c2l_ = 0.0;
    double offset_const_ = 0.0;
    std::vector<RealService> services_;
    std::vector<double> xbar_at_;
    std::vector<std::vector<int>> layer_members_;

    std::vector<double> minmarg_;
    std::vector<int> rep_;
    std::vector<int> affected_;
    std::vector<int> scratch_pulls_;

    double best_cost_ = 0.0;
    std::vector<std::int16_t> best_assign_;
};

} // namespace detail

/// Exact minimizer of the convex subproblem (best-first branch-and-bound,
/// deterministic tie-break by node creation order, i.e. lexicographic
/// (app, service, server)). Returns the best incumbent with stats.optimal
/// false when the node budget ran out first.
inline SubproblemSolution solve_subproblem(const SubproblemSpec& spec) {
    detail::SubproblemSearch search(spec);
    return search.run();
}

} // namespace msdeploy
