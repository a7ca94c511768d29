#include <doctest.h>

#include "helpers.hpp"
#include "msdeploy/baselines.hpp"
#include "msdeploy/experiment.hpp"
#include "msdeploy/objective.hpp"

using namespace msdeploy;

namespace {

double utility_of(const Instance& inst, const Deployment& dep, double theta) {
    const UtilityConfig cfg = make_utility_config(normalization_bounds(inst), theta);
    return utility(cfg, pull_delay(inst, dep.d), communication_overhead(inst, dep.x));
}

} // namespace

TEST_CASE("every baseline returns a feasible deployment") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        GeneratorParams p;
        p.seed = seed + 500;
        const Instance inst = attach_virtual_sources(generate_instance(p));
        ScaConfig cfg;
        cfg.seed = seed;
        CHECK(check_feasibility(inst, gds(inst, 0.5)).ok);
        CHECK(check_feasibility(inst, ls(inst)).ok);
        CHECK(check_feasibility(inst, k8s_default(inst)).ok);
        CHECK(check_feasibility(inst, lds(inst, cfg)).ok);
        CHECK(check_feasibility(inst, cds(inst, cfg)).ok);
    }
}

TEST_CASE("baselines are deterministic") {
    const Instance inst = attach_virtual_sources(testutil::small_instance(314, 4, 2, 3, 2, 4));
    ScaConfig cfg;
    cfg.seed = 3;
    CHECK(gds(inst, 0.4).x == gds(inst, 0.4).x);
    CHECK(ls(inst).x == ls(inst).x);
    CHECK(k8s_default(inst).x == k8s_default(inst).x);
    CHECK(lds(inst, cfg).x == lds(inst, cfg).x);
    CHECK(cds(inst, cfg).x == cds(inst, cfg).x);
}

TEST_CASE("gds co-locates the heaviest chain pair when capacity is ample") {
    Instance base = testutil::tiny_instance();
    base.apps[0].traffic(0, 1) = 1900.0;  // dominant edge
    base.apps[0].ingress_kb = 150.0;
    const Instance inst = attach_virtual_sources(base);
    const Deployment dep = gds(inst, 0.5);
    CHECK(dep.x[0][1] == dep.x[0][2]);  // the heavy pair shares a server
}

TEST_CASE("gds at theta 0 processes chain items first") {
    // chain items keep positive weights at theta = 0 while layer items drop
    // to zero, so both endpoints of the only heavy edge co-locate before any
    // bandwidth-greedy layer placement can separate them
    Instance base = testutil::tiny_instance();
    base.apps[0].traffic(0, 1) = 1500.0;
    // make server 1 the bandwidth magnet; chain-first still glues the pair
    base.servers[1].cloud_bw_mbps = 200.0;
    const Instance inst = attach_virtual_sources(base);
    const Deployment dep = gds(inst, 0.0);
    CHECK(dep.x[0][1] == dep.x[0][2]);
}

TEST_CASE("ls places the first service on the fastest feasible downlink") {
    const Instance inst = attach_virtual_sources(testutil::tiny_instance());
    const Deployment dep = ls(inst);
    // no layers anywhere yet: the largest image goes to the higher-bandwidth
    // server (id 1 at 160 MB/s), and the second shares a layer so it follows
    CHECK(dep.x[0][1] == 1);
    CHECK(dep.x[0][2] == 1);
}

TEST_CASE("k8s co-locates duplicate images and breaks disjoint ties by id order") {
    SUBCASE("duplicate image lands where it is already stored") {
        Instance base = testutil::tiny_instance();
        base.apps[0].services[1].layers = {0, 1};  // same image as service 0
        const Instance inst = attach_virtual_sources(base);
        const Deployment dep = k8s_default(inst);
        CHECK(dep.x[0][1] == dep.x[0][2]);
    }
    SUBCASE("disjoint images with equal bandwidth fall back to lowest id") {
        Instance base = testutil::tiny_instance();
        base.servers[1].cloud_bw_mbps = 120.0;  // equalize
        base.apps[0].services[0].layers = {0};
        base.apps[0].services[1].layers = {1};
        const Instance inst = attach_virtual_sources(base);
        const Deployment dep = k8s_default(inst);
        // first processed service (largest image = layer 0 at 500 MB) -> server 0
        CHECK(dep.x[0][1] == 0);
    }
}

TEST_CASE("lds and cds are exactly the pinned-theta solver") {
    const Instance inst = attach_virtual_sources(testutil::small_instance(55, 3, 1, 2, 2, 3));
    ScaConfig cfg;
    cfg.seed = 9;
    SUBCASE("lds equals sca at theta 1") {
        ScaConfig pinned = cfg;
        pinned.theta = 1.0;
        CHECK(lds(inst, cfg).x == sca_solve(inst, pinned).deployment.x);
    }
    SUBCASE("cds equals sca at theta 0") {
        ScaConfig pinned = cfg;
        pinned.theta = 0.0;
        CHECK(cds(inst, cfg).x == sca_solve(inst, pinned).deployment.x);
    }
}

TEST_CASE("cds reaches zero overhead on a capacity-ample instance") {
    Instance base = testutil::tiny_instance();
    base.apps.push_back(base.apps[0]);
    base.apps[1].id = 1;
    base.apps[1].source_server = 1;
    const Instance inst = attach_virtual_sources(base);
    ScaConfig cfg;
    const Deployment dep = cds(inst, cfg);
    CHECK(communication_overhead(inst, dep.x) == 0.0);
}

TEST_CASE("extreme-theta ordering against every baseline on tiny instances") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Instance inst =
            attach_virtual_sources(testutil::small_instance(seed + 600, 3, 1, 2, 2, 3));
        ScaConfig cfg;
        cfg.seed = seed;
        // theta = 1 is solved exactly, so the sca value lower-bounds everyone
        cfg.theta = 1.0;
        const double f_sca1 = utility_of(inst, sca_solve(inst, cfg).deployment, 1.0);
        CHECK(f_sca1 <= utility_of(inst, gds(inst, 1.0), 1.0) + 1e-9);
        CHECK(f_sca1 <= utility_of(inst, ls(inst), 1.0) + 1e-9);
        CHECK(f_sca1 <= utility_of(inst, k8s_default(inst), 1.0) + 1e-9);
        CHECK(f_sca1 <= utility_of(inst, cds(inst, cfg), 1.0) + 1e-9);
        // theta = 0: descent from a start no worse than any heuristic point
        cfg.theta = 0.0;
        const double f_sca0 = utility_of(inst, sca_solve(inst, cfg).deployment, 0.0);
        CHECK(f_sca0 <= utility_of(inst, gds(inst, 0.0), 0.0) + 1e-9);
        CHECK(f_sca0 <= utility_of(inst, ls(inst), 0.0) + 1e-9);
        CHECK(f_sca0 <= utility_of(inst, k8s_default(inst), 0.0) + 1e-9);
        CHECK(f_sca0 <= utility_of(inst, lds(inst, cfg), 0.0) + 1e-9);
    }
}

TEST_CASE("endpoint specialists win their own metric in aggregate") {
    double lds_delay = 0.0, cds_delay = 0.0, lds_overhead = 0.0, cds_overhead = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const Instance inst =
            attach_virtual_sources(testutil::small_instance(seed + 700, 3, 1, 2, 2, 3));
        ScaConfig cfg;
        cfg.seed = seed;
        const Deployment l = lds(inst, cfg);
        const Deployment c = cds(inst, cfg);
        lds_delay += pull_delay(inst, l.d);
        cds_delay += pull_delay(inst, c.d);
        lds_overhead += communication_overhead(inst, l.x);
        cds_overhead += communication_overhead(inst, c.x);
        ++count;
    }
    REQUIRE(count == 12);
    CHECK(lds_delay <= cds_delay + 1e-9);
    CHECK(cds_overhead <= lds_overhead + 1e-9);
}

TEST_CASE("k8s aggregate pull delay stays below the no-sharing baseline") {
    double delay = 0.0, baseline = 0.0;
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        GeneratorParams p;
        p.seed = seed * 3 + 950;
        const Instance inst = attach_virtual_sources(generate_instance(p));
        delay += pull_delay(inst, k8s_default(inst).d);
        baseline += baseline_metrics(inst).pull_delay_s;
    }
    CHECK(delay <= baseline);
}

TEST_CASE("sca matches the brute-force optimum on most tiny instances") {
    int match = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance inst =
            attach_virtual_sources(testutil::small_instance(seed * 5 + 20000, 3, 1, 2, 2, 3));
        ScaConfig cfg;
        cfg.theta = 0.5;
        cfg.seed = seed;
        const ScaResult res = sca_solve(inst, cfg);
        const UtilityConfig u = make_utility_config(normalization_bounds(inst), 0.5, false);
        const auto best = testutil::enumerate_best_utility(inst, u);
        const double got =
            u.c1() * testutil::scalar_pull_delay(inst,
                                                 testutil::pulls_by_set_union(inst, res.deployment.x)) +
            u.c2() * testutil::scalar_comm_overhead(inst, res.deployment.x);
        ++total;
        if (got <= best.min_cost + 1e-9) ++match;
    }
    // a stationary point need not be global; record the observed rate and
    // require at least a majority
    MESSAGE("brute-force optimum matched on ", match, "/", total, " tiny instances");
    CHECK(match * 2 > total);
}

TEST_CASE("ls overhead is no better than cds when chains share no layers") {
    double ls_total = 0.0, cds_total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Instance base = testutil::small_instance(seed + 800, 3, 1, 2, 2, 3);
        // strip layer overlap: give every service its own private layer
        int next = 0;
        for (auto& app : base.apps)
            for (auto& ms : app.services) ms.layers = {next++};
        base.layers.clear();
        for (int l = 0; l < next; ++l) base.layers.push_back(Layer{l, 100.0 + 10.0 * l});
        const Instance inst = attach_virtual_sources(base);
        ScaConfig cfg;
        cfg.seed = seed;
        ls_total += communication_overhead(inst, ls(inst).x);
        cds_total += communication_overhead(inst, cds(inst, cfg).x);
    }
    CHECK(cds_total <= ls_total + 1e-9);
}
