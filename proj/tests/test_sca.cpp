#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "msdeploy/io.hpp"
#include "msdeploy/sca.hpp"

using namespace msdeploy;

TEST_CASE("initial point lands everything on a single ample server") {
    Instance base;
    base.servers = {Server{0, 50.0, 1e6, 150.0}};
    base.layers = {Layer{0, 10.0}};
    Application app;
    app.id = 0;
    app.source_server = 0;
    app.ingress_kb = 10.0;
    for (int i = 0; i < 3; ++i) {
        Microservice ms;
        ms.app = 0;
        ms.idx = i;
        ms.cpu_demand_ghz = 1.0;
        ms.layers = {0};
        app.services.push_back(ms);
    }
    app.traffic = Matrix(3, 3, 0.0);
    app.traffic(0, 1) = 100.0;
    app.traffic(1, 2) = 100.0;
    base.apps = {app};
    base.hops = build_hop_matrix({{0}});
    const Instance inst = attach_virtual_sources(base);
    const auto [x, d] = initial_feasible(inst, 0);
    for (int v : x[0]) CHECK(v == 0);
}

TEST_CASE("initial point is feasible on generated instances") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        GeneratorParams p;  // full experimental ranges
        p.seed = seed + 11;
        const Instance inst = attach_virtual_sources(generate_instance(p));
        const auto [x, d] = initial_feasible(inst, seed);
        CHECK(check_feasibility(inst, Deployment{x, d}).ok);
    }
}

TEST_CASE("unpackable demands raise NoFeasiblePoint") {
    // total demand fits, but three 0.6 GHz services cannot pack into two 1.0 GHz bins
    Instance base;
    base.servers = {Server{0, 1.0, 1e5, 120.0}, Server{1, 1.0, 1e5, 120.0}};
    base.layers = {Layer{0, 10.0}};
    Application app;
    app.id = 0;
    app.source_server = 0;
    app.ingress_kb = 10.0;
    for (int i = 0; i < 3; ++i) {
        Microservice ms;
        ms.app = 0;
        ms.idx = i;
        ms.cpu_demand_ghz = 0.6;
        ms.layers = {0};
        app.services.push_back(ms);
    }
    app.traffic = Matrix(3, 3, 0.0);
    app.traffic(0, 1) = 100.0;
    app.traffic(1, 2) = 100.0;
    base.apps = {app};
    base.hops = build_hop_matrix({{0, 1}, {1, 0}});
    CHECK_NOTHROW(base.validate());
    const Instance inst = attach_virtual_sources(base);
    CHECK_THROWS_AS(initial_feasible(inst, 0), NoFeasiblePoint);
}

TEST_CASE("theta = 1 converges within two iterations to the enumerated optimum") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Instance inst =
            attach_virtual_sources(testutil::small_instance(seed + 50, 3, 1, 2, 2, 3));
        ScaConfig cfg;
        cfg.theta = 1.0;
        cfg.seed = seed;
        const ScaResult res = sca_solve(inst, cfg);
        CHECK(res.trace.converged);
        CHECK(res.trace.iterates.size() <= 3);  // initial point plus at most two solves
        CHECK(check_feasibility(inst, res.deployment).ok);

        const UtilityConfig ucfg = make_utility_config(normalization_bounds(inst), 1.0, false);
        const testutil::EnumerationResult oracle = testutil::enumerate_best_utility(inst, ucfg);
        const double got = ucfg.c1() * testutil::scalar_pull_delay(
                                           inst, testutil::pulls_by_set_union(inst, res.deployment.x));
        CHECK(got == doctest::Approx(oracle.min_cost).epsilon(1e-9));
    }
}

TEST_CASE("objective sequence is non-increasing with alpha = 1") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        for (double theta : {0.0, 0.3, 0.5, 0.8, 1.0}) {
            const Instance inst =
                attach_virtual_sources(testutil::small_instance(seed + 200, 3, 1, 2, 2, 4));
            ScaConfig cfg;
            cfg.theta = theta;
            cfg.seed = seed;
            const ScaResult res = sca_solve(inst, cfg);
            REQUIRE(!res.trace.iterates.empty());
            for (std::size_t r = 1; r < res.trace.iterates.size(); ++r)
                CHECK(res.trace.iterates[r].u <= res.trace.iterates[r - 1].u + 1e-9);
            CHECK(res.trace.converged);
            CHECK(check_feasibility(inst, res.deployment).ok);
        }
    }
}

TEST_CASE("same seed gives bit-identical traces") {
    const Instance inst = attach_virtual_sources(testutil::small_instance(77, 3, 2, 2, 2, 3));
    ScaConfig cfg;
    cfg.theta = 0.5;
    cfg.seed = 7;
    const ScaResult a = sca_solve(inst, cfg);
    const ScaResult b = sca_solve(inst, cfg);
    std::ostringstream sa, sb;
    write_trace(sa, a.trace);
    write_trace(sb, b.trace);
    CHECK(sa.str() == sb.str());
    CHECK(a.deployment.x == b.deployment.x);
}

TEST_CASE("converged points are fixed points of the subproblem map") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Instance inst =
            attach_virtual_sources(testutil::small_instance(seed + 400, 3, 1, 2, 2, 3));
        ScaConfig cfg;
        cfg.theta = 0.5;
        cfg.seed = seed;
        const ScaResult res = sca_solve(inst, cfg);
        REQUIRE(res.trace.converged);
        REQUIRE_FALSE(res.trace.budget_exhausted);

        const VectorizedModel model = vectorize(inst);
        Matrix q(model.x_len, model.x_len);
        for (std::size_t r = 0; r < model.x_len; ++r)
            for (std::size_t c = 0; c < model.x_len; ++c) q(r, c) = model.W(r, c) + model.W(c, r);
        const SplitMatrices split = split_matrix(q);
        const UtilityConfig ucfg = make_utility_config(normalization_bounds(inst), 0.5, false);
        const SubproblemSpec spec =
            build_subproblem(model, split, ucfg, cfg, model.encode_x(res.deployment.x),
                             model.encode_d(res.deployment.d));
        const SubproblemSolution again = solve_subproblem(spec);
        CHECK(again.placement == res.deployment.x);
    }
}

TEST_CASE("relaxed mode returns a feasible binary plan") {
    const Instance inst = attach_virtual_sources(testutil::small_instance(90, 3, 1, 2, 2, 3));
    ScaConfig cfg;
    cfg.alpha = 0.5;
    cfg.theta = 0.5;
    cfg.epsilon = 0.05;
    cfg.max_iters = 25;
    const ScaResult res = sca_solve(inst, cfg);
    CHECK(check_feasibility(inst, res.deployment).ok);
    // iterates live in [0,1]
    for (const auto& it : res.trace.iterates)
        for (double v : it.x_vec) {
            CHECK(v >= -1e-12);
            CHECK(v <= 1.0 + 1e-12);
        }
}

TEST_CASE("observer sees every iteration") {
    const Instance inst = attach_virtual_sources(testutil::small_instance(91, 3, 1, 1, 2, 3));
    ScaConfig cfg;
    cfg.theta = 0.5;
    int calls = 0;
    const ScaResult res = sca_solve(inst, cfg, [&](int iter, const SubproblemSpec&,
                                                   const SubproblemSolution& sol) {
        ++calls;
        CHECK(iter == calls);
        CHECK(sol.stats.optimal);
    });
    CHECK(calls == static_cast<int>(res.trace.iterates.size()) - 1);
}

TEST_CASE("config validation") {
    const Instance inst = attach_virtual_sources(testutil::tiny_instance());
    ScaConfig cfg;
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(sca_solve(inst, cfg), BadInput);
    cfg = {};
    cfg.epsilon = 0.0;
    CHECK_THROWS_AS(sca_solve(inst, cfg), BadInput);
    cfg = {};
    cfg.max_iters = 0;
    CHECK_THROWS_AS(sca_solve(inst, cfg), BadInput);
    cfg = {};
    cfg.theta = 1.2;
    CHECK_THROWS_AS(sca_solve(inst, cfg), BadInput);
    Instance unaug = testutil::tiny_instance();
    CHECK_THROWS_AS(sca_solve(unaug, ScaConfig{}), NotAugmented);
}
