#include <catch2/catch_amalgamated.hpp>

#include "qghs/diagnostics.hpp"
#include "qghs/sqg.hpp"

using namespace qghs;

namespace {

ScalarField3D from_function(const GridPtr& g, const std::function<real(real, real, real)>& f) {
    std::vector<real> phys(std::size_t(g->Nz()) * g->nh());
    for (int j = 0; j < g->Nz(); ++j)
        for (int iy = 0; iy < g->Ny(); ++iy)
            for (int ix = 0; ix < g->Nx(); ++ix)
                phys[j * g->nh() + g->idx(ix, iy)] = f(g->z_center(j), g->x1(ix), g->x2(iy));
    return to_spectral(g, phys);
}

/// two interacting modes with interior PV structure
ScalarField3D two_mode_ic(const GridPtr& g, real a1, real a2) {
    return from_function(g, [&](real z, real x, real y) {
        return a1 * std::sin(pi * z / g->Zmax()) * std::cos(x) +
               a2 * std::sin(2.0 * pi * z / g->Zmax()) * std::cos(y + 0.7);
    });
}

ScalarField3D steady_ic(const GridPtr& g) {
    return from_function(g, [](real z, real x, real) { return std::exp(-z) * std::cos(x); });
}

} // namespace

TEST_CASE("nonlinear term vanishes on structurally steady data") {
    auto g = make_grid(1.0, 32, 32, 16, 8.0);
    auto lam = LambdaProfile::constant(*g, 1.0);
    SECTION("x2-independent harmonic mode") {
        State s = make_state(steady_ic(g), lam);
        VectorField3D N = nonlinear_term(s.psi, s.G, 0.0);
        CHECK(norm_L2_3d(N) < 1e-12 * norm_L2_3d(s.G));
    }
    SECTION("constant stream function") {
        auto psi = from_function(g, [](real, real, real) { return 2.0; });
        VectorField3D G = grad_lambda(psi, lam);
        VectorField3D N = nonlinear_term(psi, G, 0.0);
        CHECK(norm_L2_3d(N) == 0.0);
    }
    SECTION("z-independent stream function has zero vertical advection") {
        auto psi = from_function(g, [](real, real x, real y) { return std::cos(x) * std::sin(y); });
        VectorField3D G = grad_lambda(psi, lam);
        VectorField3D N = nonlinear_term(psi, G, 0.0);
        real m = 0.0;
        for (const auto& v : N.w.data) m = std::max(m, std::abs(v));
        CHECK(m < 1e-13);
        CHECK(norm_L2_3d(N) > 0.0); // the horizontal 2D advection survives
    }
}

TEST_CASE("reformulated right-hand side") {
    auto g = make_grid(1.0, 32, 32, 16, 8.0);
    auto lam = LambdaProfile::constant(*g, 1.0);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.T = 0.0;
    SECTION("steady state gives zero rhs after projection") {
        State s = make_state(steady_ic(g), lam);
        VectorField3D r = rhs_reformulated(s.psi, s.G, cfg, lam, nullptr);
        CHECK(norm_L2_3d(r) < 1e-9 * norm_L2_3d(s.G));
    }
    SECTION("beta term vanishes on the zero state") {
        SolverConfig cb = cfg;
        cb.beta = 0.7;
        ScalarField3D zero(g);
        zero.lv.fill_zero();
        State s;
        s.G = VectorField3D(g);
        s.G.w.fill_zero();
        s.G.h1.fill_zero();
        s.G.h2.fill_zero();
        s.psi = zero;
        VectorField3D r = rhs_reformulated(s.psi, s.G, cb, lam, nullptr);
        CHECK(norm_L2_3d(r) == 0.0);
    }
    SECTION("stronger mollification weakens the advection term") {
        Rng rng(3);
        State s = make_state(random_scalar(g, rng, 5, 10), lam);
        real prev = -1.0;
        for (real delta : {0.0, 0.5, 1.0, 2.0}) {
            VectorField3D N = nonlinear_term(s.psi, s.G, delta);
            const real n = norm_L2_3d(N);
            if (prev >= 0.0) CHECK(n <= prev * (1.0 + 1e-12));
            prev = n;
        }
    }
}

TEST_CASE("integrating-factor step") {
    auto g = make_grid(1.0, 32, 32, 16, 8.0);
    auto lam = LambdaProfile::constant(*g, 1.0);
    SECTION("pure hyperviscous decay of a |k| = 1 mode is exact per step") {
        SolverConfig cfg;
        cfg.dt = 0.02;
        cfg.T = 0.0;
        cfg.eps = 0.3;
        auto psi0 = from_function(
            g, [&](real z, real x, real) { return 0.01 * std::sin(pi * z / g->Zmax()) * std::cos(x); });
        State s = make_state(psi0, lam);
        const real n0 = norm_L2_3d(s.G);
        step(s, cfg, lam);
        const real n1 = norm_L2_3d(s.G);
        // |k| + |k|^3 = 2 at |k| = 1
        CHECK(n1 / n0 == Catch::Approx(std::exp(-2.0 * cfg.eps * cfg.dt)).epsilon(1e-11));
    }
    SECTION("steady state is preserved per step") {
        SolverConfig cfg;
        cfg.dt = 0.02;
        cfg.T = 0.0;
        State s = make_state(steady_ic(g), lam);
        State before = s;
        const real reproj = step(s, cfg, lam);
        VectorField3D diff = s.G;
        axpy(diff, -1.0, before.G);
        CHECK(norm_L2_3d(diff) < 1e-9 * norm_L2_3d(before.G));
        CHECK(reproj < 1e-10);
    }
    SECTION("CFL violation raises") {
        SolverConfig cfg;
        cfg.dt = 0.5; // far above the bound for |U| ~ 1 on this grid
        cfg.T = 0.0;
        State s = make_state(steady_ic(g), lam);
        CHECK_THROWS_AS(step(s, cfg, lam), Error);
    }
}

TEST_CASE("conservation ledger at eps = delta = 0") {
    auto g = make_grid(1.0, 32, 32, 16, 4.0);
    auto lam = LambdaProfile::constant(*g, 1.0);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.T = 0.2;
    State s0 = make_state(two_mode_ic(g, 0.1, 0.08), lam);
    const real e0 = norm_L2_3d(s0.G);
    const real q0 = norm_L2_3d(div(s0.G));
    const real t0 = norm_L2_surface(trace_gamma_nu(s0.G));
    State s = s0;
    for (int n = 0; n < 20; ++n) step(s, cfg, lam);
    // spatial terms conserve exactly; what is left is RK4 time error
    CHECK(std::abs(norm_L2_3d(s.G) - e0) < 1e-7 * e0);
    CHECK(std::abs(norm_L2_3d(div(s.G)) - q0) < 1e-7 * q0);
    CHECK(std::abs(norm_L2_surface(trace_gamma_nu(s.G)) - t0) < 1e-7 * t0);
}

TEST_CASE("run: trivial and steady trajectories") {
    auto g = make_grid(1.0, 32, 32, 16, 8.0);
    auto lam = LambdaProfile::constant(*g, 1.0);
    SolverConfig cfg;
    cfg.dt = 0.02;
    cfg.T = 1.0;
    SECTION("zero data stays zero") {
        ScalarField3D zero(g);
        zero.lv.fill_zero();
        Trajectory tr = run(make_state(zero, lam), cfg, lam, nullptr, 10);
        REQUIRE(tr.ok);
        CHECK(norm_L2_3d(tr.samples.back().G) == 0.0);
    }
    SECTION("steady state drifts less than 1e-7 over unit time") {
        State s0 = make_state(steady_ic(g), lam);
        Trajectory tr = run(s0, cfg, lam, nullptr, 25);
        REQUIRE(tr.ok);
        VectorField3D diff = tr.samples.back().G;
        axpy(diff, -1.0, s0.G);
        CHECK(norm_L2_3d(diff) < 1e-7 * norm_L2_3d(s0.G));
    }
}

TEST_CASE("classical scheme") {
    auto g = make_grid(1.0, 32, 32, 16, 8.0);
    auto lam = LambdaProfile::constant(*g, 1.0);
    SolverConfig cfg;
    cfg.dt = 0.02;
    cfg.T = 0.0;
    cfg.scheme = SolverConfig::Scheme::Classical;
    SECTION("steady-state time derivatives vanish") {
        ClassicalState c = make_classical_state(steady_ic(g), lam);
        auto [dq, dth] = classical_rhs(c.psi, c.q, c.theta_b, cfg, nullptr);
        CHECK(norm_L2_3d(dq) < 1e-11);
        CHECK(norm_L2_surface(dth) < 1e-11 * norm_L2_surface(c.theta_b));
    }
    SECTION("recovery consistency is exact") {
        ClassicalState c = make_classical_state(two_mode_ic(g, 0.1, 0.05), lam);
        EllipticSolution s = recover_classical(c.q, c.theta_b, lam);
        SurfaceField2D th = trace_gamma_nu(s.grad);
        axpy(th, -1.0, c.theta_b);
        CHECK(norm_L2_surface(th) < 1e-11 * norm_L2_surface(c.theta_b));
        ScalarField3D q = div(s.grad);
        axpy(q, -1.0, c.q);
        CHECK(norm_L2_3d(q) < 1e-11 * norm_L2_3d(c.q));
    }
    SECTION("beta source respects the x1-symmetry of cos(x2)") {
        SolverConfig cb = cfg;
        cb.beta = 1.3;
        auto psi0 = from_function(g, [](real, real, real y) { return 0.1 * std::cos(y); });
        ClassicalState c = make_classical_state(psi0, lam);
        auto [dq, dth] = classical_rhs(c.psi, c.q, c.theta_b, cb, nullptr);
        CHECK(norm_L2_3d(dq) < 1e-12);
    }
    SECTION("classical conservation of q and theta_b") {
        ClassicalState c = make_classical_state(two_mode_ic(g, 0.08, 0.06), lam);
        const real q0 = norm_L2_3d(c.q);
        const real t0 = norm_L2_surface(c.theta_b);
        SolverConfig cr = cfg;
        for (int n = 0; n < 10; ++n) classical_step(c, cr, lam);
        CHECK(std::abs(norm_L2_3d(c.q) - q0) < 1e-9 * q0);
        CHECK(std::abs(norm_L2_surface(c.theta_b) - t0) < 1e-9 * t0);
    }
}

TEST_CASE("cross-scheme agreement on smooth data") {
    auto g = make_grid(1.0, 32, 32, 16, 4.0);
    auto lam = LambdaProfile::constant(*g, 1.0);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.T = 0.2;
    ScalarField3D psi0 = two_mode_ic(g, 0.08, 0.06);
    State s = make_state(psi0, lam);
    ClassicalState c = make_classical_state(psi0, lam);
    const int nsteps = 20;
    for (int n = 0; n < nsteps; ++n) {
        step(s, cfg, lam);
        classical_step(c, cfg, lam);
    }
    EllipticSolution rec = recover_classical(c.q, c.theta_b, lam);
    VectorField3D diff = rec.grad;
    axpy(diff, -1.0, s.G);
    CHECK(norm_L2_3d(diff) < 2e-3 * norm_L2_3d(s.G));
}

TEST_CASE("picard map") {
    auto g = make_grid(1.0, 32, 32, 12, 4.0);
    auto lam = LambdaProfile::constant(*g, 1.0);
    SolverConfig cfg;
    cfg.dt = 0.02;
    cfg.eps = 0.1;
    cfg.delta = 4.0 * g->dx();
    State s0 = make_state(two_mode_ic(g, 0.1, 0.07), lam);

    SECTION("zero candidate gives the decayed initial data") {
        std::vector<VectorField3D> cand;
        VectorField3D z(g);
        z.w.fill_zero();
        z.h1.fill_zero();
        z.h2.fill_zero();
        for (int i = 0; i < 9; ++i) cand.push_back(z);
        auto out = picard_T_delta(cand, s0.G, cfg, lam);
        REQUIRE(out.size() == 5);
        for (int n = 1; n <= 4; ++n) {
            VectorField3D expect = s0.G;
            hyperviscous_factor(expect, cfg.eps, n * cfg.dt);
            axpy(expect, -1.0, out[n]);
            CHECK(norm_L2_3d(expect) < 1e-12 * norm_L2_3d(s0.G));
        }
    }
    SECTION("the regularized trajectory is nearly a fixed point") {
        SolverConfig half = cfg;
        half.dt = 0.5 * cfg.dt;
        half.T = 4 * cfg.dt;
        Trajectory tr = run(s0, half, lam, nullptr, 1);
        REQUIRE(tr.ok);
        std::vector<VectorField3D> cand;
        for (const auto& smp : tr.samples) cand.push_back(smp.G);
        auto out = picard_T_delta(cand, s0.G, cfg, lam);
        real worst = 0.0;
        for (std::size_t n = 0; n < out.size(); ++n) {
            VectorField3D diff = out[n];
            axpy(diff, -1.0, cand[2 * n]);
            worst = std::max(worst, norm_L2_3d(diff));
        }
        CHECK(worst < 1e-5 * norm_L2_3d(s0.G));
    }
}
