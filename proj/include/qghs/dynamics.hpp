/// Time evolution.
///
/// Reformulated scheme (the projector form): the evolved quantity is
/// G = grad_lambda Psi,
///   dG/dt + P_lambda( (grad-perp Psi_delta . grad-bar) G )
///         = beta P_lambda(Psi e1) + grad_lambda F - eps(D^{1/2}+D^{3/2}) G,
/// where Psi_delta = eta_delta * Psi mollifies only the advecting velocity
/// and the hyperviscous symbol -eps(|k|+|k|^3) is applied exactly through an
/// integrating factor (the mode-by-mode linear solve of the construction).
///
/// Classical scheme: advect q = L_lambda Psi and theta_b = gamma_nu(grad_
/// lambda Psi) directly, recovering Psi per stage from the elliptic solve.
/// Runs of the two schemes from the same data agree to discretization order;
/// the acceptance suite checks that.
#pragma once

#include <functional>
#include <optional>

#include "hodge.hpp"

namespace qghs {

struct SolverConfig {
    real eps = 0.0;   // hyperviscosity coefficient
    real delta = 0.0; // mollification length of the advecting velocity
    real beta = 0.0;  // beta-plane coefficient
    real dt = 0.0;
    real T = 0.0;
    real cfl_safety = 0.5;
    enum class Scheme { Reformulated, Classical } scheme = Scheme::Reformulated;

    void validate() const {
        require(dt > 0.0, "invalid-parameter", "dt must be positive");
        require(T >= 0.0, "invalid-parameter", "T must be >= 0");
        require(eps >= 0.0, "invalid-parameter", "eps must be >= 0");
        require(delta >= 0.0, "invalid-parameter", "delta must be >= 0");
        require(cfl_safety > 0.0 && cfl_safety <= 1.0, "invalid-parameter",
                "CFL safety factor must be in (0, 1]");
    }
};

/// Static forcing: grad_lambda F precomputed from (f_L, f_nu), plus the raw
/// pieces for the classical scheme.
struct Forcing {
    ScalarField3D fL;
    SurfaceField2D fnu;
    VectorField3D gradF;
    bool active = false;
};

struct State {
    VectorField3D G;  // grad_lambda Psi, solver-consistent boundary fluxes
    ScalarField3D psi;
    real t = 0.0;
};

namespace detail {
/// Recovery solve without the k = 0 admissibility check (the balance holds
/// by construction for fields in the range of the projector; rounding noise
/// must not trip the public error path).
inline EllipticSolution recover_bvp(const SurfaceField2D& g, const LambdaProfile& lam,
                                    const ScalarField3D& f) {
    return solve_bvp(g.grid(), lam, BottomKind::NeumannFlux, &g, &f);
}
} // namespace detail

/// Psi from G: solve L_lambda Psi = div G with flux datum gamma_nu(G).
/// Exact (to rounding) whenever G is a solver-consistent gradient.
inline EllipticSolution recover_potential(const VectorField3D& G, const LambdaProfile& lam) {
    ScalarField3D f = div(G);
    SurfaceField2D g = trace_gamma_nu(G);
    return detail::recover_bvp(g, lam, f);
}

inline void zero_mean_vertical(VectorField3D& G) {
    for (int j = 0; j < G.w.nlev; ++j) G.w.level(j)[0] = cplx(0.0);
}

/// Build a consistent state from a stream-function sample: project
/// grad_lambda(psi0) onto the range of grad_lambda and recover the cached
/// potential.
inline State make_state(const ScalarField3D& psi0, const LambdaProfile& lam, real t = 0.0) {
    ScalarField3D p = psi0;
    dealias(p);
    VectorField3D G = project_lambda(grad_lambda(p, lam), lam);
    zero_mean_vertical(G);
    State s;
    s.G = std::move(G);
    s.psi = recover_potential(s.G, lam).psi;
    s.t = t;
    return s;
}

// ---- nonlinear term -----------------------------------------------------------

/// (grad-perp Psi_adv . grad-bar) G, products formed pointwise in physical
/// space per level and dealiased. The velocity is averaged onto faces for
/// the vertical component (one-sided at the walls); forming the products
/// pointwise is what makes the discrete conservation identities exact.
inline VectorField3D nonlinear_term(const ScalarField3D& psi_adv, const VectorField3D& G,
                                    real delta) {
    const GridPtr grid = psi_adv.grid();
    const auto& g = *grid;
    VectorField3D U = perp_gradient(delta > 0.0 ? mollify(psi_adv, delta) : psi_adv);
    VectorField3D N(grid);

    // face-averaged velocity levels (spectral)
    Levels Uf1(grid, g.Nz() + 1), Uf2(grid, g.Nz() + 1);
    parallel_for(g.Nz() + 1, [&](std::size_t jf) {
        const int j = int(jf);
        auto avg = [&](const Levels& src, Levels& dst) {
            cplx* o = dst.level(j);
            if (j == 0) {
                const cplx *a = src.level(0), *b = src.level(1), *c = src.level(2);
                for (std::size_t i = 0; i < g.nh(); ++i) o[i] = extrap_bottom_value(a, b, c, i);
            } else if (j == g.Nz()) {
                const cplx *a = src.level(g.Nz() - 1), *b = src.level(g.Nz() - 2),
                           *c = src.level(g.Nz() - 3);
                for (std::size_t i = 0; i < g.nh(); ++i) o[i] = extrap_bottom_value(a, b, c, i);
            } else {
                const cplx *lo = src.level(j - 1), *hi = src.level(j);
                for (std::size_t i = 0; i < g.nh(); ++i) o[i] = 0.5 * (lo[i] + hi[i]);
            }
        };
        avg(U.h1, Uf1);
        avg(U.h2, Uf2);
    });

    auto advect_level = [&](const cplx* u1, const cplx* u2, const cplx* field, cplx* out) {
        static thread_local std::vector<real> pu1, pu2, pd1, pd2, prod;
        static thread_local std::vector<cplx> d1, d2, scratch;
        const std::size_t nh = g.nh();
        d1.resize(nh);
        d2.resize(nh);
        pu1.resize(nh);
        pu2.resize(nh);
        pd1.resize(nh);
        pd2.resize(nh);
        prod.resize(nh);
        for (int iy = 0; iy < g.Ny(); ++iy)
            for (int ix = 0; ix < g.Nx(); ++ix) {
                const std::size_t id = g.idx(ix, iy);
                d1[id] = cplx(0.0, g.kx()[ix]) * field[id];
                d2[id] = cplx(0.0, g.ky()[iy]) * field[id];
            }
        synthesize_level(g, u1, pu1.data(), scratch);
        synthesize_level(g, u2, pu2.data(), scratch);
        synthesize_level(g, d1.data(), pd1.data(), scratch);
        synthesize_level(g, d2.data(), pd2.data(), scratch);
        for (std::size_t i = 0; i < nh; ++i) prod[i] = pu1[i] * pd1[i] + pu2[i] * pd2[i];
        analyze_level(g, prod.data(), out);
        dealias_level(g, out);
    };

    parallel_for(g.Nz(), [&](std::size_t j) {
        advect_level(U.h1.level(int(j)), U.h2.level(int(j)), G.h1.level(int(j)),
                     N.h1.level(int(j)));
        advect_level(U.h1.level(int(j)), U.h2.level(int(j)), G.h2.level(int(j)),
                     N.h2.level(int(j)));
    });
    parallel_for(g.Nz() + 1, [&](std::size_t j) {
        advect_level(Uf1.level(int(j)), Uf2.level(int(j)), G.w.level(int(j)),
                     N.w.level(int(j)));
    });
    return N;
}

/// Right-hand side of the reformulated equation, hyperviscosity excluded
/// (it is applied exactly by the integrating factor in step()).
inline VectorField3D rhs_reformulated(const ScalarField3D& psi, const VectorField3D& G,
                                      const SolverConfig& cfg, const LambdaProfile& lam,
                                      const Forcing* forcing) {
    VectorField3D A = nonlinear_term(psi, G, cfg.delta);
    scale(A, -1.0);
    if (cfg.beta != 0.0) {
        // beta P_lambda(Psi e1): e1 is the first horizontal direction
        VectorField3D be(psi.grid());
        be.w.fill_zero();
        be.h2.fill_zero();
        std::copy(psi.lv.data.begin(), psi.lv.data.end(), be.h1.data.begin());
        axpy(A, cfg.beta, be);
    }
    VectorField3D R = project_lambda(A, lam);
    if (forcing && forcing->active) axpy(R, 1.0, forcing->gradF);
    zero_mean_vertical(R);
    return R;
}

// ---- integrating factor -------------------------------------------------------

/// Multiply every mode by exp(-eps (|k|+|k|^3) tau).
inline void hyperviscous_factor(VectorField3D& G, real eps, real tau) {
    if (eps == 0.0 || tau == 0.0) return;
    auto m = [eps, tau](real k) { return std::exp(-eps * tau * (k + k * k * k)); };
    apply_multiplier(G.w, m);
    apply_multiplier(G.h1, m);
    apply_multiplier(G.h2, m);
}
inline void hyperviscous_factor(Levels& lv, real eps, real tau) {
    if (eps == 0.0 || tau == 0.0) return;
    apply_multiplier(lv, [eps, tau](real k) { return std::exp(-eps * tau * (k + k * k * k)); });
}

inline void check_cfl(const ScalarField3D& psi, const SolverConfig& cfg) {
    const auto& g = *psi.grid();
    const real umax =
        max_horizontal_speed(perp_gradient(cfg.delta > 0.0 ? mollify(psi, cfg.delta) : psi));
    if (umax <= 0.0) return;
    const real dt_max = cfg.cfl_safety * std::min(g.dx(), g.dy()) / umax;
    if (cfg.dt > dt_max)
        fail("cfl-violation", "dt = " + std::to_string(cfg.dt) + " exceeds CFL bound " +
                                  std::to_string(dt_max));
}

/// CFL ratio (dt / advective limit) for the diagnostics ledger.
inline real cfl_ratio(const ScalarField3D& psi, const SolverConfig& cfg) {
    const auto& g = *psi.grid();
    const real umax =
        max_horizontal_speed(perp_gradient(cfg.delta > 0.0 ? mollify(psi, cfg.delta) : psi));
    return cfg.dt * umax / (std::min(g.dx(), g.dy()));
}

/// One explicit RK4 step with the exact integrating factor.
/// Stage states stay in range(grad_lambda), so the final re-projection is a
/// rounding-level correction; its size is returned for the ledger.
inline real step(State& s, const SolverConfig& cfg, const LambdaProfile& lam,
                 const Forcing* forcing = nullptr) {
    check_cfl(s.psi, cfg);
    const real dt = cfg.dt;
    auto F = [&](const VectorField3D& G) {
        ScalarField3D psi = recover_potential(G, lam).psi;
        return rhs_reformulated(psi, G, cfg, lam, forcing);
    };
    auto scaled = [&](const VectorField3D& G, real tau) {
        VectorField3D out = G;
        hyperviscous_factor(out, cfg.eps, tau);
        return out;
    };

    VectorField3D k1 = F(s.G);

    VectorField3D Ga = s.G;
    axpy(Ga, 0.5 * dt, k1);
    hyperviscous_factor(Ga, cfg.eps, 0.5 * dt);
    VectorField3D k2 = F(Ga);

    VectorField3D Gb = scaled(s.G, 0.5 * dt);
    axpy(Gb, 0.5 * dt, k2);
    VectorField3D k3 = F(Gb);

    VectorField3D Gc = scaled(s.G, dt);
    {
        VectorField3D t3 = scaled(k3, 0.5 * dt);
        axpy(Gc, dt, t3);
    }
    VectorField3D k4 = F(Gc);

    VectorField3D Gn = scaled(s.G, dt);
    {
        VectorField3D t1 = scaled(k1, dt);
        axpy(Gn, dt / 6.0, t1);
        VectorField3D t2 = scaled(k2, 0.5 * dt);
        axpy(Gn, dt / 3.0, t2);
        VectorField3D t3 = scaled(k3, 0.5 * dt);
        axpy(Gn, dt / 3.0, t3);
        axpy(Gn, dt / 6.0, k4);
    }

    if (!finite(Gn)) fail("nan-detected", "state became non-finite at t = " + std::to_string(s.t));

    // re-projection: restore range(grad_lambda) and the k = 0 gauge
    HodgeDecomposition hd = decompose(Gn, lam);
    const real gnorm = norm_L2_3d(Gn);
    const real reproj = gnorm > 0.0 ? norm_L2_3d(hd.curl_part) / gnorm : 0.0;
    s.G = std::move(hd.grad_part);
    zero_mean_vertical(s.G);
    s.psi = recover_potential(s.G, lam).psi;
    s.t += dt;
    return reproj;
}

// ---- classical (q, theta) scheme ----------------------------------------------

struct ClassicalState {
    ScalarField3D q;       // L_lambda Psi (cell values; first/last cells carry
                           // the flux closure, see div())
    SurfaceField2D theta_b; // gamma_nu(grad_lambda Psi)
    ScalarField3D psi;
    real t = 0.0;
};

inline ClassicalState make_classical_state(const ScalarField3D& psi0, const LambdaProfile& lam,
                                           real t = 0.0) {
    State s = make_state(psi0, lam, t);
    ClassicalState c;
    c.q = div(s.G);
    c.theta_b = trace_gamma_nu(s.G);
    c.psi = std::move(s.psi);
    c.t = t;
    return c;
}

/// Psi from (q, theta_b); exact for solver-consistent pairs.
inline EllipticSolution recover_classical(const ScalarField3D& q, const SurfaceField2D& theta_b,
                                          const LambdaProfile& lam) {
    return detail::recover_bvp(theta_b, lam, q);
}

/// Advect a surface field by the traced velocity (u1, u2), dealiased.
inline SurfaceField2D advect_surface(const SurfaceField2D& u1, const SurfaceField2D& u2,
                                     const SurfaceField2D& f) {
    const auto& g = *f.grid();
    SurfaceField2D out(f.grid());
    std::vector<cplx> d1(g.nh()), d2(g.nh()), scratch;
    std::vector<real> pu1(g.nh()), pu2(g.nh()), pd1(g.nh()), pd2(g.nh()), prod(g.nh());
    for (int iy = 0; iy < g.Ny(); ++iy)
        for (int ix = 0; ix < g.Nx(); ++ix) {
            const std::size_t id = g.idx(ix, iy);
            d1[id] = cplx(0.0, g.kx()[ix]) * f.data()[id];
            d2[id] = cplx(0.0, g.ky()[iy]) * f.data()[id];
        }
    synthesize_level(g, u1.data(), pu1.data(), scratch);
    synthesize_level(g, u2.data(), pu2.data(), scratch);
    synthesize_level(g, d1.data(), pd1.data(), scratch);
    synthesize_level(g, d2.data(), pd2.data(), scratch);
    for (std::size_t i = 0; i < g.nh(); ++i) prod[i] = pu1[i] * pd1[i] + pu2[i] * pd2[i];
    analyze_level(g, prod.data(), out.data());
    dealias_level(g, out.data());
    return out;
}

/// (dq/dt, dtheta_b/dt) of the classical formulation, hyperviscosity excluded.
inline std::pair<ScalarField3D, SurfaceField2D> classical_rhs(const ScalarField3D& psi,
                                                              const ScalarField3D& q,
                                                              const SurfaceField2D& theta_b,
                                                              const SolverConfig& cfg,
                                                              const Forcing* forcing) {
    const GridPtr grid = psi.grid();
    const auto& g = *grid;
    ScalarField3D psi_adv = cfg.delta > 0.0 ? mollify(psi, cfg.delta) : psi;
    VectorField3D U = perp_gradient(psi_adv);

    ScalarField3D dq(grid);
    parallel_for(g.Nz(), [&](std::size_t j) {
        static thread_local std::vector<real> pu1, pu2, pd1, pd2, prod;
        static thread_local std::vector<cplx> d1, d2, scratch;
        const std::size_t nh = g.nh();
        pu1.resize(nh);
        pu2.resize(nh);
        pd1.resize(nh);
        pd2.resize(nh);
        prod.resize(nh);
        d1.resize(nh);
        d2.resize(nh);
        const cplx* qs = q.level(int(j));
        for (int iy = 0; iy < g.Ny(); ++iy)
            for (int ix = 0; ix < g.Nx(); ++ix) {
                const std::size_t id = g.idx(ix, iy);
                d1[id] = cplx(0.0, g.kx()[ix]) * qs[id];
                d2[id] = cplx(0.0, g.ky()[iy]) * qs[id];
            }
        synthesize_level(g, U.h1.level(int(j)), pu1.data(), scratch);
        synthesize_level(g, U.h2.level(int(j)), pu2.data(), scratch);
        synthesize_level(g, d1.data(), pd1.data(), scratch);
        synthesize_level(g, d2.data(), pd2.data(), scratch);
        for (std::size_t i = 0; i < nh; ++i) prod[i] = -(pu1[i] * pd1[i] + pu2[i] * pd2[i]);
        analyze_level(g, prod.data(), dq.level(int(j)));
        dealias_level(g, dq.level(int(j)));
    });
    if (cfg.beta != 0.0) {
        // beta term on the torus: -(beta) d/dx1 Psi as a source in q
        for (int j = 0; j < g.Nz(); ++j) {
            const cplx* p = psi.level(j);
            cplx* o = dq.level(j);
            for (int iy = 0; iy < g.Ny(); ++iy)
                for (int ix = 0; ix < g.Nx(); ++ix) {
                    const std::size_t id = g.idx(ix, iy);
                    o[id] -= cfg.beta * cplx(0.0, g.kx()[ix]) * p[id];
                }
        }
    }
    if (forcing && forcing->active) axpy(dq, 1.0, forcing->fL);

    auto [u1s, u2s] = trace_horizontal(U, 0);
    SurfaceField2D dth = advect_surface(u1s, u2s, theta_b);
    scale(dth.lv, -1.0);
    if (forcing && forcing->active) axpy(dth, 1.0, forcing->fnu);
    return {std::move(dq), std::move(dth)};
}

inline void classical_step(ClassicalState& s, const SolverConfig& cfg, const LambdaProfile& lam,
                           const Forcing* forcing = nullptr) {
    check_cfl(s.psi, cfg);
    const real dt = cfg.dt;
    auto F = [&](const ScalarField3D& q, const SurfaceField2D& th) {
        ScalarField3D psi = recover_classical(q, th, lam).psi;
        return classical_rhs(psi, q, th, cfg, forcing);
    };
    auto damp = [&](ScalarField3D& q, SurfaceField2D& th, real tau) {
        hyperviscous_factor(q.lv, cfg.eps, tau);
        hyperviscous_factor(th.lv, cfg.eps, tau);
    };

    auto [k1q, k1t] = F(s.q, s.theta_b);

    ScalarField3D qa = s.q;
    SurfaceField2D ta = s.theta_b;
    axpy(qa, 0.5 * dt, k1q);
    axpy(ta, 0.5 * dt, k1t);
    damp(qa, ta, 0.5 * dt);
    auto [k2q, k2t] = F(qa, ta);

    ScalarField3D qb = s.q;
    SurfaceField2D tb = s.theta_b;
    damp(qb, tb, 0.5 * dt);
    axpy(qb, 0.5 * dt, k2q);
    axpy(tb, 0.5 * dt, k2t);
    auto [k3q, k3t] = F(qb, tb);

    ScalarField3D qc = s.q;
    SurfaceField2D tc = s.theta_b;
    damp(qc, tc, dt);
    {
        ScalarField3D t3 = k3q;
        SurfaceField2D t3s = k3t;
        hyperviscous_factor(t3.lv, cfg.eps, 0.5 * dt);
        hyperviscous_factor(t3s.lv, cfg.eps, 0.5 * dt);
        axpy(qc, dt, t3);
        axpy(tc, dt, t3s);
    }
    auto [k4q, k4t] = F(qc, tc);

    damp(s.q, s.theta_b, dt);
    auto add = [&](ScalarField3D& kq, SurfaceField2D& kt, real tau, real wgt) {
        hyperviscous_factor(kq.lv, cfg.eps, tau);
        hyperviscous_factor(kt.lv, cfg.eps, tau);
        axpy(s.q, wgt * dt, kq);
        axpy(s.theta_b, wgt * dt, kt);
    };
    add(k1q, k1t, dt, 1.0 / 6.0);
    add(k2q, k2t, 0.5 * dt, 1.0 / 3.0);
    add(k3q, k3t, 0.5 * dt, 1.0 / 3.0);
    add(k4q, k4t, 0.0, 1.0 / 6.0);

    if (!finite(s.q.lv) || !finite(s.theta_b.lv))
        fail("nan-detected", "classical state became non-finite at t = " + std::to_string(s.t));
    s.psi = recover_classical(s.q, s.theta_b, lam).psi;
    s.t += dt;
}

// ---- trajectories -------------------------------------------------------------

struct TrajectorySample {
    real t;
    VectorField3D G;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    bool ok = true;
    std::string error;
};

/// Integrate to cfg.T, sampling G every `sample_stride` steps (and at t=0 and
/// the final time). `observer`, when set, runs after every accepted step.
/// On failure the partial trajectory is returned with ok = false.
inline Trajectory run(const State& initial, const SolverConfig& cfg, const LambdaProfile& lam,
                      const Forcing* forcing = nullptr, int sample_stride = 1,
                      const std::function<void(const State&, int)>& observer = {}) {
    cfg.validate();
    Trajectory traj;
    State s = initial;
    traj.samples.push_back({s.t, s.G});
    const int nsteps = int(std::llround(cfg.T / cfg.dt));
    try {
        for (int n = 1; n <= nsteps; ++n) {
            step(s, cfg, lam, forcing);
            if (observer) observer(s, n);
            if (n % sample_stride == 0 || n == nsteps) traj.samples.push_back({s.t, s.G});
        }
    } catch (const Error& e) {
        traj.ok = false;
        traj.error = e.what();
    }
    return traj;
}

// ---- Picard machinery (the construction's proof device, exposed for probing) ---

/// T_delta: solve the linear eps-problem with the advecting trajectory frozen
/// to `candidate` (samples at dt/2 spacing on [0, t_span]). Returns samples
/// at dt spacing. Pure quadrature with the integrating factor (Simpson).
inline std::vector<VectorField3D> picard_T_delta(const std::vector<VectorField3D>& candidate,
                                                 const VectorField3D& G0,
                                                 const SolverConfig& cfg,
                                                 const LambdaProfile& lam) {
    require(cfg.eps > 0.0 && cfg.delta > 0.0, "invalid-parameter",
            "picard map needs eps > 0 and delta > 0");
    require(candidate.size() >= 3 && candidate.size() % 2 == 1, "invalid-parameter",
            "candidate must hold an odd number (>= 3) of dt/2-spaced samples");
    const int nsteps = int(candidate.size() / 2);
    auto S = [&](const VectorField3D& Gc) {
        ScalarField3D psi = recover_potential(Gc, lam).psi;
        VectorField3D N = nonlinear_term(psi, Gc, cfg.delta);
        VectorField3D R = project_lambda(N, lam);
        scale(R, -1.0);
        zero_mean_vertical(R);
        return R;
    };
    std::vector<VectorField3D> out;
    out.reserve(nsteps + 1);
    out.push_back(G0);
    VectorField3D G = G0;
    for (int n = 0; n < nsteps; ++n) {
        VectorField3D s0 = S(candidate[2 * n]);
        VectorField3D sh = S(candidate[2 * n + 1]);
        VectorField3D s1 = S(candidate[2 * n + 2]);
        hyperviscous_factor(G, cfg.eps, cfg.dt);
        hyperviscous_factor(s0, cfg.eps, cfg.dt);
        hyperviscous_factor(sh, cfg.eps, 0.5 * cfg.dt);
        axpy(G, cfg.dt / 6.0, s0);
        axpy(G, 4.0 * cfg.dt / 6.0, sh);
        axpy(G, cfg.dt / 6.0, s1);
        out.push_back(G);
    }
    return out;
}

} // namespace qghs
