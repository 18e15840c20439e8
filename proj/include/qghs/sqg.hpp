/// The boundary-only special case (lambda == 1, harmonic stream function):
/// a 2D surface quasi-geostrophic solver used as an independent oracle for
/// the 3D code. theta is the surface buoyancy Psi_z at z = 0; its advecting
/// velocity is U = -grad-perp((-Dbar)^{-1/2} theta), the trace of grad-perp
/// of the decaying harmonic extension.
#pragma once

#include "calculus.hpp"

namespace qghs {

struct SqgState {
    SurfaceField2D theta;
    real t = 0.0;
};

/// (u1, u2) with u1 = i k2 theta/|k|, u2 = -i k1 theta/|k|; divergence-free
/// by construction. Requires the k = 0 gauge.
inline std::pair<SurfaceField2D, SurfaceField2D> sqg_velocity(const SurfaceField2D& theta) {
    check_zero_mean(theta.lv, "sqg velocity");
    const auto& g = *theta.grid();
    SurfaceField2D u1(theta.grid()), u2(theta.grid());
    for (int iy = 0; iy < g.Ny(); ++iy)
        for (int ix = 0; ix < g.Nx(); ++ix) {
            const std::size_t id = g.idx(ix, iy);
            const real k = g.kmag()[id];
            if (k == 0.0) {
                u1.data()[id] = u2.data()[id] = cplx(0.0);
                continue;
            }
            u1.data()[id] = cplx(0.0, g.ky()[iy] / k) * theta.data()[id];
            u2.data()[id] = cplx(0.0, -g.kx()[ix] / k) * theta.data()[id];
        }
    return {std::move(u1), std::move(u2)};
}

inline real sqg_max_speed(const SurfaceField2D& u1, const SurfaceField2D& u2) {
    const auto& g = *u1.grid();
    std::vector<cplx> scratch;
    std::vector<real> p1(g.nh()), p2(g.nh());
    synthesize_level(g, u1.data(), p1.data(), scratch);
    synthesize_level(g, u2.data(), p2.data(), scratch);
    real m = 0.0;
    for (std::size_t i = 0; i < g.nh(); ++i)
        m = std::max(m, std::sqrt(p1[i] * p1[i] + p2[i] * p2[i]));
    return m;
}

/// -U.grad theta, dealiased (advect_surface lives in dynamics.hpp; this one
/// is self-contained so sqg does not depend on the 3D solver).
inline SurfaceField2D sqg_rhs(const SurfaceField2D& theta) {
    const auto& g = *theta.grid();
    auto [u1, u2] = sqg_velocity(theta);
    SurfaceField2D out(theta.grid());
    std::vector<cplx> d1(g.nh()), d2(g.nh()), scratch;
    std::vector<real> p1(g.nh()), p2(g.nh()), q1(g.nh()), q2(g.nh()), prod(g.nh());
    for (int iy = 0; iy < g.Ny(); ++iy)
        for (int ix = 0; ix < g.Nx(); ++ix) {
            const std::size_t id = g.idx(ix, iy);
            d1[id] = cplx(0.0, g.kx()[ix]) * theta.data()[id];
            d2[id] = cplx(0.0, g.ky()[iy]) * theta.data()[id];
        }
    synthesize_level(g, u1.data(), p1.data(), scratch);
    synthesize_level(g, u2.data(), p2.data(), scratch);
    synthesize_level(g, d1.data(), q1.data(), scratch);
    synthesize_level(g, d2.data(), q2.data(), scratch);
    for (std::size_t i = 0; i < g.nh(); ++i) prod[i] = -(p1[i] * q1[i] + p2[i] * q2[i]);
    analyze_level(g, prod.data(), out.data());
    dealias_level(g, out.data());
    return out;
}

/// One RK4 step with the integrating factor for the surface restriction of
/// the 3D regularizer, symbol -eps(|k|+|k|^3).
inline void sqg_step(SqgState& s, real dt, real eps, real cfl_safety = 0.5) {
    const auto& g = *s.theta.grid();
    {
        auto [u1, u2] = sqg_velocity(s.theta);
        const real umax = sqg_max_speed(u1, u2);
        if (umax > 0.0) {
            const real dt_max = cfl_safety * std::min(g.dx(), g.dy()) / umax;
            if (dt > dt_max)
                fail("cfl-violation", "sqg dt exceeds CFL bound " + std::to_string(dt_max));
        }
    }
    auto damp = [&](SurfaceField2D& f, real tau) {
        if (eps == 0.0 || tau == 0.0) return;
        apply_multiplier(f.lv, [&](real k) { return std::exp(-eps * tau * (k + k * k * k)); });
    };
    SurfaceField2D k1 = sqg_rhs(s.theta);

    SurfaceField2D ta = s.theta;
    axpy(ta, 0.5 * dt, k1);
    damp(ta, 0.5 * dt);
    SurfaceField2D k2 = sqg_rhs(ta);

    SurfaceField2D tb = s.theta;
    damp(tb, 0.5 * dt);
    axpy(tb, 0.5 * dt, k2);
    SurfaceField2D k3 = sqg_rhs(tb);

    SurfaceField2D tc = s.theta;
    damp(tc, dt);
    {
        SurfaceField2D t3 = k3;
        damp(t3, 0.5 * dt);
        axpy(tc, dt, t3);
    }
    SurfaceField2D k4 = sqg_rhs(tc);

    damp(s.theta, dt);
    damp(k1, dt);
    damp(k2, 0.5 * dt);
    damp(k3, 0.5 * dt);
    axpy(s.theta, dt / 6.0, k1);
    axpy(s.theta, dt / 3.0, k2);
    axpy(s.theta, dt / 3.0, k3);
    axpy(s.theta, dt / 6.0, k4);

    if (!finite(s.theta.lv))
        fail("nan-detected", "sqg state became non-finite at t = " + std::to_string(s.t));
    s.t += dt;
}

struct SqgTrajectory {
    std::vector<real> times;
    std::vector<SurfaceField2D> theta;
    bool ok = true;
    std::string error;
};

inline SqgTrajectory sqg_run(const SurfaceField2D& theta0, real dt, real T, real eps = 0.0,
                             int sample_stride = 1) {
    require(dt > 0.0, "invalid-parameter", "dt must be positive");
    SqgTrajectory traj;
    SqgState s;
    s.theta = theta0;
    dealias(s.theta);
    traj.times.push_back(0.0);
    traj.theta.push_back(s.theta);
    const int nsteps = int(std::llround(T / dt));
    try {
        for (int n = 1; n <= nsteps; ++n) {
            sqg_step(s, dt, eps);
            if (n % sample_stride == 0 || n == nsteps) {
                traj.times.push_back(s.t);
                traj.theta.push_back(s.theta);
            }
        }
    } catch (const Error& e) {
        traj.ok = false;
        traj.error = e.what();
    }
    return traj;
}

/// Harmonic lift: Psi with L Psi = 0 matching the surface buoyancy,
/// Psi(k, z) = -theta(k) e^{-|k| z} / |k| so that Psi_z(0) = theta.
inline ScalarField3D lift_harmonic(const SurfaceField2D& theta) {
    check_zero_mean(theta.lv, "harmonic lift");
    const auto& g = *theta.grid();
    ScalarField3D psi(theta.grid());
    parallel_for(g.Nz(), [&](std::size_t j) {
        const real z = g.z_center(int(j));
        cplx* p = psi.level(int(j));
        for (std::size_t i = 0; i < g.nh(); ++i) {
            const real k = g.kmag()[i];
            p[i] = k == 0.0 ? cplx(0.0) : -theta.data()[i] * std::exp(-k * z) / k;
        }
    });
    return psi;
}

} // namespace qghs
