/// Named initial conditions for reproducible runs:
///   harmonic-mode  - discrete harmonic lift of a single-mode surface buoyancy
///   two-mode       - two interacting modes with interior PV structure
///   random-seeded  - seeded band-limited stream function
/// plus the discrete lift used by the SQG oracle comparison.
#pragma once

#include "dynamics.hpp"
#include "random_fields.hpp"
#include "sqg.hpp"

namespace qghs {

/// State whose surface buoyancy matches theta exactly in the discrete sense:
/// solve L psi = 0 with flux datum so that G.w(0) = theta (lambda(0) = 1
/// recovers theta = Psi_z at z = 0; general lambda scales the flux).
inline State state_from_surface(const SurfaceField2D& theta, const LambdaProfile& lam) {
    SurfaceField2D datum = theta;
    scale(datum.lv, -1.0);
    EllipticSolution sol = solve_neumann(datum, lam);
    State s;
    s.G = std::move(sol.grad);
    zero_mean_vertical(s.G);
    s.psi = std::move(sol.psi);
    s.t = 0.0;
    return s;
}

inline SurfaceField2D surface_mode(const GridPtr& g, int mx, int my, real amplitude,
                                   real phase = 0.0) {
    std::vector<real> phys(g->nh());
    for (int iy = 0; iy < g->Ny(); ++iy)
        for (int ix = 0; ix < g->Nx(); ++ix)
            phys[g->idx(ix, iy)] =
                amplitude * std::cos(mx * g->x1(ix) / g->Lh() + my * g->x2(iy) / g->Lh() + phase);
    SurfaceField2D s = to_spectral_surface(g, phys);
    dealias(s);
    return s;
}

inline State ic_harmonic_mode(const GridPtr& g, const LambdaProfile& lam, int mx, int my,
                              real amplitude) {
    require(mx != 0 || my != 0, "invalid-parameter", "harmonic-mode needs a nonzero wavenumber");
    return state_from_surface(surface_mode(g, mx, my, amplitude), lam);
}

/// psi0 = a1 sin(pi z/Z) cos(x1/Lh) + a2 sin(2 pi z/Z) cos(x2/Lh + 0.7)
inline ScalarField3D two_mode_psi(const GridPtr& g, real a1, real a2) {
    std::vector<real> phys(std::size_t(g->Nz()) * g->nh());
    for (int j = 0; j < g->Nz(); ++j) {
        const real z = g->z_center(j);
        for (int iy = 0; iy < g->Ny(); ++iy)
            for (int ix = 0; ix < g->Nx(); ++ix)
                phys[j * g->nh() + g->idx(ix, iy)] =
                    a1 * std::sin(pi * z / g->Zmax()) * std::cos(g->x1(ix) / g->Lh()) +
                    a2 * std::sin(2.0 * pi * z / g->Zmax()) *
                        std::cos(g->x2(iy) / g->Lh() + 0.7);
    }
    return to_spectral(g, phys);
}

inline State ic_two_mode(const GridPtr& g, const LambdaProfile& lam, real a1, real a2) {
    return make_state(two_mode_psi(g, a1, a2), lam);
}

inline State ic_random_seeded(const GridPtr& g, const LambdaProfile& lam, std::uint64_t seed,
                              real amplitude) {
    Rng rng(seed);
    ScalarField3D psi = random_scalar(g, rng, 4, 10);
    const real n = norm_L2_3d(psi);
    if (n > 0.0) scale(psi.lv, amplitude / n);
    return make_state(psi, lam);
}

/// The x2-independent analytic steady state e^{-z} cos(x1/Lh).
inline ScalarField3D steady_harmonic_psi(const GridPtr& g) {
    std::vector<real> phys(std::size_t(g->Nz()) * g->nh());
    for (int j = 0; j < g->Nz(); ++j)
        for (int iy = 0; iy < g->Ny(); ++iy)
            for (int ix = 0; ix < g->Nx(); ++ix)
                phys[j * g->nh() + g->idx(ix, iy)] =
                    std::exp(-g->z_center(j)) * std::cos(g->x1(ix) / g->Lh());
    return to_spectral(g, phys);
}

/// Surface buoyancy of a 3D state: Psi_z at z = 0 = G.w(0)/lambda(0).
inline SurfaceField2D surface_buoyancy(const State& s, const LambdaProfile& lam) {
    SurfaceField2D th(s.G.grid());
    const cplx* w0 = s.G.w.level(0);
    for (std::size_t i = 0; i < s.G.grid()->nh(); ++i) th.data()[i] = w0[i] / lam.face[0];
    return th;
}

} // namespace qghs
