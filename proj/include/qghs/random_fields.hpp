/// Seeded random band-limited fields for property tests and the `check`
/// subcommand. Uses mt19937_64 with a hand-rolled uniform so streams are
/// identical across platforms and standard libraries.
#pragma once

#include <random>

#include "calculus.hpp"

namespace qghs {

struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}
    real uniform() { return real(eng() >> 11) * 0x1.0p-53; } // [0,1)
    real sym() { return 2.0 * uniform() - 1.0; }             // (-1,1)
    int index(int n) { return int(eng() % std::uint64_t(n)); }
};

/// Smooth vertical profiles: sines vanish at both walls, shifted cosines
/// only at the top, so traces and fluxes both get exercised.
inline real vertical_profile(int p, real z, real Zmax) {
    if (p % 2 == 0)
        return std::sin((p / 2 + 1) * pi * z / Zmax);
    return std::cos((p / 2 + 0.5) * pi * z / Zmax);
}
inline real vertical_profile_dz(int p, real z, real Zmax) {
    if (p % 2 == 0) {
        const real a = (p / 2 + 1) * pi / Zmax;
        return a * std::cos(a * z);
    }
    const real a = (p / 2 + 0.5) * pi / Zmax;
    return -a * std::sin(a * z);
}

/// Random conjugate-symmetric, dealiased scalar field built from a few
/// horizontal modes times smooth vertical profiles.
inline ScalarField3D random_scalar(const GridPtr& grid, Rng& rng, int kmax = 6, int nmodes = 12,
                                   bool zero_mean = true) {
    const auto& g = *grid;
    ScalarField3D f(grid);
    f.lv.fill_zero();
    const int kx_hi = std::min(kmax, g.max_retained_kx());
    const int ky_hi = std::min(kmax, g.max_retained_ky());
    for (int m = 0; m < nmodes; ++m) {
        const int mx = rng.index(2 * kx_hi + 1) - kx_hi;
        const int my = rng.index(2 * ky_hi + 1) - ky_hi;
        if (zero_mean && mx == 0 && my == 0) continue;
        const int p = rng.index(6);
        const cplx amp(rng.sym(), rng.sym());
        const int ix = (mx + g.Nx()) % g.Nx();
        const int iy = (my + g.Ny()) % g.Ny();
        for (int j = 0; j < g.Nz(); ++j)
            f.level(j)[g.idx(ix, iy)] += amp * vertical_profile(p, g.z_center(j), g.Zmax());
    }
    symmetrize(f.lv);
    dealias(f);
    return f;
}

inline SurfaceField2D random_surface(const GridPtr& grid, Rng& rng, int kmax = 6,
                                     int nmodes = 12, bool zero_mean = true) {
    const auto& g = *grid;
    SurfaceField2D f(grid);
    f.lv.fill_zero();
    const int kx_hi = std::min(kmax, g.max_retained_kx());
    const int ky_hi = std::min(kmax, g.max_retained_ky());
    for (int m = 0; m < nmodes; ++m) {
        const int mx = rng.index(2 * kx_hi + 1) - kx_hi;
        const int my = rng.index(2 * ky_hi + 1) - ky_hi;
        if (zero_mean && mx == 0 && my == 0) continue;
        f.data()[g.idx((mx + g.Nx()) % g.Nx(), (my + g.Ny()) % g.Ny())] +=
            cplx(rng.sym(), rng.sym());
    }
    symmetrize(f.lv);
    dealias(f);
    return f;
}

/// Random vector field: independent smooth stacks per component, vertical
/// component sampled at faces.
inline VectorField3D random_vector(const GridPtr& grid, Rng& rng, int kmax = 6,
                                   int nmodes = 12) {
    const auto& g = *grid;
    VectorField3D u(grid);
    u.w.fill_zero();
    u.h1.fill_zero();
    u.h2.fill_zero();
    const int kx_hi = std::min(kmax, g.max_retained_kx());
    const int ky_hi = std::min(kmax, g.max_retained_ky());
    auto add_modes = [&](Levels& lv, bool faces) {
        for (int m = 0; m < nmodes; ++m) {
            const int mx = rng.index(2 * kx_hi + 1) - kx_hi;
            const int my = rng.index(2 * ky_hi + 1) - ky_hi;
            const int p = rng.index(6);
            const cplx amp(rng.sym(), rng.sym());
            const int ix = (mx + g.Nx()) % g.Nx();
            const int iy = (my + g.Ny()) % g.Ny();
            for (int j = 0; j < lv.nlev; ++j) {
                const real z = faces ? g.z_face(j) : g.z_center(j);
                lv.level(j)[g.idx(ix, iy)] += amp * vertical_profile(p, z, g.Zmax());
            }
        }
        symmetrize(lv);
        dealias(lv);
    };
    add_modes(u.w, true);
    add_modes(u.h1, false);
    add_modes(u.h2, false);
    return u;
}

/// Test potential for pairing identities: random scalar with the last three
/// cells zeroed (discrete stand-in for compact support below Z_max).
inline ScalarField3D random_test_potential(const GridPtr& grid, Rng& rng, int kmax = 6,
                                           int nmodes = 12) {
    ScalarField3D f = random_scalar(grid, rng, kmax, nmodes, false);
    const auto& g = *grid;
    for (int j = g.Nz() - 3; j < g.Nz(); ++j)
        std::fill(f.level(j), f.level(j) + g.nh(), cplx(0.0));
    return f;
}

} // namespace qghs
