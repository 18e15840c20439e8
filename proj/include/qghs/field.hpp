/// Field containers. All fields hold horizontal-spectral complex coefficients
/// (conjugate-symmetric, so physical values are real):
///   ScalarField3D   - one level per cell center, j = 0..N_z-1
///   VectorField3D   - vertical component at the N_z+1 faces (first component,
///                     per the half-space convention), two horizontal
///                     components at cell centers
///   SurfaceField2D  - a single horizontal plane
#pragma once

#include <algorithm>
#include <cmath>

#include "grid.hpp"
#include "parallel.hpp"

namespace qghs {

/// A stack of spectral levels; building block for the field types.
struct Levels {
    GridPtr grid;
    int nlev = 0;
    std::vector<cplx> data;

    Levels() = default;
    Levels(GridPtr g, int n) : grid(std::move(g)), nlev(n), data(std::size_t(n) * grid->nh()) {}

    cplx* level(int j) { return data.data() + std::size_t(j) * grid->nh(); }
    const cplx* level(int j) const { return data.data() + std::size_t(j) * grid->nh(); }
    std::size_t size() const { return data.size(); }

    void fill_zero() { std::fill(data.begin(), data.end(), cplx(0.0)); }
};

struct ScalarField3D {
    Levels lv;
    ScalarField3D() = default;
    explicit ScalarField3D(const GridPtr& g) : lv(g, g->Nz()) {}
    const GridPtr& grid() const { return lv.grid; }
    cplx* level(int j) { return lv.level(j); }
    const cplx* level(int j) const { return lv.level(j); }
};

struct SurfaceField2D {
    Levels lv;
    SurfaceField2D() = default;
    explicit SurfaceField2D(const GridPtr& g) : lv(g, 1) {}
    const GridPtr& grid() const { return lv.grid; }
    cplx* data() { return lv.level(0); }
    const cplx* data() const { return lv.level(0); }
};

struct VectorField3D {
    Levels w;  // vertical component, faces j = 0..N_z
    Levels h1; // d/dx1-direction component, cell centers
    Levels h2; // d/dx2-direction component, cell centers
    VectorField3D() = default;
    explicit VectorField3D(const GridPtr& g) : w(g, g->Nz() + 1), h1(g, g->Nz()), h2(g, g->Nz()) {}
    const GridPtr& grid() const { return w.grid; }
};

// ---- elementwise helpers ----------------------------------------------------

inline void axpy(Levels& y, real a, const Levels& x) {
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += a * x.data[i];
}
inline void scale(Levels& y, real a) {
    for (auto& v : y.data) v *= a;
}
inline void axpy(VectorField3D& y, real a, const VectorField3D& x) {
    axpy(y.w, a, x.w);
    axpy(y.h1, a, x.h1);
    axpy(y.h2, a, x.h2);
}
inline void scale(VectorField3D& y, real a) {
    scale(y.w, a);
    scale(y.h1, a);
    scale(y.h2, a);
}
inline void axpy(ScalarField3D& y, real a, const ScalarField3D& x) { axpy(y.lv, a, x.lv); }
inline void axpy(SurfaceField2D& y, real a, const SurfaceField2D& x) { axpy(y.lv, a, x.lv); }

// ---- transforms --------------------------------------------------------------

/// Physical values (x1 fastest, then x2) for one level -> spectral in place.
inline void analyze_level(const Grid3D& g, const real* phys, cplx* spec) {
    const std::size_t n = g.nh();
    for (std::size_t i = 0; i < n; ++i) spec[i] = cplx(phys[i], 0.0);
    g.fft_forward(spec);
}

/// Spectral level -> physical values; imaginary residue is discarded.
inline void synthesize_level(const Grid3D& g, const cplx* spec, real* phys,
                             std::vector<cplx>& scratch) {
    const std::size_t n = g.nh();
    scratch.assign(spec, spec + n);
    g.fft_backward(scratch.data());
    for (std::size_t i = 0; i < n; ++i) phys[i] = scratch[i].real();
}

/// Largest imaginary residue of the synthesis of one level (reality check).
inline real max_imag_residue(const Grid3D& g, const cplx* spec) {
    std::vector<cplx> buf(spec, spec + g.nh());
    g.fft_backward(buf.data());
    real m = 0.0;
    for (const auto& v : buf) m = std::max(m, std::abs(v.imag()));
    return m;
}

/// Full-field transforms against flat physical arrays laid out z-major,
/// then x2, then x1 (the snapshot order).
inline ScalarField3D to_spectral(const GridPtr& g, const std::vector<real>& phys) {
    require(phys.size() == std::size_t(g->Nz()) * g->nh(), "shape-mismatch",
            "physical array has " + std::to_string(phys.size()) + " values, expected " +
                std::to_string(std::size_t(g->Nz()) * g->nh()));
    ScalarField3D f(g);
    parallel_for(g->Nz(), [&](std::size_t j) {
        analyze_level(*g, phys.data() + j * g->nh(), f.level(int(j)));
    });
    return f;
}

inline std::vector<real> to_physical(const ScalarField3D& f) {
    const auto& g = *f.grid();
    std::vector<real> phys(std::size_t(g.Nz()) * g.nh());
    parallel_for(g.Nz(), [&](std::size_t j) {
        std::vector<cplx> scratch;
        synthesize_level(g, f.level(int(j)), phys.data() + j * g.nh(), scratch);
    });
    return phys;
}

inline SurfaceField2D to_spectral_surface(const GridPtr& g, const std::vector<real>& phys) {
    require(phys.size() == g->nh(), "shape-mismatch", "surface array size mismatch");
    SurfaceField2D f(g);
    analyze_level(*g, phys.data(), f.data());
    return f;
}

inline std::vector<real> to_physical_surface(const SurfaceField2D& f) {
    const auto& g = *f.grid();
    std::vector<real> phys(g.nh());
    std::vector<cplx> scratch;
    synthesize_level(g, f.data(), phys.data(), scratch);
    return phys;
}

// ---- dealiasing and symmetry --------------------------------------------------

inline void dealias_level(const Grid3D& g, cplx* spec) {
    const auto& m = g.dealias_mask();
    for (std::size_t i = 0; i < g.nh(); ++i)
        if (!m[i]) spec[i] = cplx(0.0);
}

inline void dealias(Levels& lv) {
    parallel_for(lv.nlev, [&](std::size_t j) { dealias_level(*lv.grid, lv.level(int(j))); });
}
inline void dealias(ScalarField3D& f) { dealias(f.lv); }
inline void dealias(SurfaceField2D& f) { dealias(f.lv); }
inline void dealias(VectorField3D& f) {
    dealias(f.w);
    dealias(f.h1);
    dealias(f.h2);
}

/// Project one level onto the conjugate-symmetric subspace:
/// c(-k) <- conj(c(k)) averaged. Used when building fields mode-by-mode.
inline void symmetrize_level(const Grid3D& g, cplx* s) {
    const int Nx = g.Nx(), Ny = g.Ny();
    for (int j = 0; j < Ny; ++j) {
        const int jr = (Ny - j) % Ny;
        for (int i = 0; i < Nx; ++i) {
            const int ir = (Nx - i) % Nx;
            if (std::size_t(j) * Nx + i > std::size_t(jr) * Nx + ir) continue;
            const cplx a = s[g.idx(i, j)], b = s[g.idx(ir, jr)];
            const cplx avg = 0.5 * (a + std::conj(b));
            s[g.idx(i, j)] = avg;
            s[g.idx(ir, jr)] = std::conj(avg);
        }
    }
}

inline void symmetrize(Levels& lv) {
    parallel_for(lv.nlev, [&](std::size_t j) { symmetrize_level(*lv.grid, lv.level(int(j))); });
}

inline bool finite(const Levels& lv) {
    for (const auto& v : lv.data)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}
inline bool finite(const VectorField3D& u) { return finite(u.w) && finite(u.h1) && finite(u.h2); }

} // namespace qghs
