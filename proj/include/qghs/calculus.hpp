/// Operator vocabulary: weighted gradients, divergence, horizontal Fourier
/// multipliers (fractional powers, mollifier), boundary traces, inner
/// products and norms.
///
/// Boundary conventions (shared by every operator and by the elliptic
/// solvers; a mismatch here would break the exact projector identities):
///   * values are extrapolated to a boundary face from the three nearest
///     cells with the one-sided second-order stencil (2, -3/2, 1/2),
///   * d/dz is extrapolated with its counterpart (-2, 3, -1)/dz,
/// so that the discrete divergence theorem
///   <grad phi, u> = -<phi, div u> + gamma_top-pairing + gamma_0(phi)*gamma_nu(u)
/// holds as an algebraic identity.
#pragma once

#include "field.hpp"
#include "lambda_profile.hpp"

namespace qghs {

// ---- boundary extrapolation stencils -----------------------------------------

inline cplx extrap_bottom_value(const cplx* c0, const cplx* c1, const cplx* c2,
                                std::size_t i) {
    return 2.0 * c0[i] - 1.5 * c1[i] + 0.5 * c2[i];
}
inline cplx extrap_bottom_deriv(const cplx* c0, const cplx* c1, const cplx* c2, std::size_t i,
                                real dz) {
    return (-2.0 * c0[i] + 3.0 * c1[i] - c2[i]) / dz;
}

/// Extrapolate a stack of cell-center levels to the z=0 (side=0) or z=Zmax
/// (side=1) boundary plane.
inline SurfaceField2D extrapolate_boundary(const Levels& cells, int side) {
    const auto& g = *cells.grid;
    SurfaceField2D s(cells.grid);
    const int n = cells.nlev;
    const cplx* c0 = side == 0 ? cells.level(0) : cells.level(n - 1);
    const cplx* c1 = side == 0 ? cells.level(1) : cells.level(n - 2);
    const cplx* c2 = side == 0 ? cells.level(2) : cells.level(n - 3);
    for (std::size_t i = 0; i < g.nh(); ++i) s.data()[i] = extrap_bottom_value(c0, c1, c2, i);
    return s;
}

// ---- gradients ----------------------------------------------------------------

/// grad-bar: (0, d/dx1, d/dx2). Vertical component identically zero.
inline VectorField3D horizontal_gradient(const ScalarField3D& psi) {
    const auto& g = *psi.grid();
    VectorField3D v(psi.grid());
    v.w.fill_zero();
    parallel_for(g.Nz(), [&](std::size_t j) {
        const cplx* p = psi.level(int(j));
        cplx* a = v.h1.level(int(j));
        cplx* b = v.h2.level(int(j));
        for (int iy = 0; iy < g.Ny(); ++iy)
            for (int ix = 0; ix < g.Nx(); ++ix) {
                const std::size_t id = g.idx(ix, iy);
                a[id] = cplx(0.0, g.kx()[ix]) * p[id];
                b[id] = cplx(0.0, g.ky()[iy]) * p[id];
            }
    });
    return v;
}

/// grad-bar-perp: (0, -d/dx2, d/dx1); the geostrophic velocity of psi.
inline VectorField3D perp_gradient(const ScalarField3D& psi) {
    const auto& g = *psi.grid();
    VectorField3D v(psi.grid());
    v.w.fill_zero();
    parallel_for(g.Nz(), [&](std::size_t j) {
        const cplx* p = psi.level(int(j));
        cplx* a = v.h1.level(int(j));
        cplx* b = v.h2.level(int(j));
        for (int iy = 0; iy < g.Ny(); ++iy)
            for (int ix = 0; ix < g.Nx(); ++ix) {
                const std::size_t id = g.idx(ix, iy);
                a[id] = cplx(0.0, -g.ky()[iy]) * p[id];
                b[id] = cplx(0.0, g.kx()[ix]) * p[id];
            }
    });
    return v;
}

/// grad_lambda: (lambda d/dz, d/dx1, d/dx2). Interior faces carry the exact
/// staggered difference; boundary faces the extrapolated derivative (solver
/// outputs overwrite these with their own flux closures).
inline VectorField3D grad_lambda(const ScalarField3D& psi, const LambdaProfile& lam) {
    const auto& g = *psi.grid();
    VectorField3D v = horizontal_gradient(psi);
    const int Nz = g.Nz();
    const real dz = g.dz();
    parallel_for(Nz + 1, [&](std::size_t jf) {
        const int j = int(jf);
        cplx* w = v.w.level(j);
        if (j == 0) {
            const cplx *a = psi.level(0), *b = psi.level(1), *c = psi.level(2);
            for (std::size_t i = 0; i < g.nh(); ++i)
                w[i] = lam.face[0] * extrap_bottom_deriv(a, b, c, i, dz);
        } else if (j == Nz) {
            const cplx *a = psi.level(Nz - 1), *b = psi.level(Nz - 2), *c = psi.level(Nz - 3);
            for (std::size_t i = 0; i < g.nh(); ++i)
                w[i] = -lam.face[Nz] * extrap_bottom_deriv(a, b, c, i, dz);
        } else {
            const cplx *lo = psi.level(j - 1), *hi = psi.level(j);
            for (std::size_t i = 0; i < g.nh(); ++i)
                w[i] = lam.face[j] * (hi[i] - lo[i]) / dz;
        }
    });
    return v;
}

/// Unweighted gradient (lambda == 1).
inline VectorField3D gradient(const ScalarField3D& psi) {
    LambdaProfile one = LambdaProfile::constant(*psi.grid(), 1.0);
    return grad_lambda(psi, one);
}

/// div u at cell centers: (w_{j+1} - w_j)/dz + ik.u_h. No closures needed;
/// both bounding faces of every cell are stored.
inline ScalarField3D div(const VectorField3D& u) {
    const auto& g = *u.grid();
    ScalarField3D d(u.grid());
    const real dz = g.dz();
    parallel_for(g.Nz(), [&](std::size_t j) {
        const cplx* wlo = u.w.level(int(j));
        const cplx* whi = u.w.level(int(j) + 1);
        const cplx* a = u.h1.level(int(j));
        const cplx* b = u.h2.level(int(j));
        cplx* out = d.level(int(j));
        for (int iy = 0; iy < g.Ny(); ++iy)
            for (int ix = 0; ix < g.Nx(); ++ix) {
                const std::size_t id = g.idx(ix, iy);
                out[id] = (whi[id] - wlo[id]) / dz + cplx(0.0, g.kx()[ix]) * a[id] +
                          cplx(0.0, g.ky()[iy]) * b[id];
            }
    });
    return d;
}

/// L_lambda psi = div(grad_lambda psi).
inline ScalarField3D L_lambda_apply(const ScalarField3D& psi, const LambdaProfile& lam) {
    return div(grad_lambda(psi, lam));
}

// ---- horizontal Fourier multipliers -------------------------------------------

inline real levels_norm2(const Levels& lv) {
    real s = 0.0;
    for (const auto& v : lv.data) s += std::norm(v);
    return s;
}

inline void check_zero_mean(const Levels& lv, const char* what) {
    real mean2 = 0.0;
    for (int j = 0; j < lv.nlev; ++j) mean2 += std::norm(lv.level(j)[0]);
    const real tot = levels_norm2(lv);
    if (tot > 0.0 && std::sqrt(mean2) > 1e-12 * std::sqrt(tot))
        fail("gauge-violation", std::string(what) + " requires a zero k=0 mode");
}

/// Apply a real multiplier m(|k|) to every level; m(0) handles the mean mode.
template <class Fn>
void apply_multiplier(Levels& lv, Fn&& m) {
    const auto& g = *lv.grid;
    parallel_for(lv.nlev, [&](std::size_t j) {
        cplx* s = lv.level(int(j));
        for (std::size_t i = 0; i < g.nh(); ++i) s[i] *= m(g.kmag()[i]);
    });
}

/// Delta-bar^s as the multiplier |k|^{2s}; for s < 0 the k = 0 coefficient
/// must vanish (gauge) and is left untouched.
inline void fractional_horizontal_inplace(Levels& lv, real s) {
    require(std::abs(s) <= 3.0, "invalid-parameter", "fractional exponent out of range [-3,3]");
    if (s == 0.0) return;
    if (s < 0.0) check_zero_mean(lv, "fractional power with s < 0");
    apply_multiplier(lv, [s](real k) { return k == 0.0 ? 0.0 : std::pow(k, 2.0 * s); });
}

inline ScalarField3D fractional_horizontal(const ScalarField3D& f, real s) {
    ScalarField3D out = f;
    fractional_horizontal_inplace(out.lv, s);
    return out;
}
inline SurfaceField2D fractional_horizontal(const SurfaceField2D& f, real s) {
    SurfaceField2D out = f;
    fractional_horizontal_inplace(out.lv, s);
    return out;
}
inline VectorField3D fractional_horizontal(const VectorField3D& f, real s) {
    VectorField3D out = f;
    fractional_horizontal_inplace(out.w, s);
    fractional_horizontal_inplace(out.h1, s);
    fractional_horizontal_inplace(out.h2, s);
    return out;
}

/// Horizontal mollification eta_delta * f, realized as the spectral Gaussian
/// exp(-delta^2 |k|^2 / 2); delta = 0 is the identity. Commutes exactly with
/// every other horizontal multiplier and with grad_lambda.
inline void mollify_inplace(Levels& lv, real delta) {
    require(delta >= 0.0, "invalid-parameter", "mollification length must be >= 0");
    if (delta == 0.0) return;
    apply_multiplier(lv, [delta](real k) { return std::exp(-0.5 * delta * delta * k * k); });
}

inline ScalarField3D mollify(const ScalarField3D& f, real delta) {
    ScalarField3D out = f;
    mollify_inplace(out.lv, delta);
    return out;
}
inline SurfaceField2D mollify(const SurfaceField2D& f, real delta) {
    SurfaceField2D out = f;
    mollify_inplace(out.lv, delta);
    return out;
}
inline VectorField3D mollify(const VectorField3D& f, real delta) {
    VectorField3D out = f;
    mollify_inplace(out.w, delta);
    mollify_inplace(out.h1, delta);
    mollify_inplace(out.h2, delta);
    return out;
}

// ---- traces -------------------------------------------------------------------

/// gamma_0: trace of a scalar at z = 0.
inline SurfaceField2D trace_gamma0(const ScalarField3D& f) {
    return extrapolate_boundary(f.lv, 0);
}

/// gamma_nu: minus the vertical component of the trace at z = 0 - the stored
/// bottom-face value, no extrapolation.
inline SurfaceField2D trace_gamma_nu(const VectorField3D& u) {
    SurfaceField2D s(u.grid());
    const cplx* w0 = u.w.level(0);
    for (std::size_t i = 0; i < u.grid()->nh(); ++i) s.data()[i] = -w0[i];
    return s;
}

/// Traces of the horizontal components (for gamma_0(grad-bar-perp psi)).
inline std::pair<SurfaceField2D, SurfaceField2D> trace_horizontal(const VectorField3D& u,
                                                                  int side = 0) {
    return {extrapolate_boundary(u.h1, side), extrapolate_boundary(u.h2, side)};
}

// ---- inner products and norms ---------------------------------------------------

/// Parseval pairing of two spectral levels: integral over the torus.
inline real level_inner(const Grid3D& g, const cplx* a, const cplx* b) {
    real s = 0.0;
    for (std::size_t i = 0; i < g.nh(); ++i)
        s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    return g.area() * s;
}

inline real inner(const SurfaceField2D& a, const SurfaceField2D& b) {
    return level_inner(*a.grid(), a.data(), b.data());
}

/// 3D scalar pairing: midpoint rule over cells.
inline real inner(const ScalarField3D& a, const ScalarField3D& b) {
    const auto& g = *a.grid();
    real s = 0.0;
    for (int j = 0; j < g.Nz(); ++j) s += level_inner(g, a.level(j), b.level(j));
    return s * g.dz();
}

/// 3D vector pairing: trapezoid over faces for the vertical component,
/// midpoint over cells for the horizontal ones.
inline real inner(const VectorField3D& a, const VectorField3D& b) {
    const auto& g = *a.grid();
    const int Nz = g.Nz();
    real s = 0.0;
    for (int j = 0; j <= Nz; ++j) {
        const real wgt = (j == 0 || j == Nz) ? 0.5 : 1.0;
        s += wgt * level_inner(g, a.w.level(j), b.w.level(j));
    }
    for (int j = 0; j < Nz; ++j) {
        s += level_inner(g, a.h1.level(j), b.h1.level(j));
        s += level_inner(g, a.h2.level(j), b.h2.level(j));
    }
    return s * g.dz();
}

inline real norm_L2_surface(const SurfaceField2D& f) { return std::sqrt(inner(f, f)); }
inline real norm_L2_3d(const ScalarField3D& f) { return std::sqrt(inner(f, f)); }
inline real norm_L2_3d(const VectorField3D& f) { return std::sqrt(inner(f, f)); }

/// Homogeneous H^s norm of a surface field: |k|^s weights, k = 0 omitted
/// (torus gauge; the mean is tracked separately where it matters).
inline real norm_fractional_surface(const SurfaceField2D& f, real s) {
    const auto& g = *f.grid();
    if (s < 0.0) check_zero_mean(f.lv, "negative-order surface norm");
    real acc = 0.0;
    for (std::size_t i = 0; i < g.nh(); ++i) {
        const real k = g.kmag()[i];
        if (k == 0.0) continue;
        acc += std::pow(k, 2.0 * s) * std::norm(f.data()[i]);
    }
    return std::sqrt(g.area() * acc);
}

/// Inhomogeneous H^s norm of a surface field: (1+|k|^2)^{s/2} weights.
inline real norm_sobolev_surface(const SurfaceField2D& f, real s) {
    const auto& g = *f.grid();
    real acc = 0.0;
    for (std::size_t i = 0; i < g.nh(); ++i)
        acc += std::pow(1.0 + g.kmag2()[i], s) * std::norm(f.data()[i]);
    return std::sqrt(g.area() * acc);
}

/// L^2(z; Hs-weighted in x) norm of a scalar stack with |k|^s (hom=true)
/// or (1+|k|^2)^{s/2} weights.
inline real norm_L2z_Hsx(const Levels& lv, real s, bool homogeneous,
                         const std::vector<real>& zweights, real dz) {
    const auto& g = *lv.grid;
    real acc = 0.0;
    for (int j = 0; j < lv.nlev; ++j) {
        const cplx* c = lv.level(j);
        real lev = 0.0;
        for (std::size_t i = 0; i < g.nh(); ++i) {
            const real k2 = g.kmag2()[i];
            real w;
            if (homogeneous) {
                if (k2 == 0.0) continue;
                w = std::pow(k2, s);
            } else {
                w = std::pow(1.0 + k2, s);
            }
            lev += w * std::norm(c[i]);
        }
        acc += zweights[j] * lev;
    }
    return std::sqrt(g.area() * acc * dz);
}

/// Physical-space L^p norm over the torus of one level.
inline real level_Lp(const Grid3D& g, const cplx* spec, real p, std::vector<cplx>& scratch,
                     std::vector<real>& phys) {
    phys.resize(g.nh());
    synthesize_level(g, spec, phys.data(), scratch);
    const real cellA = g.area() / real(g.nh());
    if (std::isinf(p)) {
        real m = 0.0;
        for (real v : phys) m = std::max(m, std::abs(v));
        return m;
    }
    real s = 0.0;
    for (real v : phys) s += std::pow(std::abs(v), p);
    return std::pow(cellA * s, 1.0 / p);
}

/// Mixed norm L^{p_z}(0,Zmax; L^{p_x}(torus)) of a scalar field.
/// p = infinity is allowed in either slot.
inline real norm_mixed(const ScalarField3D& f, real p_z, real p_x) {
    const auto& g = *f.grid();
    std::vector<real> lev(g.Nz());
    parallel_for(g.Nz(), [&](std::size_t j) {
        std::vector<cplx> scratch;
        std::vector<real> phys;
        lev[j] = level_Lp(g, f.level(int(j)), p_x, scratch, phys);
    });
    if (std::isinf(p_z)) {
        real m = 0.0;
        for (real v : lev) m = std::max(m, v);
        return m;
    }
    real s = 0.0;
    for (real v : lev) s += std::pow(v, p_z);
    return std::pow(g.dz() * s, 1.0 / p_z);
}

/// Pointwise magnitude of a vector field sampled at cell centers (faces
/// averaged); used for the mixed norms of grad psi in the diagnostics.
inline ScalarField3D vector_magnitude_at_centers(const VectorField3D& u) {
    const auto& g = *u.grid();
    ScalarField3D m(u.grid());
    parallel_for(g.Nz(), [&](std::size_t j) {
        std::vector<cplx> scratch;
        std::vector<real> pw(g.nh()), plo(g.nh()), phi(g.nh()), pa(g.nh()), pb(g.nh());
        synthesize_level(g, u.w.level(int(j)), plo.data(), scratch);
        synthesize_level(g, u.w.level(int(j) + 1), phi.data(), scratch);
        synthesize_level(g, u.h1.level(int(j)), pa.data(), scratch);
        synthesize_level(g, u.h2.level(int(j)), pb.data(), scratch);
        for (std::size_t i = 0; i < g.nh(); ++i) {
            const real wc = 0.5 * (plo[i] + phi[i]);
            pw[i] = std::sqrt(wc * wc + pa[i] * pa[i] + pb[i] * pb[i]);
        }
        analyze_level(g, pw.data(), m.level(int(j)));
    });
    return m;
}

inline real norm_mixed(const VectorField3D& u, real p_z, real p_x) {
    return norm_mixed(vector_magnitude_at_centers(u), p_z, p_x);
}

/// Max over physical grid points of sqrt(u1^2 + u2^2) of the horizontal
/// velocity; feeds the CFL check.
inline real max_horizontal_speed(const VectorField3D& u) {
    const auto& g = *u.grid();
    std::vector<real> lev(g.Nz(), 0.0);
    parallel_for(g.Nz(), [&](std::size_t j) {
        std::vector<cplx> scratch;
        std::vector<real> pa(g.nh()), pb(g.nh());
        synthesize_level(g, u.h1.level(int(j)), pa.data(), scratch);
        synthesize_level(g, u.h2.level(int(j)), pb.data(), scratch);
        real m = 0.0;
        for (std::size_t i = 0; i < g.nh(); ++i)
            m = std::max(m, std::sqrt(pa[i] * pa[i] + pb[i] * pb[i]));
        lev[j] = m;
    });
    real m = 0.0;
    for (real v : lev) m = std::max(m, v);
    return m;
}

// ---- discrete divergence theorem -----------------------------------------------

/// <grad phi, u> + <phi, div u> - top-pairing - <gamma_0 phi, gamma_nu u>.
/// Zero to rounding for every phi, u; the calculus module's exactness test.
inline real divergence_theorem_residual(const ScalarField3D& phi, const VectorField3D& u) {
    const auto& g = *phi.grid();
    VectorField3D gphi = gradient(phi);
    ScalarField3D du = div(u);
    const real lhs = inner(gphi, u);
    const real vol = inner(phi, du);
    SurfaceField2D phi0 = trace_gamma0(phi);
    SurfaceField2D phiZ = extrapolate_boundary(phi.lv, 1);
    SurfaceField2D gnu = trace_gamma_nu(u);
    SurfaceField2D wtop(phi.grid());
    const cplx* wz = u.w.level(g.Nz());
    for (std::size_t i = 0; i < g.nh(); ++i) wtop.data()[i] = wz[i];
    const real bottom = inner(phi0, gnu);
    const real top = inner(phiZ, wtop);
    return lhs + vol - top - bottom;
}

} // namespace qghs
