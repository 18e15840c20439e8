/// Per-horizontal-mode solves of L_lambda psi = f on the truncated vertical
/// interval, with either a Dirichlet value or a Neumann flux at z = 0 and a
/// homogeneous value condition at Z_max.
///
/// Every cell balance is an equation of the system; boundary fluxes are
/// closed by quadratic ghost extrapolation (Dirichlet ends) or carry the
/// datum literally (Neumann bottom). The resulting boundary fluxes are part
/// of the returned gradient field, so gamma_nu(solution gradient) reproduces
/// a Neumann datum exactly and repeated Hodge projections are idempotent at
/// machine precision. Both solvers share the top closure for the same reason.
#pragma once

#include "calculus.hpp"

namespace qghs {

namespace detail {

/// Ghost-flux closure through a boundary value v at the wall, quadratic in z:
/// G_wall = sign * lam_wall * (9 c0 - c1 - 8 v) / (3 dz),
/// where c0, c1 are the two cells nearest the wall (sign -1 at the top wall).
struct WallClosure {
    real c0, c1; // coefficients multiplying the two nearest cells in G_wall
    real datum;  // coefficient multiplying the boundary value
};

inline WallClosure dirichlet_closure(real lam_wall, real dz, bool top) {
    const real s = top ? -1.0 : 1.0;
    return {s * 3.0 * lam_wall / dz, s * -lam_wall / (3.0 * dz), s * -8.0 * lam_wall / (3.0 * dz)};
}

/// Solve a tridiagonal system with real coefficients and complex rhs
/// (Thomas algorithm; the vertical operators here are diagonally dominant).
inline void thomas(std::vector<real>& dl, std::vector<real>& dd, std::vector<real>& du,
                   std::vector<cplx>& rhs) {
    const int n = int(dd.size());
    for (int i = 1; i < n; ++i) {
        const real m = dl[i] / dd[i - 1];
        dd[i] -= m * du[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= dd[n - 1];
    for (int i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - du[i] * rhs[i + 1]) / dd[i];
}

} // namespace detail

/// A solved boundary-value problem: the potential and its solver-consistent
/// gradient (interior fluxes are the staggered differences; boundary fluxes
/// are the closures the solve actually enforced).
struct EllipticSolution {
    ScalarField3D psi;
    VectorField3D grad;
};

namespace detail {

enum class BottomKind { DirichletValue, NeumannFlux };

/// One mode: assemble and solve, then record the boundary fluxes.
/// bottom datum: Dirichlet value or Neumann flux g (G_0 = -g). rhs = f per cell.
inline void solve_mode(real k2, const LambdaProfile& lam, real dz, int Nz, BottomKind kind,
                       cplx bottom_datum, const cplx* f, std::size_t stride, cplx* psi_out,
                       cplx& G0_out, cplx& GN_out) {
    static thread_local std::vector<real> dl, dd, du;
    static thread_local std::vector<cplx> rhs;
    dl.assign(Nz, 0.0);
    dd.assign(Nz, 0.0);
    du.assign(Nz, 0.0);
    rhs.assign(Nz, cplx(0.0));
    const real idz2 = 1.0 / (dz * dz);
    for (int j = 0; j < Nz; ++j) rhs[j] = f ? f[std::size_t(j) * stride] : cplx(0.0);

    // cell 0
    if (kind == BottomKind::NeumannFlux) {
        // (G_1 - (-g))/dz - k2 psi_0 = f_0
        dd[0] = -lam.face[1] * idz2 - k2;
        du[0] = lam.face[1] * idz2;
        rhs[0] -= bottom_datum / dz;
    } else {
        const auto cl = dirichlet_closure(lam.face[0], dz, false);
        dd[0] = (lam.face[1] / dz + cl.c0) * (-1.0 / dz) - k2;
        du[0] = (lam.face[1] / dz - cl.c1) * (1.0 / dz);
        rhs[0] += cl.datum * bottom_datum / dz;
    }
    for (int j = 1; j < Nz - 1; ++j) {
        dl[j] = lam.face[j] * idz2;
        dd[j] = -(lam.face[j] + lam.face[j + 1]) * idz2 - k2;
        du[j] = lam.face[j + 1] * idz2;
    }
    {
        // cell Nz-1 with the shared top closure (homogeneous value)
        const auto cl = dirichlet_closure(lam.face[Nz], dz, true);
        dd[Nz - 1] = (cl.c0 - lam.face[Nz - 1] / dz) / dz - k2;
        dl[Nz - 1] = (cl.c1 + lam.face[Nz - 1] / dz) / dz;
    }
    thomas(dl, dd, du, rhs);
    for (int j = 0; j < Nz; ++j) psi_out[std::size_t(j) * stride] = rhs[j];

    if (kind == BottomKind::NeumannFlux) {
        G0_out = -bottom_datum;
    } else {
        const auto cl = dirichlet_closure(lam.face[0], dz, false);
        G0_out = cl.c0 * rhs[0] + cl.c1 * rhs[1] + cl.datum * bottom_datum;
    }
    const auto tc = dirichlet_closure(lam.face[Nz], dz, true);
    GN_out = tc.c0 * rhs[Nz - 1] + tc.c1 * rhs[Nz - 2];
}

/// Gradient of a solved potential with prescribed boundary fluxes.
inline VectorField3D solver_gradient(const ScalarField3D& psi, const LambdaProfile& lam,
                                     const SurfaceField2D& G0, const SurfaceField2D& GN) {
    const auto& g = *psi.grid();
    VectorField3D v = horizontal_gradient(psi);
    const int Nz = g.Nz();
    const real dz = g.dz();
    parallel_for(Nz + 1, [&](std::size_t jf) {
        const int j = int(jf);
        cplx* w = v.w.level(j);
        if (j == 0) {
            std::copy(G0.data(), G0.data() + g.nh(), w);
        } else if (j == Nz) {
            std::copy(GN.data(), GN.data() + g.nh(), w);
        } else {
            const cplx *lo = psi.level(j - 1), *hi = psi.level(j);
            for (std::size_t i = 0; i < g.nh(); ++i) w[i] = lam.face[j] * (hi[i] - lo[i]) / dz;
        }
    });
    return v;
}

inline EllipticSolution solve_bvp(const GridPtr& grid, const LambdaProfile& lam,
                                  BottomKind kind, const SurfaceField2D* datum,
                                  const ScalarField3D* f) {
    const auto& g = *grid;
    require(!f || finite(f->lv), "invalid-parameter", "elliptic rhs is not finite");
    ScalarField3D psi(grid);
    SurfaceField2D G0(grid), GN(grid);
    const std::size_t nh = g.nh();
    parallel_for(nh, [&](std::size_t id) {
        const cplx bd = datum ? datum->data()[id] : cplx(0.0);
        const cplx* fr = f ? f->level(0) + id : nullptr;
        solve_mode(g.kmag2()[id], lam, g.dz(), g.Nz(), kind, bd, fr, nh, psi.level(0) + id,
                   G0.data()[id], GN.data()[id]);
    });
    VectorField3D grad = solver_gradient(psi, lam, G0, GN);
    return {std::move(psi), std::move(grad)};
}

} // namespace detail

/// L_lambda psi = f, psi = bval (default 0) at z = 0, psi = 0 at Z_max.
inline EllipticSolution solve_dirichlet(const ScalarField3D& f, const LambdaProfile& lam,
                                        const SurfaceField2D* bval = nullptr) {
    return detail::solve_bvp(f.grid(), lam, detail::BottomKind::DirichletValue, bval, &f);
}

/// L_lambda psi = f (default 0), gamma_nu(grad_lambda psi) = g at z = 0,
/// psi = 0 at Z_max. For the k = 0 mode the flux datum must be balanced by
/// the z-integral of the rhs (half-line admissibility).
inline EllipticSolution solve_neumann(const SurfaceField2D& g, const LambdaProfile& lam,
                                      const ScalarField3D* f = nullptr) {
    const auto& gr = *g.grid();
    const cplx g0 = g.data()[0];
    cplx fint(0.0);
    if (f)
        for (int j = 0; j < gr.Nz(); ++j) fint += f->level(j)[0] * gr.dz();
    const real scale = std::max({norm_L2_surface(g), f ? norm_L2_3d(*f) : 0.0, 1e-300});
    if (std::abs(g0 - fint) > 1e-12 * scale)
        fail("incompatible-mean",
             "k = 0 Neumann datum is not balanced by the interior rhs (|resid| = " +
                 std::to_string(std::abs(g0 - fint)) + ")");
    return detail::solve_bvp(g.grid(), lam, detail::BottomKind::NeumannFlux, &g, f);
}

/// The forcing field of the reformulated equation: grad_lambda F where
/// L_lambda F = f_L and gamma_nu(grad_lambda F) = f_nu.
inline VectorField3D compute_forcing_F(const ScalarField3D& fL, const SurfaceField2D& fnu,
                                       const LambdaProfile& lam) {
    return solve_neumann(fnu, lam, &fL).grad;
}

} // namespace qghs
