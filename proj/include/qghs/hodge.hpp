/// The weighted Hodge decomposition u = grad_lambda(phi) + curl v and the
/// projectors P_lambda, P_curl.
///
/// Construction per horizontal mode k != 0 follows the two elliptic solves:
/// psi_1 from the Dirichlet problem with rhs div u, then psi_2 from the
/// Neumann problem with datum gamma_nu(u - grad_lambda psi_1). Because every
/// cell balance is a solver equation and the Neumann bottom flux is the
/// datum itself, the curl part has div = 0 and gamma_nu = 0 to rounding, and
/// the projectors are idempotent at machine precision.
///
/// The k = 0 column is the one place the torus differs from the plane: its
/// vertical component is a lambda-gradient of a z-only potential
/// (reconstructed by direct integration, gauge: potential vanishes at Z_max)
/// and goes to the gradient part; its horizontal components are
/// divergence-free with no vertical trace and go to the curl part.
#pragma once

#include "elliptic.hpp"

namespace qghs {

struct HodgeDecomposition {
    VectorField3D grad_part; // grad_lambda(potential), solver-consistent fluxes
    VectorField3D curl_part; // in H: div = 0, gamma_nu = 0
    ScalarField3D potential; // psi_1 + psi_2 (+ the k = 0 column)
};

inline HodgeDecomposition decompose(const VectorField3D& u, const LambdaProfile& lam) {
    require(finite(u), "invalid-parameter", "decompose: input is not finite");
    const GridPtr grid = u.grid();
    const auto& g = *grid;

    ScalarField3D du = div(u);
    // Mask the k = 0 column out of the elliptic path; it is handled directly.
    std::vector<cplx> du0(g.Nz()), uw0(g.Nz() + 1), uh10(g.Nz()), uh20(g.Nz());
    for (int j = 0; j < g.Nz(); ++j) {
        du0[j] = du.level(j)[0];
        du.level(j)[0] = cplx(0.0);
        uh10[j] = u.h1.level(j)[0];
        uh20[j] = u.h2.level(j)[0];
    }
    for (int j = 0; j <= g.Nz(); ++j) uw0[j] = u.w.level(j)[0];

    EllipticSolution s1 = solve_dirichlet(du, lam);

    // u_tilde = u - grad psi_1 (k = 0 column excluded), datum = gamma_nu(u_tilde)
    SurfaceField2D gnu(grid);
    for (std::size_t i = 0; i < g.nh(); ++i)
        gnu.data()[i] = -(u.w.level(0)[i] - s1.grad.w.level(0)[i]);
    gnu.data()[0] = cplx(0.0);
    EllipticSolution s2 = solve_neumann(gnu, lam);

    HodgeDecomposition out;
    out.potential = std::move(s1.psi);
    axpy(out.potential, 1.0, s2.psi);
    out.grad_part = std::move(s1.grad);
    axpy(out.grad_part, 1.0, s2.grad);

    // k = 0 column: vertical -> gradient part (direct potential integration),
    // horizontal -> curl part.
    {
        const real dz = g.dz();
        std::vector<cplx> phi(g.Nz());
        phi[g.Nz() - 1] = cplx(0.0);
        for (int j = g.Nz() - 1; j >= 1; --j)
            phi[j - 1] = phi[j] - dz * uw0[j] / lam.face[j];
        // gauge: extrapolated top value of the column vanishes
        const cplx shift = 2.0 * phi[g.Nz() - 1] - 1.5 * phi[g.Nz() - 2] + 0.5 * phi[g.Nz() - 3];
        for (int j = 0; j < g.Nz(); ++j) out.potential.level(j)[0] = phi[j] - shift;
        for (int j = 0; j <= g.Nz(); ++j) out.grad_part.w.level(j)[0] = uw0[j];
        for (int j = 0; j < g.Nz(); ++j) {
            out.grad_part.h1.level(j)[0] = cplx(0.0);
            out.grad_part.h2.level(j)[0] = cplx(0.0);
        }
    }

    out.curl_part = u;
    axpy(out.curl_part, -1.0, out.grad_part);
    return out;
}

inline VectorField3D project_lambda(const VectorField3D& u, const LambdaProfile& lam) {
    return decompose(u, lam).grad_part;
}

inline VectorField3D project_curl(const VectorField3D& u, const LambdaProfile& lam) {
    return decompose(u, lam).curl_part;
}

/// || P_lambda(Dbar^s u) - Dbar^s(P_lambda u) || / ||u||; the computable
/// content of the multiplier extension of the projector. Needs the k = 0
/// gauge for s < 0.
inline real multiplier_commutation_check(const VectorField3D& u, const LambdaProfile& lam,
                                         real s) {
    VectorField3D a = project_lambda(fractional_horizontal(u, s), lam);
    VectorField3D b = fractional_horizontal(project_lambda(u, lam), s);
    axpy(a, -1.0, b);
    const real nu = norm_L2_3d(u);
    return nu == 0.0 ? 0.0 : norm_L2_3d(a) / nu;
}

} // namespace qghs
