#include <catch2/catch_amalgamated.hpp>

#include "qghs/calculus.hpp"
#include "qghs/random_fields.hpp"

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

real max_abs_levels(const Levels& lv) {
    real m = 0.0;
    for (const auto& v : lv.data) m = std::max(m, std::abs(v));
    return m;
}

} // namespace

TEST_CASE("horizontal and perpendicular gradients on single modes") {
    auto g = make_grid(1.0, 16, 16, 8, 2.0);
    SECTION("grad-bar of cos(x1) is (0, -sin x1, 0)") {
        auto psi = from_function(g, [](real, real x, real) { return std::cos(x); });
        VectorField3D v = horizontal_gradient(psi);
        auto expect = from_function(g, [](real, real x, real) { return -std::sin(x); });
        axpy(v.h1, -1.0, expect.lv);
        CHECK(max_abs_levels(v.h1) < 1e-13);
        CHECK(max_abs_levels(v.h2) < 1e-13);
        CHECK(max_abs_levels(v.w) == 0.0);
    }
    SECTION("grad-bar of a constant vanishes") {
        auto psi = from_function(g, [](real, real, real) { return 3.0; });
        VectorField3D v = horizontal_gradient(psi);
        CHECK(max_abs_levels(v.h1) < 1e-14);
        CHECK(max_abs_levels(v.h2) < 1e-14);
    }
    SECTION("grad-bar of cos(x1+x2) has equal components") {
        auto psi = from_function(g, [](real, real x, real y) { return std::cos(x + y); });
        VectorField3D v = horizontal_gradient(psi);
        axpy(v.h1, -1.0, v.h2);
        CHECK(max_abs_levels(v.h1) < 1e-13);
    }
    SECTION("perp gradient of cos(x1) is (0, 0, -sin x1)") {
        auto psi = from_function(g, [](real, real x, real) { return std::cos(x); });
        VectorField3D v = perp_gradient(psi);
        auto expect = from_function(g, [](real, real x, real) { return -std::sin(x); });
        axpy(v.h2, -1.0, expect.lv);
        CHECK(max_abs_levels(v.h1) < 1e-14);
        CHECK(max_abs_levels(v.h2) < 1e-13);
    }
    SECTION("perp gradient of cos(x2) is (0, sin x2, 0)") {
        auto psi = from_function(g, [](real, real, real y) { return std::cos(y); });
        VectorField3D v = perp_gradient(psi);
        auto expect = from_function(g, [](real, real, real y) { return std::sin(y); });
        axpy(v.h1, -1.0, expect.lv);
        CHECK(max_abs_levels(v.h1) < 1e-13);
        CHECK(max_abs_levels(v.h2) < 1e-14);
    }
    SECTION("perp gradients are divergence-free at machine precision") {
        Rng rng(5);
        ScalarField3D psi = random_scalar(g, rng);
        ScalarField3D d = div(perp_gradient(psi));
        CHECK(max_abs_levels(d.lv) < 1e-12 * std::max(norm_L2_3d(psi), real(1.0)));
    }
}

TEST_CASE("weighted vertical gradient") {
    auto g = make_grid(1.0, 16, 16, 32, 8.0);
    auto lam1 = LambdaProfile::constant(*g, 1.0);
    SECTION("z-independent field has exactly zero vertical component") {
        auto psi = from_function(g, [](real, real x, real) { return std::cos(x); });
        VectorField3D v = grad_lambda(psi, lam1);
        CHECK(max_abs_levels(v.w) < 1e-14);
    }
    SECTION("lambda scaling acts on the vertical component only") {
        auto psi = from_function(g, [](real z, real x, real) { return std::exp(-z) * std::cos(x); });
        auto lam4 = LambdaProfile::constant(*g, 4.0);
        VectorField3D v1 = grad_lambda(psi, lam1);
        VectorField3D v4 = grad_lambda(psi, lam4);
        Levels scaled = v1.w;
        scale(scaled, 4.0);
        axpy(scaled, -1.0, v4.w);
        CHECK(max_abs_levels(scaled) < 1e-12);
        axpy(v4.h1, -1.0, v1.h1);
        CHECK(max_abs_levels(v4.h1) == 0.0);
    }
    SECTION("second-order convergence to the analytic vertical derivative") {
        real errs[2];
        int n = 0;
        for (int Nz : {32, 64}) {
            auto gr = make_grid(1.0, 16, 16, Nz, 8.0);
            auto lam = LambdaProfile::constant(*gr, 1.0);
            auto psi =
                from_function(gr, [](real z, real x, real) { return std::exp(-z) * std::cos(x); });
            VectorField3D v = grad_lambda(psi, lam);
            // compare against -e^{-z} cos x at interior faces
            real maxerr = 0.0;
            std::vector<cplx> scratch;
            std::vector<real> phys(gr->nh());
            for (int j = 1; j < gr->Nz(); ++j) {
                synthesize_level(*gr, v.w.level(j), phys.data(), scratch);
                for (int ix = 0; ix < gr->Nx(); ++ix)
                    maxerr = std::max(maxerr,
                                      std::abs(phys[gr->idx(ix, 0)] +
                                               std::exp(-gr->z_face(j)) * std::cos(gr->x1(ix))));
            }
            errs[n++] = maxerr;
        }
        const real order = std::log2(errs[0] / errs[1]);
        CHECK(order > 1.8);
        CHECK(order < 2.2);
    }
}

TEST_CASE("discrete L_lambda") {
    auto g = make_grid(1.0, 16, 16, 32, 8.0);
    auto lam = LambdaProfile::constant(*g, 1.0);
    SECTION("quadratic k = 0 profile: L psi = 2 exactly at every cell") {
        auto psi = from_function(g, [](real z, real, real) { return z * z; });
        ScalarField3D L = L_lambda_apply(psi, lam);
        std::vector<cplx> scratch;
        std::vector<real> phys(g->nh());
        for (int j = 0; j < g->Nz(); ++j) {
            synthesize_level(*g, L.level(j), phys.data(), scratch);
            for (std::size_t i = 0; i < g->nh(); ++i)
                CHECK(std::abs(phys[i] - 2.0) < 1e-10);
        }
    }
    SECTION("harmonic field: interior residual is O(dz^2)") {
        real errs[2];
        int n = 0;
        for (int Nz : {32, 64}) {
            auto gr = make_grid(1.0, 16, 16, Nz, 8.0);
            auto lm = LambdaProfile::constant(*gr, 1.0);
            auto psi =
                from_function(gr, [](real z, real x, real) { return std::exp(-z) * std::cos(x); });
            ScalarField3D L = L_lambda_apply(psi, lm);
            real m = 0.0;
            std::vector<cplx> scratch;
            std::vector<real> phys(gr->nh());
            for (int j = 1; j < gr->Nz() - 1; ++j) {
                synthesize_level(*gr, L.level(j), phys.data(), scratch);
                for (std::size_t i = 0; i < gr->nh(); ++i) m = std::max(m, std::abs(phys[i]));
            }
            errs[n++] = m;
        }
        CHECK(errs[0] / errs[1] > 3.0);
        CHECK(errs[0] / errs[1] < 5.0);
    }
}

TEST_CASE("fractional horizontal powers") {
    auto g = make_grid(1.0, 16, 16, 4, 1.0);
    ScalarField3D f(g);
    f.lv.fill_zero();
    f.level(0)[g->idx(2, 0)] = cplx(0.5);
    f.level(0)[g->idx(14, 0)] = cplx(0.5);
    SECTION("s = 0 is the identity") {
        ScalarField3D out = fractional_horizontal(f, 0.0);
        for (std::size_t i = 0; i < f.lv.size(); ++i) CHECK(out.lv.data[i] == f.lv.data[i]);
    }
    SECTION("|k| = 2, s = 1/2 doubles the coefficient") {
        ScalarField3D out = fractional_horizontal(f, 0.5);
        CHECK(std::abs(out.level(0)[g->idx(2, 0)] - cplx(1.0)) < 1e-14);
    }
    SECTION("|k| = 1 modes are fixed by every power") {
        ScalarField3D u(g);
        u.lv.fill_zero();
        u.level(0)[g->idx(1, 0)] = cplx(0.5);
        u.level(0)[g->idx(15, 0)] = cplx(0.5);
        ScalarField3D out = fractional_horizontal(u, -0.25);
        CHECK(std::abs(out.level(0)[g->idx(1, 0)] - cplx(0.5)) < 1e-14);
    }
    SECTION("negative powers demand the zero-mean gauge") {
        ScalarField3D bad = f;
        bad.level(0)[0] = cplx(1.0);
        CHECK_THROWS_AS(fractional_horizontal(bad, -0.5), Error);
    }
    SECTION("exponents outside [-3, 3] are rejected") {
        CHECK_THROWS_AS(fractional_horizontal(f, 3.5), Error);
    }
}

TEST_CASE("mollifier") {
    auto g = make_grid(1.0, 16, 16, 4, 1.0);
    SECTION("delta = 0 is the identity; negative delta is rejected") {
        Rng rng(3);
        ScalarField3D f = random_scalar(g, rng);
        ScalarField3D out = mollify(f, 0.0);
        for (std::size_t i = 0; i < f.lv.size(); ++i) CHECK(out.lv.data[i] == f.lv.data[i]);
        CHECK_THROWS_AS(mollify(f, -1.0), Error);
    }
    SECTION("constants are preserved (unit integral)") {
        ScalarField3D f(g);
        f.lv.fill_zero();
        f.level(1)[0] = cplx(4.0);
        ScalarField3D out = mollify(f, 2.0);
        CHECK(std::abs(out.level(1)[0] - cplx(4.0)) < 1e-14);
    }
    SECTION("mode (1,0) at delta = 1 is damped by e^{-1/2}") {
        ScalarField3D f(g);
        f.lv.fill_zero();
        f.level(0)[g->idx(1, 0)] = cplx(1.0);
        ScalarField3D out = mollify(f, 1.0);
        CHECK(std::abs(out.level(0)[g->idx(1, 0)] - cplx(std::exp(-0.5))) < 1e-14);
    }
    SECTION("mollification commutes with grad_lambda exactly") {
        Rng rng(9);
        auto lam = LambdaProfile::tanh_stratified(*g, 0.5, 2.0, 0.4, 0.2);
        ScalarField3D f = random_scalar(g, rng);
        VectorField3D a = mollify(grad_lambda(f, lam), 0.7);
        VectorField3D b = grad_lambda(mollify(f, 0.7), lam);
        axpy(a, -1.0, b);
        CHECK(max_abs_levels(a.w) < 1e-14);
        CHECK(max_abs_levels(a.h1) < 1e-14);
    }
}

TEST_CASE("traces") {
    auto g = make_grid(1.0, 16, 16, 32, 8.0);
    auto lam = LambdaProfile::constant(*g, 1.0);
    SECTION("gamma_nu of the harmonic gradient approximates cos x1 at O(dz^2)") {
        real errs[2];
        int n = 0;
        for (int Nz : {32, 64}) {
            auto gr = make_grid(1.0, 16, 16, Nz, 8.0);
            auto lm = LambdaProfile::constant(*gr, 1.0);
            auto psi =
                from_function(gr, [](real z, real x, real) { return std::exp(-z) * std::cos(x); });
            SurfaceField2D s = trace_gamma_nu(grad_lambda(psi, lm));
            std::vector<real> phys = to_physical_surface(s);
            real m = 0.0;
            for (int ix = 0; ix < gr->Nx(); ++ix)
                m = std::max(m, std::abs(phys[gr->idx(ix, 0)] - std::cos(gr->x1(ix))));
            errs[n++] = m;
        }
        CHECK(errs[0] < 0.08);
        CHECK(errs[0] / errs[1] > 2.5); // second-order one-sided stencil
        CHECK(errs[0] / errs[1] < 5.0);
    }
    SECTION("z-independent fields have zero gamma_nu up to rounding") {
        auto psi = from_function(g, [](real, real x, real y) { return std::cos(x) + std::sin(y); });
        SurfaceField2D s = trace_gamma_nu(grad_lambda(psi, lam));
        CHECK(max_abs_levels(s.lv) < 1e-14);
    }
    SECTION("gamma_0 of z cos(x1) vanishes (linear extrapolation exactness)") {
        auto psi = from_function(g, [](real z, real x, real) { return z * std::cos(x); });
        SurfaceField2D s = trace_gamma0(psi);
        CHECK(max_abs_levels(s.lv) < 1e-12);
    }
}

TEST_CASE("norms") {
    auto g = make_grid(1.0, 32, 32, 16, 4.0);
    SECTION("||cos x1||_{L2(torus)} = pi sqrt(2)") {
        SurfaceField2D s(g);
        s.lv.fill_zero();
        s.data()[g->idx(1, 0)] = cplx(0.5);
        s.data()[g->idx(g->Nx() - 1, 0)] = cplx(0.5);
        CHECK(norm_L2_surface(s) == Catch::Approx(pi * std::sqrt(2.0)).epsilon(1e-12));
        CHECK(norm_fractional_surface(s, 0.5) ==
              Catch::Approx(pi * std::sqrt(2.0)).epsilon(1e-12));
    }
    SECTION("norm_mixed(2,2) agrees with the L2 norm") {
        Rng rng(21);
        ScalarField3D f = random_scalar(g, rng);
        CHECK(norm_mixed(f, 2.0, 2.0) == Catch::Approx(norm_L2_3d(f)).epsilon(1e-12));
    }
    SECTION("analytic 3D gradient energy of e^{-z} cos x1") {
        // int (psi_z^2 + psi_x^2) = 2 pi^2 (1 - e^{-2 Zmax}), computed on a fine grid
        auto gr = make_grid(1.0, 16, 16, 256, 8.0);
        auto lm = LambdaProfile::constant(*gr, 1.0);
        auto psi =
            from_function(gr, [](real z, real x, real) { return std::exp(-z) * std::cos(x); });
        const real e2 = std::pow(norm_L2_3d(grad_lambda(psi, lm)), 2.0);
        CHECK(e2 == Catch::Approx(2.0 * pi * pi * (1.0 - std::exp(-16.0))).epsilon(2e-4));
    }
}

TEST_CASE("discrete divergence theorem holds to rounding") {
    auto g = make_grid(1.0, 24, 24, 12, 3.0);
    Rng rng(33);
    for (int rep = 0; rep < 5; ++rep) {
        ScalarField3D phi = random_scalar(g, rng, 6, 10, false);
        VectorField3D u = random_vector(g, rng);
        const real resid = divergence_theorem_residual(phi, u);
        const real scalev =
            norm_L2_3d(gradient(phi)) * norm_L2_3d(u) + norm_L2_3d(phi) * norm_L2_3d(div(u));
        CHECK(std::abs(resid) < 1e-10 * std::max(scalev, real(1e-30)));
    }
}
