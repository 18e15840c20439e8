#include <catch2/catch_amalgamated.hpp>

#include "qghs/field.hpp"
#include "qghs/random_fields.hpp"

using namespace qghs;

TEST_CASE("grid construction and wavenumber tables") {
    auto g = make_grid(1.0, 64, 64, 32, 8.0);
    CHECK(g->dz() == Catch::Approx(0.25));
    CHECK(g->max_retained_kx() == 21);
    CHECK(g->max_retained_ky() == 21);
    // |k|^2 = k1^2 + k2^2 exactly for every retained mode
    for (int iy = 0; iy < g->Ny(); ++iy)
        for (int ix = 0; ix < g->Nx(); ++ix) {
            const auto id = g->idx(ix, iy);
            CHECK(g->kmag2()[id] == g->kx()[ix] * g->kx()[ix] + g->ky()[iy] * g->ky()[iy]);
        }

    auto gmin = make_grid(1.0, 4, 4, 4, 1.0);
    CHECK(gmin->dz() == Catch::Approx(0.25));

    CHECK_THROWS_AS(make_grid(1.0, 3, 4, 4, 1.0), Error);
    CHECK_THROWS_AS(make_grid(1.0, 4, 4, 3, 1.0), Error);
    CHECK_THROWS_AS(make_grid(-1.0, 4, 4, 4, 1.0), Error);
    CHECK_THROWS_AS(make_grid(1.0, 4, 4, 4, 0.0), Error);
}

TEST_CASE("transforms: constant and single-cosine fields") {
    auto g = make_grid(1.0, 16, 16, 4, 1.0);
    SECTION("constant field concentrates at k = 0") {
        std::vector<real> phys(std::size_t(g->Nz()) * g->nh(), 2.5);
        ScalarField3D f = to_spectral(g, phys);
        for (int j = 0; j < g->Nz(); ++j) {
            CHECK(std::abs(f.level(j)[0] - cplx(2.5)) < 1e-13);
            real rest = 0.0;
            for (std::size_t i = 1; i < g->nh(); ++i) rest += std::abs(f.level(j)[i]);
            CHECK(rest < 1e-12);
        }
    }
    SECTION("cos(x1) gives conjugate modes of coefficient 1/2 at (+-1, 0)") {
        std::vector<real> phys(std::size_t(g->Nz()) * g->nh());
        for (int j = 0; j < g->Nz(); ++j)
            for (int iy = 0; iy < g->Ny(); ++iy)
                for (int ix = 0; ix < g->Nx(); ++ix)
                    phys[j * g->nh() + g->idx(ix, iy)] = std::cos(g->x1(ix));
        ScalarField3D f = to_spectral(g, phys);
        CHECK(std::abs(f.level(0)[g->idx(1, 0)] - cplx(0.5)) < 1e-13);
        CHECK(std::abs(f.level(0)[g->idx(g->Nx() - 1, 0)] - cplx(0.5)) < 1e-13);
    }
    SECTION("shape mismatch is rejected") {
        std::vector<real> bad(7);
        CHECK_THROWS_AS(to_spectral(g, bad), Error);
    }
}

TEST_CASE("round trip and Parseval on random fields") {
    auto g = make_grid(1.0, 32, 32, 8, 2.0);
    Rng rng(42);
    std::vector<real> phys(std::size_t(g->Nz()) * g->nh());
    for (auto& v : phys) v = rng.sym();
    ScalarField3D f = to_spectral(g, phys);
    std::vector<real> back = to_physical(f);
    real maxerr = 0.0, maxval = 0.0;
    for (std::size_t i = 0; i < phys.size(); ++i) {
        maxerr = std::max(maxerr, std::abs(back[i] - phys[i]));
        maxval = std::max(maxval, std::abs(phys[i]));
    }
    CHECK(maxerr < 1e-12 * maxval);

    // Parseval: discrete L2 in physical space equals the spectral norm
    real phys_norm2 = 0.0;
    const real cellA = g->area() / real(g->nh());
    for (real v : phys) phys_norm2 += v * v * cellA * g->dz();
    real spec_norm2 = 0.0;
    for (int j = 0; j < g->Nz(); ++j)
        spec_norm2 += g->dz() * level_inner(*g, f.level(j), f.level(j));
    CHECK(std::abs(phys_norm2 - spec_norm2) < 1e-12 * phys_norm2);
}

TEST_CASE("dealiasing") {
    auto g = make_grid(1.0, 12, 12, 4, 1.0); // cutoff |m| <= 4
    ScalarField3D f(g);
    f.lv.fill_zero();
    SECTION("a retained mode survives, the Nyquist-side mode dies") {
        f.level(0)[g->idx(1, 0)] = cplx(1.0);
        f.level(0)[g->idx(6, 0)] = cplx(1.0); // |m| = 6 = N/2 > 4
        symmetrize(f.lv);
        dealias(f);
        CHECK(std::abs(f.level(0)[g->idx(1, 0)]) > 0.4);
        CHECK(std::abs(f.level(0)[g->idx(6, 0)]) == 0.0);
    }
    SECTION("idempotence on a random field") {
        Rng rng(7);
        ScalarField3D r(g);
        for (auto& v : r.lv.data) v = cplx(rng.sym(), rng.sym());
        symmetrize(r.lv);
        ScalarField3D once = r;
        dealias(once);
        ScalarField3D twice = once;
        dealias(twice);
        for (std::size_t i = 0; i < once.lv.size(); ++i)
            CHECK(once.lv.data[i] == twice.lv.data[i]);
    }
}

TEST_CASE("reality preservation through transforms") {
    auto g = make_grid(1.0, 32, 32, 8, 2.0);
    Rng rng(11);
    ScalarField3D f = random_scalar(g, rng);
    const real nrm = norm_L2_3d(f);
    for (int j = 0; j < g->Nz(); ++j)
        CHECK(max_imag_residue(*g, f.level(j)) < 1e-12 * std::max(nrm, 1e-30));
}
