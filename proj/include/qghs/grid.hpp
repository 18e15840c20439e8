/// Grid3D: periodic horizontal torus [0, 2*pi*L_h)^2 discretized by an
/// N_x x N_y collocation grid, times a truncated vertical interval [0, Z_max]
/// split into N_z cells. Scalars live at cell centers z_{j+1/2}; vertical
/// fluxes live at the N_z+1 faces z_j (including z = 0 and z = Z_max).
///
/// The grid owns the horizontal FFT plans and the wavenumber/dealias tables
/// and is immutable after construction. Transform plans are created with
/// FFTW_ESTIMATE so the same build gives bit-identical results on reruns.
#pragma once

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>

#include "common.hpp"

namespace qghs {

class Grid3D {
public:
    Grid3D(real Lh, int Nx, int Ny, int Nz, real Zmax)
        : Lh_(Lh), Nx_(Nx), Ny_(Ny), Nz_(Nz), Zmax_(Zmax) {
        require(Nx >= 4 && Nx % 2 == 0, "invalid-parameter",
                "N_x must be even and >= 4, got " + std::to_string(Nx));
        require(Ny >= 4 && Ny % 2 == 0, "invalid-parameter",
                "N_y must be even and >= 4, got " + std::to_string(Ny));
        require(Nz >= 4, "invalid-parameter",
                "N_z must be >= 4, got " + std::to_string(Nz));
        require(Lh > 0.0, "invalid-parameter", "L_h must be positive");
        require(Zmax > 0.0, "invalid-parameter", "Z_max must be positive");
        dz_ = Zmax_ / Nz_;

        kx_.resize(Nx_);
        ky_.resize(Ny_);
        for (int i = 0; i < Nx_; ++i) kx_[i] = mode_index(i, Nx_) / Lh_;
        for (int j = 0; j < Ny_; ++j) ky_[j] = mode_index(j, Ny_) / Lh_;

        kmag2_.resize(nh());
        kmag_.resize(nh());
        dealias_.resize(nh());
        const int cx = Nx_ / 3, cy = Ny_ / 3; // 2/3 rule: keep |m| <= N/3
        for (int j = 0; j < Ny_; ++j) {
            const int my = mode_index(j, Ny_);
            for (int i = 0; i < Nx_; ++i) {
                const int mx = mode_index(i, Nx_);
                const std::size_t id = idx(i, j);
                kmag2_[id] = kx_[i] * kx_[i] + ky_[j] * ky_[j];
                kmag_[id] = std::sqrt(kmag2_[id]);
                dealias_[id] = (std::abs(mx) <= cx && std::abs(my) <= cy) ? 1 : 0;
            }
        }

        // c2c plans on a scratch buffer; executed later on arbitrary arrays.
        scratch_.resize(nh());
        auto* p = reinterpret_cast<fftw_complex*>(scratch_.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        plan_fwd_ = fftw_plan_dft_2d(Ny_, Nx_, p, p, FFTW_FORWARD, flags);
        plan_bwd_ = fftw_plan_dft_2d(Ny_, Nx_, p, p, FFTW_BACKWARD, flags);
        require(plan_fwd_ && plan_bwd_, "invalid-parameter", "FFT planning failed");
    }

    ~Grid3D() {
        fftw_destroy_plan(plan_fwd_);
        fftw_destroy_plan(plan_bwd_);
    }
    Grid3D(const Grid3D&) = delete;
    Grid3D& operator=(const Grid3D&) = delete;

    real Lh() const { return Lh_; }
    int Nx() const { return Nx_; }
    int Ny() const { return Ny_; }
    int Nz() const { return Nz_; }
    real Zmax() const { return Zmax_; }
    real dz() const { return dz_; }
    real dx() const { return 2.0 * pi * Lh_ / Nx_; }
    real dy() const { return 2.0 * pi * Lh_ / Ny_; }
    real area() const { return 4.0 * pi * pi * Lh_ * Lh_; }

    /// Horizontal modes per level and the flattened index (ix fastest).
    std::size_t nh() const { return std::size_t(Nx_) * Ny_; }
    std::size_t idx(int ix, int iy) const { return std::size_t(iy) * Nx_ + ix; }

    static int mode_index(int i, int n) { return i <= n / 2 ? i : i - n; }

    real z_center(int j) const { return (j + 0.5) * dz_; }
    real z_face(int j) const { return j * dz_; }
    real x1(int ix) const { return 2.0 * pi * Lh_ * ix / Nx_; }
    real x2(int iy) const { return 2.0 * pi * Lh_ * iy / Ny_; }

    const std::vector<real>& kx() const { return kx_; }
    const std::vector<real>& ky() const { return ky_; }
    const std::vector<real>& kmag() const { return kmag_; }
    const std::vector<real>& kmag2() const { return kmag2_; }
    const std::vector<std::uint8_t>& dealias_mask() const { return dealias_; }

    int max_retained_kx() const { return Nx_ / 3; }
    int max_retained_ky() const { return Ny_ / 3; }

    /// In-place 2D transforms on one level of nh() complex values.
    /// Forward includes the 1/(Nx*Ny) normalization, so coefficients are the
    /// c_k in f(x) = sum_k c_k exp(i k.x).
    void fft_forward(cplx* level) const {
        fftw_execute_dft(plan_fwd_, reinterpret_cast<fftw_complex*>(level),
                         reinterpret_cast<fftw_complex*>(level));
        const real s = 1.0 / (real(Nx_) * Ny_);
        for (std::size_t i = 0; i < nh(); ++i) level[i] *= s;
    }
    void fft_backward(cplx* level) const {
        fftw_execute_dft(plan_bwd_, reinterpret_cast<fftw_complex*>(level),
                         reinterpret_cast<fftw_complex*>(level));
    }

private:
    real Lh_;
    int Nx_, Ny_, Nz_;
    real Zmax_, dz_;
    std::vector<real> kx_, ky_, kmag_, kmag2_;
    std::vector<std::uint8_t> dealias_;
    mutable std::vector<cplx> scratch_;
    fftw_plan plan_fwd_ = nullptr;
    fftw_plan plan_bwd_ = nullptr;
};

using GridPtr = std::shared_ptr<const Grid3D>;

inline GridPtr make_grid(real Lh, int Nx, int Ny, int Nz, real Zmax) {
    return std::make_shared<const Grid3D>(Lh, Nx, Ny, Nz, Zmax);
}

} // namespace qghs
