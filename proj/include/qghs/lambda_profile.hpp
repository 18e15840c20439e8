/// Stratification weight lambda(z), a function of z only with
/// 1/Lambda <= lambda <= Lambda. Sampled at both faces and cell centers.
#pragma once

#include <cmath>
#include <functional>

#include "grid.hpp"

namespace qghs {

struct LambdaProfile {
    std::vector<real> face;   // lambda(z_j), j = 0..Nz
    std::vector<real> center; // lambda(z_{j+1/2}), j = 0..Nz-1
    real Lambda = 1.0;        // global bound

    LambdaProfile() = default;

    LambdaProfile(const Grid3D& g, const std::function<real(real)>& f) {
        face.resize(g.Nz() + 1);
        center.resize(g.Nz());
        real lo = f(0.0), hi = lo;
        for (int j = 0; j <= g.Nz(); ++j) {
            face[j] = f(g.z_face(j));
            lo = std::min(lo, face[j]);
            hi = std::max(hi, face[j]);
        }
        for (int j = 0; j < g.Nz(); ++j) {
            center[j] = f(g.z_center(j));
            lo = std::min(lo, center[j]);
            hi = std::max(hi, center[j]);
        }
        require(lo > 0.0, "invalid-parameter", "lambda must be positive");
        Lambda = std::max(hi, 1.0 / lo);
    }

    static LambdaProfile constant(const Grid3D& g, real c) {
        return LambdaProfile(g, [c](real) { return c; });
    }

    /// Smooth stratification step between `low` and `high` around z0.
    static LambdaProfile tanh_stratified(const Grid3D& g, real low, real high, real z0,
                                         real width) {
        require(width > 0.0, "invalid-parameter", "tanh profile width must be positive");
        return LambdaProfile(g, [=](real z) {
            return low + 0.5 * (high - low) * (1.0 + std::tanh((z - z0) / width));
        });
    }
};

} // namespace qghs
