#ifndef SBLOCH_NOISE_HPP
#define SBLOCH_NOISE_HPP

#include <sbloch/bloch.hpp>
#include <sbloch/svd.hpp>

namespace sbloch {

/// Cross-covariance D and noise matrices with B₁ B₂ᵀ = D.
struct NoiseModel {
    Mat3 d;
    Mat3 b1;
    Mat3 b2;
    Svd3 svd;

    static NoiseModel zero();
};

/// D = −(AM + MAᵀ); no symmetry is imposed.
Mat3 noise_cross_covariance(const DriftModel& drift, const Mat3& m);

/**
 * Factorizes d = UΣV† into B₁ = U√Σ and B₂ = V*√Σ. Singular values below
 * 1e-14·σ_max are treated as zero so rank-deficient D injects no noise.
 */
NoiseModel svd_factorize(const Mat3& d);

} // namespace sbloch

#endif
