#ifndef SBLOCH_FIT_HPP
#define SBLOCH_FIT_HPP

#include <array>

#include <sbloch/spectrum.hpp>

namespace sbloch {

/// Area-normalized Lorentzian: (area/π)·γ/((ω−center)² + γ²).
struct Lorentzian {
    double center = 0.0;
    double half_width = 1.0;
    double area = 0.0;

    double operator()(double omega) const;
};

struct TripletFit {
    std::array<Lorentzian, 3> lines; ///< red sideband, central, blue sideband
    double residual = 0.0;           ///< RMS of data − model
    int iterations = 0;

    double total_area() const;
};

/// Starting point for the fit, in the energy unit of the spectrum.
struct FitHint {
    double rabi_energy = 0.0;
    double detuning_energy = 0.0;
    double half_width = 0.0; ///< initial HWHM; 0 picks three grid spacings
};

/// Hint derived from system parameters (HWHM ħ(Γ₁+Γ₂)/2).
FitHint fit_hint(const SystemParams& params);

/**
 * Least-squares fit of three Lorentzians by damped Gauss-Newton
 * (Levenberg-Marquardt) with an analytic Jacobian. Widths are fitted as
 * log γ and areas as a² so both stay non-negative. Throws FitNotConverged
 * after 500 iterations.
 */
TripletFit fit_triplet(const Spectrum& spec, const FitHint& hint);

} // namespace sbloch

#endif
