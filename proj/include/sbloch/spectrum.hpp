#ifndef SBLOCH_SPECTRUM_HPP
#define SBLOCH_SPECTRUM_HPP

#include <span>
#include <vector>

#include <sbloch/ensemble.hpp>

namespace sbloch {

/**
 * Incoherent emission spectrum on an energy grid ħω (rotating frame, ω is
 * the offset from the drive). The coherent δ(ω) weight is carried
 * separately and never added to s_inc.
 */
struct Spectrum {
    std::vector<double> omega; ///< ħω in the energy unit of SystemParams
    std::vector<double> s_inc;
    double coherent_weight = 0.0;
    bool normalized = false;
    double tail_ratio = 0.0; ///< |C(τ_max)| / max|C|

    /// Copy scaled so that max(s_inc) = 1.
    Spectrum max_normalized() const;
};

/// n points evenly spaced on [−half_width, half_width]; n is forced odd so
/// that 0 is on the grid.
std::vector<double> symmetric_grid(double half_width, std::size_t n);

/// Tail criterion for the one-sided transform.
inline constexpr double tail_tolerance = 1e-3;

struct SpectrumOptions {
    bool strict_tail = false; ///< throw TailNotDecayed instead of flagging
};

/**
 * S(ω) = Re ∫₀^τmax dτ e^{−iωτ} C(τ) by the trapezoidal rule on the τ-grid,
 * with ω = energy/ħ.
 */
Spectrum incoherent_spectrum(std::span<const double> tau, std::span<const cplx> corr,
    std::span<const double> omega_grid, double hbar, SpectrumOptions opts = {});

Spectrum incoherent_spectrum(const CorrelationSeries& corr, std::span<const double> omega_grid,
    double hbar, SpectrumOptions opts = {});

/// C^sto_ij(τ) = mean(s₁ᵢ(τ)s₂ⱼ(0)) − mean(s₁ᵢ(τ))·mean(s₂ⱼ(0)). Throws
/// InsufficientSamples below 100 samples.
CorrelationSeries stochastic_correlation(const EnsembleResult& result);

std::vector<cplx> stochastic_correlation(const EnsembleResult& result, Spin i, Spin j);

/// Standard error of the sample mean of s₁ᵢ(τ)s₂ⱼ(0) per lag.
std::vector<double> correlation_stderr(const EnsembleResult& result, Spin i, Spin j);

/// π·mean(s₁₊ s₂₋) at the sampling origins.
double coherent_weight(const EnsembleResult& result);

/// ∫ S dω / π over the grid (trapezoid, ω = energy/ħ).
double integrated_power(const Spectrum& spec, double hbar);

/// Root-mean-square difference of two spectra after max-normalization.
double normalized_rms(const Spectrum& a, const Spectrum& b);

/// Grid indices of strict local maxima above `floor` (relative to the max).
std::vector<std::size_t> find_peaks(const Spectrum& spec, double floor = 0.02);

} // namespace sbloch

#endif
