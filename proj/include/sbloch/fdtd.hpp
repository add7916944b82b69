#ifndef SBLOCH_FDTD_HPP
#define SBLOCH_FDTD_HPP

#include <cstdint>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include <sbloch/ensemble.hpp>
#include <sbloch/spectrum.hpp>

namespace sbloch {

/**
 * Which walker components feed the source current.
 *   ordered: s₋ = s₂₋, s₊ = s₁₊, so E⁻(τ)E⁺(0) samples s₁₊(τ)s₂₋(0) like the
 *            at-atom estimator.
 *   reversed: s₋ = s₁₋, s₊ = s₂₊, which samples s₂₊(τ)s₁₋(0) and so carries
 *            the transposed cumulant (reversed operator order at τ = 0).
 */
enum class SourcePairing { ordered, reversed };

std::string_view pairing_name(SourcePairing p);
SourcePairing parse_pairing(std::string_view name); ///< throws ConfigError

/**
 * 1D Yee grid in units with c = 1: E_y on integer cells, H_z on half cells.
 * Lengths are in c·(time unit); with natural units the time unit is T₁.
 */
struct FdtdConfig {
    std::size_t n_x = 120;
    double dx = 0.0;        ///< 0 selects 24 cells per carrier wavelength
    double courant = 0.99;  ///< upper bound on cΔt/Δx
    std::vector<double> eps; ///< relative permittivity per cell, empty = vacuum
    double mu = -1.0;       ///< source centre in cells, < 0 selects the grid centre
    double sigma = 3.0;     ///< source width in cells
    double omega_c = 100.0; ///< carrier, rad per time unit
    std::size_t probe = 0;  ///< probe cell, 0 selects 3/4 of the grid
    SourcePairing pairing = SourcePairing::ordered;

    double cell_size() const;
    double source_center() const;
    std::size_t probe_cell() const;
    double permittivity(std::size_t i) const;

    /// Throws CourantViolation for courant > 1 and ConfigError for fewer than
    /// 20 cells per carrier wavelength or out-of-grid positions.
    void validate() const;

    bool operator==(const FdtdConfig&) const = default;
};

/// Field state of one complex branch.
struct FdtdState {
    std::vector<cplx> e; ///< E_y at cells 0..n_x-1
    std::vector<cplx> h; ///< H_z at half cells 1/2..n_x-3/2
    std::uint64_t step = 0;

    explicit FdtdState(std::size_t n_x = 0) : e(n_x), h(n_x > 0 ? n_x - 1 : 0) {}
};

/**
 * One leapfrog step:
 *   H^{n+½}_{i+½} = H^{n−½}_{i+½} − Δt/Δx (E^n_{i+1} − E^n_i)
 *   E^{n+1}_i = E^n_i − Δt/(εΔx) (H_{i+½} − H_{i−½}) − Δt/ε J^{n+½}_i
 * followed by first-order Mur on both ends. j_half may be empty (no source).
 */
void fdtd_step(FdtdState& state, const FdtdConfig& cfg, double dt,
    std::span<const cplx> j_half);

/// Unit-integral Gaussian G(x) on the cell centres.
std::vector<double> source_profile(const FdtdConfig& cfg);

/// J^±(x, t) = G(x) e^{±iω_c t} s_∓.
struct SourceCurrent {
    std::vector<cplx> plus;
    std::vector<cplx> minus;
};

SourceCurrent source_current(std::span<const double> profile, double t, cplx s_minus,
    cplx s_plus, double omega_c);

/// Time stepping shared by every realization of a run.
struct FdtdPlan {
    std::size_t substeps = 1;     ///< FDTD steps per SDE step
    double dt = 0.0;              ///< FDTD step
    double sde_dt = 0.0;
    std::size_t warmup_samples = 0; ///< SDE steps discarded at the probe
    std::size_t record_samples = 0; ///< recorded probe samples

    std::size_t trajectory_steps() const { return warmup_samples + record_samples - 1; }
};

/// Warm-up 2× source-to-probe travel time plus 10·T₁; record τ_max.
FdtdPlan plan_realization(const FdtdConfig& cfg, double sde_dt, double t1, double tau_max);

struct FieldRecord {
    std::uint64_t realization = 0;
    double dt = 0.0; ///< sample spacing (the SDE step)
    std::vector<cplx> e_plus;
    std::vector<cplx> e_minus;
};

/// Drives J⁺ with s₋ and J⁻ with s₊, taken from the trajectory per cfg.pairing.
FieldRecord run_realization(const Trajectory& traj, const FdtdConfig& cfg, const FdtdPlan& plan);

/// Accumulated field moments over realizations (single origin each).
struct FieldAccumulator {
    double dt = 0.0;
    std::size_t count = 0;
    std::vector<cplx> prod_sum;  ///< Σ E⁻(τ) E⁺(0)
    std::vector<cplx> minus_sum; ///< Σ E⁻(τ)
    cplx plus_sum = 0.0;         ///< Σ E⁺(0)

    void add(const FieldRecord& rec);
    void merge(const FieldAccumulator& other);
};

/// mean(E⁻(τ)E⁺(0)) − mean(E⁻(τ))·mean(E⁺(0)), demodulated by e^{iω_cτ}.
std::vector<cplx> field_correlation(const FieldAccumulator& acc, double omega_c);

/**
 * Propagated-field spectrum on an energy grid measured from the carrier
 * line. Throws InsufficientSamples below 100 realizations.
 */
Spectrum fdtd_spectrum(const FieldAccumulator& acc, std::span<const double> omega_grid,
    double hbar, double omega_c);

Spectrum fdtd_spectrum(std::span<const FieldRecord> records, std::span<const double> omega_grid,
    double hbar, double omega_c);

struct FdtdEnsembleResult {
    FdtdPlan plan;
    FieldAccumulator field; ///< propagated-field moments at the probe
    EnsembleResult atom;    ///< at-atom moments of the same walkers and window
};

/**
 * One realization per walker of `ens` (n_walkers realizations). Walkers are
 * processed in fixed blocks merged in order, so the result does not depend
 * on the worker count.
 */
FdtdEnsembleResult run_fdtd_ensemble(const SdeModel& model, const SystemParams& params,
    const EnsembleConfig& ens, const FdtdConfig& cfg, unsigned workers = 1);

/// Tabular dump: t, Re E⁺, Im E⁺, Re E⁻, Im E⁻.
void write_field_record(std::ostream& os, const FieldRecord& rec);

} // namespace sbloch

#endif
