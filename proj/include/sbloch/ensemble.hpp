#ifndef SBLOCH_ENSEMBLE_HPP
#define SBLOCH_ENSEMBLE_HPP

#include <cstdint>
#include <ostream>
#include <vector>

#include <sbloch/noise.hpp>
#include <sbloch/rng.hpp>

namespace sbloch {

struct EnsembleConfig {
    std::size_t n_walkers = 4000;
    double dt = 0.0;       ///< time step, same unit as T₁
    double burn_in = 0.0;  ///< discarded relaxation time
    double tau_max = 0.0;  ///< longest correlation lag
    std::uint64_t seed = 0;
    std::size_t origins_per_walker = 1;
    double origin_spacing = 0.0; ///< 0 selects 10·T₁

    /// dt = T₁/200, burn-in 10·T₁, τ_max = 15·T₁, one origin.
    static EnsembleConfig defaults(const SystemParams& params, std::size_t n_walkers,
        std::uint64_t seed);

    /// Throws ConfigError for dt <= 0, burn-in < 10·T₁, N < 1, bad spacing.
    void validate(const SystemParams& params) const;

    std::size_t lag_count() const;
    std::size_t burn_in_steps() const;
    std::size_t spacing_steps(const SystemParams& params) const;

    bool operator==(const EnsembleConfig&) const = default;
};

/// Everything a walker step needs, precomputed once per parameter set.
struct SdeModel {
    DriftModel drift;
    NoiseModel noise;
    double dt = 0.0;
    Mat3 propagator; ///< e^{AΔt}
    Vec3 b_dt;       ///< ∫₀^Δt e^{As} ds · b, equal to bΔt to first order
    Mat3 b1_sqrt_dt; ///< √Δt B₁
    Mat3 b2_sqrt_dt; ///< √Δt B₂

    static SdeModel build(const DriftModel& drift, const NoiseModel& noise, double dt);

    /// Full chain L → ρ_ss → M → A, b → D → B₁, B₂.
    static SdeModel from_params(const SystemParams& params, double dt);
};

/// A contiguous range of walkers [first_walker, first_walker + size).
struct WalkerEnsemble {
    std::uint64_t first_walker = 0;
    std::uint64_t step = 0;
    std::vector<Vec3> s1;
    std::vector<Vec3> s2;

    std::size_t size() const { return s1.size(); }

    /// All walkers at the deterministic fixed point −A⁻¹b.
    static WalkerEnsemble at_fixed_point(const DriftModel& drift, std::size_t n,
        std::uint64_t first_walker = 0);
};

/**
 * Exponential Euler-Maruyama step for every walker:
 *   s_k ← e^{AΔt}s_k + b_dt + √Δt B_k ξ,
 * with one ξ per walker per step shared by s₁ and s₂.
 */
void step_ensemble(WalkerEnsemble& ens, const SdeModel& model, const NormalStream& rng);

/// Per-component sums used for ensemble means and standard errors.
struct ComponentStats {
    std::size_t count = 0;
    Vec3 sum = Vec3::Zero();
    RVec3 sum_sq_re = RVec3::Zero();
    RVec3 sum_sq_im = RVec3::Zero();

    void add(const Vec3& x);
    void merge(const ComponentStats& other);
    Vec3 mean() const;
    /// Standard error of the mean, real and imaginary parts separately.
    RVec3 stderr_re() const;
    RVec3 stderr_im() const;
};

/**
 * Accumulated two-time moments of a walker ensemble. For lag index l the
 * sums run over every walker and sampling origin t₀:
 *   prod_sum[l] = Σ s₁(t₀+lΔt) s₂(t₀)ᵀ,   s1_sum[l] = Σ s₁(t₀+lΔt).
 */
struct EnsembleResult {
    double dt = 0.0;
    std::size_t samples = 0; ///< walkers × origins
    std::vector<Mat3> prod_sum;
    std::vector<Eigen::Matrix3d> prod_sq_sum; ///< Σ |s₁ᵢ s₂ⱼ|²
    std::vector<Vec3> s1_sum;
    Vec3 s2_sum = Vec3::Zero();
    ComponentStats s1_origin; ///< s₁ at the sampling origins
    ComponentStats s2_origin; ///< s₂ at the sampling origins

    void resize(std::size_t lags);
    void merge(const EnsembleResult& other);
    std::vector<double> tau_grid() const;
};

/// Runs walkers [first, first + n) on the calling thread.
EnsembleResult run_walkers(const SdeModel& model, const SystemParams& params,
    const EnsembleConfig& config, std::uint64_t first, std::size_t n);

/**
 * Runs the full ensemble. Walkers are grouped in fixed blocks whose partial
 * sums are merged in block order, so the result is bit-identical for any
 * worker count.
 */
EnsembleResult run_ensemble(const SdeModel& model, const SystemParams& params,
    const EnsembleConfig& config, unsigned workers = 1);

EnsembleResult run_ensemble(const SystemParams& params, const EnsembleConfig& config,
    unsigned workers = 1);

/// s₁, s₂ of one walker on every step after burn-in.
struct Trajectory {
    std::uint64_t walker = 0;
    double dt = 0.0;
    std::vector<Vec3> s1;
    std::vector<Vec3> s2;
};

/// Walker trajectory with n_steps + 1 samples, starting after the burn-in.
Trajectory simulate_walker(const SdeModel& model, const EnsembleConfig& config,
    std::uint64_t walker, std::size_t n_steps);

/// Adds the two-time moments of one trajectory with origin index `origin`
/// (lags samples) to `acc`, sized on first use.
void accumulate_trajectory(EnsembleResult& acc, const Trajectory& traj, std::size_t origin,
    std::size_t lags);

/// Tabular dump: walker, step, then Re/Im of s₁(−,+,z) and s₂(−,+,z).
void write_trajectory(std::ostream& os, const Trajectory& traj);

} // namespace sbloch

#endif
