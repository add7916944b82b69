#ifndef SBLOCH_LIOUVILLE_HPP
#define SBLOCH_LIOUVILLE_HPP

#include <span>
#include <string_view>
#include <vector>

#include <sbloch/types.hpp>

namespace sbloch {

/**
 * Physical inputs of the driven two-level system.
 *
 * Energies are in μeV and times in ps by default. Setting hbar = 1 turns
 * every energy into an angular frequency in the inverse time unit, which is
 * how the natural-unit (T₁ = 1) runs are expressed.
 */
struct SystemParams {
    double rabi_energy = 0.0;     ///< ħΩ_R
    double detuning_energy = 0.0; ///< ħΔ, Δ = ω₀ − ω_L
    double t1 = 1.0;              ///< relaxation time
    double t2 = 2.0;              ///< pure-dephasing time
    double hbar = hbar_ueV_ps;

    double gamma1() const { return 1.0 / t1; }
    double gamma2() const { return 2.0 / t2; }
    double omega_r() const { return rabi_energy / hbar; }
    double delta() const { return detuning_energy / hbar; }

    /// Throws ConfigError unless t1 > 0, t2 > 0, rabi_energy >= 0, hbar > 0.
    void validate() const;

    /// Parameters in units where ħ = 1 and energies are frequencies.
    static SystemParams natural(double omega_r, double delta, double t1, double t2);

    bool operator==(const SystemParams&) const = default;
};

/// Pseudospin operators and row-major vectorization vec(|a⟩⟨b|) = |a⟩⊗|b⟩*,
/// giving the Liouville basis order (ee, eg, ge, gg).
namespace basis {

Mat2 sigma_minus();
Mat2 sigma_plus();
Mat2 sigma_z();
Mat2 sigma_gg();
Mat2 identity();

/// 2×2 operator for a pseudospin index.
Mat2 sigma(Spin s);

Vec4 vec(const Mat2& op);
Mat2 devec(const Vec4& v);

/// ⟪A|B⟫ = Tr(A†B) = vec(A)† vec(B).
cplx inner(const Vec4& a, const Vec4& b);

Vec4 superket(Spin s);

/// X ⊗ Y for 2×2 factors.
Mat4 kron(const Mat2& x, const Mat2& y);

/// ⟦X, Y⟧ = X⊗Yᵀ − Y⊗Xᵀ
Mat4 supercommutator(const Mat2& x, const Mat2& y);

/// ⟦X, Y⟧₊ = X⊗Yᵀ + Y⊗Xᵀ
Mat4 superanticommutator(const Mat2& x, const Mat2& y);

} // namespace basis

/// H = ½(ħΔ σ_z − ħΩ_R(σ₊ + σ₋)), in the energy unit of params.
Mat2 build_hamiltonian(const SystemParams& params);

struct Liouvillian {
    Mat4 matrix; ///< inverse time units
    SystemParams params;
};

/// Lindblad generator with jump operators √Γ₁ σ₋ and √Γ₂ (𝟙+σ_z)/2.
Liouvillian build_liouvillian(const SystemParams& params);

struct SteadyState {
    Vec4 rho;   ///< vectorized ρ_ss
    Vec3 means; ///< (⟨σ₋⟩, ⟨σ₊⟩, ⟨σ_z⟩)

    Mat2 density_matrix() const;
};

/// Null vector of L normalized to unit trace, by replacing the (ee) row with
/// the trace functional. Throws SingularSystem for degenerate generators.
SteadyState steady_state(const Liouvillian& liouv);

/// Same state from the zero eigenmode of a full eigendecomposition.
SteadyState steady_state_eigen(const Liouvillian& liouv);

/// Means ⟪σᵢ†|ρ⟫ for any supervector.
Vec3 pseudospin_means(const Vec4& rho);

/// M_ij = ⟪(σᵢσⱼ)†|ρ_ss⟫ − ⟪σᵢ†|ρ_ss⟫⟪σⱼ†|ρ_ss⟫.
Mat3 second_order_cumulant(const SteadyState& ss);

enum class Method { sto, qrt, grn };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

/// Two-time correlation matrix on a τ-grid starting at 0.
struct CorrelationSeries {
    std::vector<double> tau;
    std::vector<Mat3> values;
    Method method = Method::qrt;

    std::vector<cplx> component(Spin i, Spin j) const;
};

/// Uniform grid {0, step, ..., (count-1)·step}.
std::vector<double> uniform_grid(double step, std::size_t count);

/// Default correlation grid Δτ = T₁/200 up to 15·T₁.
std::vector<double> default_tau_grid(const SystemParams& params);

/// Throws ConfigError unless the grid starts at 0 and strictly increases.
void check_time_grid(std::span<const double> grid);

/// C^qrt_ij(τ) = ⟪σᵢ†|e^{Lτ}|σⱼρ_ss⟫ − ⟪σᵢ†|ρ_ss⟫⟪σⱼ†|ρ_ss⟫ for all (i, j).
CorrelationSeries qrt_correlation(const Liouvillian& liouv, const SteadyState& ss,
    std::span<const double> tau_grid);

std::vector<cplx> qrt_correlation(const Liouvillian& liouv, const SteadyState& ss,
    Spin i, Spin j, std::span<const double> tau_grid);

/// |ρ(t)⟫ = e^{Lt}|ρ(0)⟫ on the grid.
std::vector<Vec4> propagate_density(const Liouvillian& liouv, const Vec4& rho0,
    std::span<const double> t_grid);

} // namespace sbloch

#endif
