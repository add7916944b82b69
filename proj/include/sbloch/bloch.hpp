#ifndef SBLOCH_BLOCH_HPP
#define SBLOCH_BLOCH_HPP

#include <span>
#include <vector>

#include <sbloch/liouville.hpp>

namespace sbloch {

/// Projectors of Liouville space onto the traceless pseudospin subspace.
struct ProjectionOperators {
    Mat4 p_tl;    ///< 𝟙₄ − ½|𝟙₂⟫⟪𝟙₂|
    Mat4 p_t;     ///< 𝟙₄ − p_tl
    Mat34 f;      ///< rows ⟪σ₋|, ⟪σ₊|, ⟪σ_z|
    Mat43 f_pinv; ///< Moore-Penrose inverse of f
};

ProjectionOperators build_projectors();

/// Bloch-vector dynamics ∂ₜu = Au + b in the (−, +, z) basis.
struct DriftModel {
    Mat3 a;
    Vec3 b;

    /// Fixed point −A⁻¹b.
    Vec3 stationary_mean() const;
};

/// A = F P_tl L† P_tl F⁺ and b = ⟪𝟙₂|P_t L† P_tl F⁺. Throws NotHurwitz
/// when the spectral abscissa of A is not below −1e-12.
DriftModel drift_matrix(const Liouvillian& liouv);

/// Largest real part over the eigenvalues of a.
double spectral_abscissa(const Mat3& a);

/// u(t) = e^{At}(u₀ + A⁻¹b) − A⁻¹b on the grid.
std::vector<Vec3> bloch_mean_evolution(const DriftModel& drift, const Vec3& u0,
    std::span<const double> t_grid);

/// C^grn(τ) = e^{Aτ} M.
CorrelationSeries greens_correlation(const DriftModel& drift, const Mat3& m,
    std::span<const double> tau_grid);

} // namespace sbloch

#endif
