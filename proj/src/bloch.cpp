#include <sbloch/bloch.hpp>

#include <string>

#include <sbloch/errors.hpp>
#include <sbloch/linalg.hpp>
#include <sbloch/propagator.hpp>

namespace sbloch {

ProjectionOperators build_projectors()
{
    using namespace basis;
    ProjectionOperators p;
    const Vec4 one = vec(identity());
    p.p_tl = Mat4::Identity() - 0.5 * one * one.adjoint();
    p.p_t = Mat4::Identity() - p.p_tl;

    constexpr Spin spins[] = {Spin::minus, Spin::plus, Spin::z};
    for (Spin s : spins) {
        p.f.row(index(s)) = superket(s).adjoint();
    }
    // The rows of f are mutually orthogonal, so F⁺ = F† (F F†)⁻¹ reduces to
    // scaling each column of F† by 1/‖row‖²; ‖σ_z⟫‖² = 2.
    for (Spin s : spins) {
        p.f_pinv.col(index(s)) = superket(s) / superket(s).squaredNorm();
    }
    return p;
}

Vec3 DriftModel::stationary_mean() const { return -a.partialPivLu().solve(b); }

double spectral_abscissa(const Mat3& a)
{
    Eigen::ComplexEigenSolver<Mat3> es(a, false);
    return es.eigenvalues().real().maxCoeff();
}

DriftModel drift_matrix(const Liouvillian& liouv)
{
    static const ProjectionOperators proj = build_projectors();
    const Mat4 ldag = liouv.matrix.adjoint();
    const Vec4 one = basis::vec(basis::identity());

    DriftModel d;
    d.a = proj.f * proj.p_tl * ldag * proj.p_tl * proj.f_pinv;
    d.b = (one.adjoint() * proj.p_t * ldag * proj.p_tl * proj.f_pinv).transpose();

    const double abscissa = spectral_abscissa(d.a);
    if (!(abscissa < -1e-12)) {
        throw NotHurwitz("drift matrix has an eigenvalue with Re = "
            + std::to_string(abscissa) + " (lifetimes must be finite)");
    }
    return d;
}

std::vector<Vec3> bloch_mean_evolution(const DriftModel& drift, const Vec3& u0,
    std::span<const double> t_grid)
{
    check_time_grid(t_grid);
    const Vec3 fixed = drift.stationary_mean();
    Vec3 w = u0 - fixed;
    StepPropagator<3> prop(drift.a);

    std::vector<Vec3> out(t_grid.size());
    out[0] = u0;
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        w = prop(t_grid[k] - t_grid[k - 1]) * w;
        out[k] = w + fixed;
    }
    return out;
}

CorrelationSeries greens_correlation(const DriftModel& drift, const Mat3& m,
    std::span<const double> tau_grid)
{
    check_time_grid(tau_grid);
    StepPropagator<3> prop(drift.a);

    CorrelationSeries out;
    out.method = Method::grn;
    out.tau.assign(tau_grid.begin(), tau_grid.end());
    out.values.resize(tau_grid.size());
    Mat3 c = m;
    out.values[0] = c;
    for (std::size_t k = 1; k < tau_grid.size(); ++k) {
        c = prop(tau_grid[k] - tau_grid[k - 1]) * c;
        out.values[k] = c;
    }
    return out;
}

} // namespace sbloch
