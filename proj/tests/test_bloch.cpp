#include <doctest.h>

#include <random>

#include <sbloch/bloch.hpp>
#include <sbloch/errors.hpp>
#include <sbloch/linalg.hpp>

#include "oracles.hpp"

using namespace sbloch;

TEST_CASE("projector identities")
{
    const ProjectionOperators p = build_projectors();
    CHECK(max_abs(p.p_tl * p.p_tl - p.p_tl) < 1e-15);
    CHECK(max_abs(p.p_t * p.p_t - p.p_t) < 1e-15);
    CHECK(max_abs(p.p_tl + p.p_t - Mat4::Identity()) == 0.0);
    CHECK(max_abs(p.p_tl * p.p_t) < 1e-15);
    CHECK(max_abs(p.p_tl - p.p_tl.adjoint()) == 0.0);

    // Pseudospin superkets are traceless so P_tl leaves them alone.
    for (Spin s : {Spin::minus, Spin::plus, Spin::z}) {
        const Vec4 k = basis::superket(s);
        CHECK(max_abs(p.p_tl * k - k) < 1e-15);
    }
    CHECK(max_abs(p.p_tl * basis::vec(basis::identity())) < 1e-15);

    CHECK(max_abs(p.f * p.f_pinv - Mat3::Identity()) < 1e-15);
    // Moore-Penrose through the normal equations: F⁺ = F†(FF†)⁻¹.
    const Mat43 ref = p.f.adjoint() * (p.f * p.f.adjoint()).inverse();
    CHECK(max_abs(p.f_pinv - ref) < 1e-15);
    CHECK(max_abs(p.f_pinv * p.f - p.p_tl) < 1e-15);
}

TEST_CASE("drift matrix and inhomogeneity")
{
    std::mt19937_64 rng(17);
    for (int k = 0; k < 30; ++k) {
        const SystemParams p = oracle::random_params(rng);
        const DriftModel d = drift_matrix(build_liouvillian(p));
        CHECK(max_abs(d.a - oracle::explicit_drift(p)) < 1e-15);
        CHECK(std::abs(d.b(0)) < 1e-16);
        CHECK(std::abs(d.b(1)) < 1e-16);
        CHECK(std::abs(d.b(2) + p.gamma1()) < 1e-16);
        CHECK(spectral_abscissa(d.a) < 0.0);

        // Fixed point of the Bloch equations is the steady-state mean.
        const SteadyState ss = steady_state(build_liouvillian(p));
        CHECK(max_abs(d.stationary_mean() - ss.means) < 1e-12);
    }

    SUBCASE("undriven example")
    {
        const SystemParams p{0.0, 0.0, 400.0, 800.0};
        const DriftModel d = drift_matrix(build_liouvillian(p));
        CHECK(d.a(2, 2).real() == doctest::Approx(-1.0 / 400.0));
        CHECK(d.a(0, 0).real() == doctest::Approx(-0.5 * (1.0 / 400.0 + 2.0 / 800.0)));
        CHECK(spectral_abscissa(d.a) == doctest::Approx(-1.0 / 400.0));
    }
    SUBCASE("non-dissipative system is rejected")
    {
        const double inf = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(drift_matrix(build_liouvillian(SystemParams{30.0, 0.0, inf, inf})),
            NotHurwitz);
    }
}

TEST_CASE("bloch mean evolution")
{
    SUBCASE("inversion relaxes with T1")
    {
        const SystemParams p{0.0, 0.0, 400.0, 800.0};
        const DriftModel d = drift_matrix(build_liouvillian(p));
        const auto grid = uniform_grid(20.0, 101);
        const auto u = bloch_mean_evolution(d, Vec3(0, 0, 1), grid);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            CHECK(std::abs(u[k](2) - (2.0 * std::exp(-grid[k] / p.t1) - 1.0)) < 1e-12);
        }
    }
    SUBCASE("coherence rotates at the detuning")
    {
        const SystemParams p{0.0, 5.0, 400.0, 800.0};
        const DriftModel d = drift_matrix(build_liouvillian(p));
        const auto grid = uniform_grid(10.0, 50);
        const auto u = bloch_mean_evolution(d, Vec3(0.5, 0.5, -1.0), grid);
        const double g = 0.5 * (p.gamma1() + p.gamma2());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const cplx ref = 0.5 * std::exp((-I * p.delta() - g) * grid[k]);
            CHECK(std::abs(u[k](0) - ref) < 1e-12);
            CHECK(std::abs(u[k](1) - std::conj(ref)) < 1e-12);
        }
    }
    SUBCASE("agrees with density propagation")
    {
        const SystemParams p = oracle::reference_params(7.0);
        const Liouvillian l = build_liouvillian(p);
        const DriftModel d = drift_matrix(l);
        const auto grid = uniform_grid(p.t1 / 10.0, 120);
        const auto u = bloch_mean_evolution(d, Vec3(0, 0, -1), grid);
        const auto rho = propagate_density(l, basis::vec(basis::sigma_gg()), grid);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            CHECK(max_abs(u[k] - pseudospin_means(rho[k])) < 1e-12);
        }
    }
}

TEST_CASE("green's function correlation equals quantum regression")
{
    std::mt19937_64 rng(29);
    for (int k = 0; k < 20; ++k) {
        const SystemParams p = oracle::random_params(rng);
        const Liouvillian l = build_liouvillian(p);
        const SteadyState ss = steady_state(l);
        const auto grid = default_tau_grid(p);
        const CorrelationSeries qrt = qrt_correlation(l, ss, grid);
        const CorrelationSeries grn =
            greens_correlation(drift_matrix(l), second_order_cumulant(ss), grid);
        CHECK(grn.method == Method::grn);
        double worst = 0.0;
        for (std::size_t t = 0; t < grid.size(); ++t) {
            worst = std::max(worst, max_abs(grn.values[t] - qrt.values[t]));
        }
        CHECK(worst < 1e-8);
    }
}
