#include <doctest.h>

#include <random>

#include <Eigen/SVD>

#include <sbloch/ensemble.hpp>
#include <sbloch/errors.hpp>
#include <sbloch/linalg.hpp>
#include <sbloch/spectrum.hpp>

#include "oracles.hpp"

using namespace sbloch;

namespace {

Mat3 random_matrix(std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            m(r, c) = cplx(n(rng), n(rng));
        }
    }
    return m;
}

NoiseModel noise_for(const SystemParams& p)
{
    const Liouvillian l = build_liouvillian(p);
    return svd_factorize(
        noise_cross_covariance(drift_matrix(l), second_order_cumulant(steady_state(l))));
}

} // namespace

TEST_CASE("jacobi svd")
{
    SUBCASE("random complex matrices against Eigen")
    {
        std::mt19937_64 rng(101);
        for (int k = 0; k < 100; ++k) {
            const Mat3 d = random_matrix(rng, std::pow(10.0, (k % 7) - 3));
            const Svd3 s = jacobi_svd(d);
            const Eigen::JacobiSVD<Mat3> ref(d);
            const double scale = ref.singularValues()(0);
            CHECK((s.sigma - ref.singularValues()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
            CHECK(s.sigma(0) >= s.sigma(1));
            CHECK(s.sigma(1) >= s.sigma(2));
            CHECK(s.sigma(2) >= 0.0);
            CHECK(max_abs(s.u * s.sigma.cast<cplx>().asDiagonal() * s.v.adjoint() - d)
                <= 1e-12 * scale);
            CHECK(max_abs(s.u.adjoint() * s.u - Mat3::Identity()) < 1e-12);
            CHECK(max_abs(s.v.adjoint() * s.v - Mat3::Identity()) < 1e-12);

            const NoiseModel n = svd_factorize(d);
            CHECK(max_abs(n.b1 * n.b2.transpose() - d) <= 1e-12 * scale);
        }
    }
    SUBCASE("diagonal input")
    {
        const Mat3 d = Vec3(4.0, 1.0, 0.0).asDiagonal();
        const NoiseModel n = svd_factorize(d);
        CHECK(n.svd.sigma(0) == doctest::Approx(4.0).epsilon(1e-15));
        CHECK(n.svd.sigma(1) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(n.svd.sigma(2) == 0.0);
        CHECK(max_abs(n.b1 * n.b2.transpose() - d) < 1e-14);
    }
    SUBCASE("unsorted and rank deficient")
    {
        const Mat3 d = Vec3(0.0, 2.0, 9.0).asDiagonal();
        const Svd3 s = jacobi_svd(d);
        CHECK(s.sigma(0) == doctest::Approx(9.0));
        CHECK(s.sigma(1) == doctest::Approx(2.0));
        CHECK(max_abs(s.u.adjoint() * s.u - Mat3::Identity()) < 1e-14);
    }
    SUBCASE("zero matrix")
    {
        const NoiseModel n = svd_factorize(Mat3::Zero());
        CHECK(max_abs(n.b1 * n.b2.transpose()) == 0.0);
        CHECK(max_abs(n.b1) == 0.0);
    }
    SUBCASE("non-finite input")
    {
        Mat3 d = Mat3::Identity();
        d(1, 2) = cplx(std::nan(""), 0.0);
        CHECK_THROWS_AS(jacobi_svd(d), SvdFailed);
        d(1, 2) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(jacobi_svd(d), SvdFailed);
    }
}

TEST_CASE("noise cross-covariance")
{
    SUBCASE("zero cumulant")
    {
        const DriftModel d = drift_matrix(build_liouvillian(oracle::reference_params()));
        CHECK(max_abs(noise_cross_covariance(d, Mat3::Zero())) == 0.0);
    }
    SUBCASE("Lyapunov and factorization residuals")
    {
        std::mt19937_64 rng(7);
        for (int k = 0; k < 30; ++k) {
            const SystemParams p = oracle::random_params(rng);
            const Liouvillian l = build_liouvillian(p);
            const Mat3 a = oracle::explicit_drift(p);
            const Mat3 m = second_order_cumulant(steady_state(l));
            const Mat3 d = noise_cross_covariance(drift_matrix(l), m);
            CHECK(max_abs(a * m + m * a.transpose() + d) < 1e-14);
            const Mat2 rho = basis::devec(steady_state(l).rho);
            CHECK(max_abs(oracle::einstein_diffusion(p, rho) - d) < 1e-14);
            const NoiseModel n = svd_factorize(d);
            CHECK(max_abs(n.b1 * n.b2.transpose() - d) < 1e-12 * std::max(1.0, max_abs(d)));
            const Mat3 root = n.svd.sigma.cwiseSqrt().cast<cplx>().asDiagonal();
            CHECK(max_abs(n.b1 - n.svd.u * root) < 1e-15);
            CHECK(max_abs(n.b2 - n.svd.v.conjugate() * root) < 1e-15);
        }
    }
    SUBCASE("non-symmetric at the reference point")
    {
        const SystemParams p = oracle::reference_params();
        const Mat3 a = oracle::explicit_drift(p);
        const Mat3 m = second_order_cumulant(steady_state(build_liouvillian(p)));
        const Mat3 d = -(a * m + m * a.transpose());
        CHECK(max_abs(d - d.transpose()) > 1e-6);
        CHECK(max_abs(noise_cross_covariance(drift_matrix(build_liouvillian(p)), m) - d) < 1e-15);
    }
    SUBCASE("undriven noise is rank deficient")
    {
        const NoiseModel n = noise_for(SystemParams{0.0, 0.0, 400.0, 800.0});
        CHECK(max_abs(n.b1 * n.b2.transpose() - n.d) < 1e-15);
        int rank = 0;
        for (int k = 0; k < 3; ++k) {
            rank += n.svd.sigma(k) > 1e-14 * n.svd.sigma(0) ? 1 : 0;
        }
        CHECK(rank < 3);
    }
}

TEST_CASE("philox known answers")
{
    // Random123 reference vectors for philox4x32-10.
    using P = Philox4x32;
    CHECK(P::generate({0, 0, 0, 0}, {0, 0})
        == P::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(P::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
              {0xffffffffu, 0xffffffffu})
        == P::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(P::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
              {0xa4093822u, 0x299f31d0u})
        == P::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal stream")
{
    const NormalStream a(42);
    const NormalStream b(42);
    const NormalStream c(43);
    CHECK(a.xi(7, 1000) == b.xi(7, 1000));
    CHECK(a.xi(7, 1000) != c.xi(7, 1000));
    CHECK(a.xi(7, 1000) != a.xi(8, 1000));
    CHECK(a.xi(7, 1000) != a.xi(7, 1001));

    // Moments over 2e5 draws.
    const std::size_t n = 200000;
    double sum = 0.0;
    double sum_sq = 0.0;
    double cross = 0.0;
    for (std::size_t k = 0; k < n / 4; ++k) {
        const auto v = a.normals4(k % 97, k);
        for (double x : v) {
            sum += x;
            sum_sq += x * x;
        }
        cross += v[0] * v[1] + v[2] * v[3];
    }
    CHECK(std::abs(sum / n) < 5.0 / std::sqrt(double(n)));
    CHECK(std::abs(sum_sq / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(cross / (n / 2)) < 5.0 / std::sqrt(n / 2.0));
}

TEST_CASE("noiseless ensemble follows the Bloch equations")
{
    const SystemParams p = oracle::reference_params(12.0);
    const DriftModel drift = drift_matrix(build_liouvillian(p));
    const double dt = p.t1 / 200.0;
    const SdeModel model = SdeModel::build(drift, NoiseModel::zero(), dt);
    const NormalStream rng(1);

    SUBCASE("from an arbitrary start")
    {
        WalkerEnsemble ens = WalkerEnsemble::at_fixed_point(drift, 3);
        const Vec3 u0(cplx(0.2, 0.1), cplx(0.2, -0.1), -0.3);
        for (std::size_t w = 0; w < 3; ++w) {
            ens.s1[w] = u0;
            ens.s2[w] = u0;
        }
        const auto grid = uniform_grid(dt, 2001);
        const auto ref = bloch_mean_evolution(drift, u0, grid);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            Vec3 mean = Vec3::Zero();
            for (const Vec3& s : ens.s1) {
                mean += s;
            }
            mean /= 3.0;
            CHECK(max_abs(mean - ref[k]) < 1e-10);
            step_ensemble(ens, model, rng);
        }
    }
    SUBCASE("fixed point is stationary")
    {
        WalkerEnsemble ens = WalkerEnsemble::at_fixed_point(drift, 1);
        for (int k = 0; k < 5000; ++k) {
            step_ensemble(ens, model, rng);
        }
        CHECK(max_abs(ens.s1[0] - drift.stationary_mean()) < 1e-12);
        CHECK(max_abs(ens.s2[0] - drift.stationary_mean()) < 1e-12);
    }
    SUBCASE("no forcing and no noise is a pure propagator map")
    {
        DriftModel free = drift;
        free.b.setZero();
        const SdeModel m0 = SdeModel::build(free, NoiseModel::zero(), dt);
        WalkerEnsemble ens = WalkerEnsemble::at_fixed_point(free, 1);
        ens.s1[0] = Vec3(1.0, 0.5, 0.0);
        const Vec3 start = ens.s1[0];
        step_ensemble(ens, m0, rng);
        CHECK(max_abs(ens.s1[0] - expm<3>(free.a * dt) * start) < 1e-15);
    }
    SUBCASE("zero-noise run gives vanishing correlations")
    {
        EnsembleConfig cfg = EnsembleConfig::defaults(p, 300, 5);
        cfg.tau_max = p.t1;
        const EnsembleResult r = run_ensemble(model, p, cfg);
        const CorrelationSeries c = stochastic_correlation(r);
        for (const Mat3& v : c.values) {
            CHECK(max_abs(v) < 1e-14);
        }
    }
}

TEST_CASE("shared-noise increments reproduce D")
{
    const SystemParams p = oracle::reference_params(5.0);
    const double dt = p.t1 / 200.0;
    const SdeModel model = SdeModel::from_params(p, dt);
    const NormalStream rng(2024);

    WalkerEnsemble ens = WalkerEnsemble::at_fixed_point(model.drift, 1000);
    Mat3 sum = Mat3::Zero();
    Eigen::Matrix3d sq_re = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d sq_im = Eigen::Matrix3d::Zero();
    std::size_t n = 0;
    for (int step = 0; step < 1000; ++step) {
        const std::vector<Vec3> s1 = ens.s1;
        const std::vector<Vec3> s2 = ens.s2;
        step_ensemble(ens, model, rng);
        for (std::size_t w = 0; w < ens.size(); ++w) {
            const Vec3 e1 = ens.s1[w] - model.propagator * s1[w] - model.b_dt;
            const Vec3 e2 = ens.s2[w] - model.propagator * s2[w] - model.b_dt;
            const Mat3 x = e1 * e2.transpose() / dt;
            sum += x;
            sq_re += x.real().cwiseAbs2();
            sq_im += x.imag().cwiseAbs2();
            ++n;
        }
    }
    CHECK(n >= 1000000);
    const Mat3 mean = sum / double(n);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double var_re = sq_re(i, j) / n - std::pow(mean(i, j).real(), 2);
            const double var_im = sq_im(i, j) / n - std::pow(mean(i, j).imag(), 2);
            const double d_re = std::abs(mean(i, j).real() - model.noise.d(i, j).real());
            const double d_im = std::abs(mean(i, j).imag() - model.noise.d(i, j).imag());
            CHECK(d_re <= 3.0 * std::sqrt(var_re / n) + 1e-15);
            CHECK(d_im <= 3.0 * std::sqrt(var_im / n) + 1e-15);
        }
    }
}

TEST_CASE("ensemble statistics")
{
    const SystemParams p = oracle::reference_params(10.0);
    EnsembleConfig cfg = EnsembleConfig::defaults(p, 2000, 99);
    cfg.tau_max = 0.0;
    const EnsembleResult r = run_ensemble(p, cfg);
    REQUIRE(r.samples == 2000);

    SUBCASE("stationary mean within five standard errors")
    {
        const Vec3 target = drift_matrix(build_liouvillian(p)).stationary_mean();
        for (const ComponentStats* s : {&r.s1_origin, &r.s2_origin}) {
            const Vec3 mean = s->mean();
            const RVec3 se_re = s->stderr_re();
            const RVec3 se_im = s->stderr_im();
            for (int k = 0; k < 3; ++k) {
                CHECK(std::abs(mean(k).real() - target(k).real()) <= 5.0 * se_re(k) + 1e-15);
                CHECK(std::abs(mean(k).imag() - target(k).imag()) <= 5.0 * se_im(k) + 1e-15);
            }
        }
    }
    SUBCASE("zero-lag correlation recovers the cumulant")
    {
        const Mat3 m = second_order_cumulant(steady_state(build_liouvillian(p)));
        const CorrelationSeries c = stochastic_correlation(r);
        for (Spin i : {Spin::minus, Spin::plus, Spin::z}) {
            for (Spin j : {Spin::minus, Spin::plus, Spin::z}) {
                const double se = correlation_stderr(r, i, j)[0];
                CHECK(std::abs(c.component(i, j)[0] - m(index(i), index(j)))
                    <= 5.0 * se);
            }
        }
    }
}

TEST_CASE("ensemble results are independent of partitioning")
{
    const SystemParams p = oracle::reference_params(-10.0);
    EnsembleConfig cfg = EnsembleConfig::defaults(p, 700, 3);
    cfg.tau_max = 2.0 * p.t1;
    cfg.origins_per_walker = 2;
    const SdeModel model = SdeModel::from_params(p, cfg.dt);

    const EnsembleResult one = run_ensemble(model, p, cfg, 1);
    for (unsigned workers : {2u, 3u, 8u}) {
        const EnsembleResult many = run_ensemble(model, p, cfg, workers);
        CHECK(many.samples == one.samples);
        bool identical = many.s2_sum == one.s2_sum;
        for (std::size_t l = 0; l < one.prod_sum.size(); ++l) {
            identical = identical && many.prod_sum[l] == one.prod_sum[l]
                && many.s1_sum[l] == one.s1_sum[l] && many.prod_sq_sum[l] == one.prod_sq_sum[l];
        }
        CHECK(identical);
    }

    // Same walkers driven one at a time through the trajectory route.
    EnsembleResult manual;
    const std::size_t lags = cfg.lag_count();
    const std::size_t spacing = cfg.spacing_steps(p);
    for (std::uint64_t w = 0; w < 20; ++w) {
        const Trajectory t = simulate_walker(model, cfg, w, spacing + lags - 1);
        accumulate_trajectory(manual, t, 0, lags);
        accumulate_trajectory(manual, t, spacing, lags);
    }
    const EnsembleResult direct = run_walkers(model, p, cfg, 0, 20);
    CHECK(manual.samples == direct.samples);
    double worst = 0.0;
    for (std::size_t l = 0; l < lags; ++l) {
        worst = std::max(worst, max_abs(manual.prod_sum[l] - direct.prod_sum[l]));
    }
    CHECK(worst < 1e-12);

    SUBCASE("same seed reproduces, other seed differs")
    {
        EnsembleConfig other = cfg;
        other.seed = 4;
        other.n_walkers = 100;
        EnsembleConfig same = cfg;
        same.n_walkers = 100;
        const auto a = run_ensemble(model, p, same).prod_sum;
        const auto b = run_ensemble(model, p, same).prod_sum;
        const auto c = run_ensemble(model, p, other).prod_sum;
        CHECK(a == b);
        CHECK(a != c);
    }
}

TEST_CASE("ensemble configuration")
{
    const SystemParams p = oracle::reference_params();
    const EnsembleConfig d = EnsembleConfig::defaults(p, 10, 1);
    CHECK(d.dt == doctest::Approx(2.0));
    CHECK(d.burn_in_steps() == 2000);
    CHECK(d.lag_count() == 3001);
    CHECK_NOTHROW(d.validate(p));

    EnsembleConfig bad = d;
    bad.dt = 0.0;
    CHECK_THROWS_AS(bad.validate(p), ConfigError);
    bad = d;
    bad.burn_in = 5.0 * p.t1;
    CHECK_THROWS_AS(bad.validate(p), ConfigError);
    bad = d;
    bad.n_walkers = 0;
    CHECK_THROWS_AS(bad.validate(p), ConfigError);
    bad = d;
    bad.origin_spacing = p.t1;
    CHECK_THROWS_AS(bad.validate(p), ConfigError);
}

TEST_CASE("trajectory dump")
{
    const SystemParams p = oracle::reference_params();
    const EnsembleConfig cfg = EnsembleConfig::defaults(p, 1, 1);
    const Trajectory t = simulate_walker(SdeModel::from_params(p, cfg.dt), cfg, 4, 2);
    std::ostringstream os;
    write_trajectory(os, t);
    const std::string s = os.str();
    CHECK(std::count(s.begin(), s.end(), '\n') == 3);
    std::istringstream first(s.substr(0, s.find('\n')));
    std::vector<double> cols;
    for (double x; first >> x;) {
        cols.push_back(x);
    }
    CHECK(cols.size() == 14);
    CHECK(cols[0] == 4.0);
    CHECK(cols[1] == 0.0);
    CHECK(cols[2] == doctest::Approx(t.s1[0](0).real()));
}
