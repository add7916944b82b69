#include <sbloch/ensemble.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <thread>

#include <sbloch/errors.hpp>
#include <sbloch/linalg.hpp>

namespace sbloch {

namespace {

// Walkers per reduction block; fixed so that summation order never depends
// on the number of workers.
constexpr std::size_t block_size = 256;
// Blocks held in memory before they are folded into the total.
constexpr std::size_t blocks_per_batch = 32;

std::size_t steps_for(double duration, double dt)
{
    return static_cast<std::size_t>(std::llround(duration / dt));
}

} // namespace

EnsembleConfig EnsembleConfig::defaults(const SystemParams& params, std::size_t n_walkers,
    std::uint64_t seed)
{
    EnsembleConfig c;
    c.n_walkers = n_walkers;
    c.dt = params.t1 / 200.0;
    c.burn_in = 10.0 * params.t1;
    c.tau_max = 15.0 * params.t1;
    c.seed = seed;
    return c;
}

void EnsembleConfig::validate(const SystemParams& params) const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ConfigError("ensemble.dt must be > 0");
    }
    if (n_walkers < 1) {
        throw ConfigError("ensemble.n_walkers must be >= 1");
    }
    if (!(burn_in >= 10.0 * params.t1 * (1.0 - 1e-12))) {
        throw ConfigError("ensemble.burn_in must be >= 10*T1");
    }
    if (!(tau_max >= 0.0) || !std::isfinite(tau_max)) {
        throw ConfigError("ensemble.tau_max must be finite and >= 0");
    }
    if (origins_per_walker < 1) {
        throw ConfigError("ensemble.origins_per_walker must be >= 1");
    }
    if (origin_spacing != 0.0 && !(origin_spacing >= 10.0 * params.t1 * (1.0 - 1e-12))) {
        throw ConfigError("ensemble.origin_spacing must be >= 10*T1");
    }
}

std::size_t EnsembleConfig::lag_count() const { return steps_for(tau_max, dt) + 1; }

std::size_t EnsembleConfig::burn_in_steps() const { return steps_for(burn_in, dt); }

std::size_t EnsembleConfig::spacing_steps(const SystemParams& params) const
{
    const double spacing = origin_spacing > 0.0 ? origin_spacing : 10.0 * params.t1;
    return std::max<std::size_t>(1, steps_for(spacing, dt));
}

SdeModel SdeModel::build(const DriftModel& drift, const NoiseModel& noise, double dt)
{
    SdeModel m;
    m.drift = drift;
    m.noise = noise;
    m.dt = dt;
    m.propagator = expm<3>(drift.a * dt);
    // Constant forcing integrated exactly over the step, ∫₀^Δt e^{As} ds · b,
    // read off the top-right block of exp([[A, b], [0, 0]]Δt). This keeps the
    // noiseless map on the closed-form Bloch solution and its fixed point at
    // −A⁻¹b for any Δt.
    Mat4 aug = Mat4::Zero();
    aug.topLeftCorner<3, 3>() = drift.a * dt;
    aug.topRightCorner<3, 1>() = drift.b * dt;
    m.b_dt = expm<4>(aug).topRightCorner<3, 1>();
    m.b1_sqrt_dt = noise.b1 * std::sqrt(dt);
    m.b2_sqrt_dt = noise.b2 * std::sqrt(dt);
    return m;
}

SdeModel SdeModel::from_params(const SystemParams& params, double dt)
{
    const Liouvillian l = build_liouvillian(params);
    const SteadyState ss = steady_state(l);
    const Mat3 m = second_order_cumulant(ss);
    const DriftModel drift = drift_matrix(l);
    return build(drift, svd_factorize(noise_cross_covariance(drift, m)), dt);
}

WalkerEnsemble WalkerEnsemble::at_fixed_point(const DriftModel& drift, std::size_t n,
    std::uint64_t first_walker)
{
    const Vec3 fixed = drift.stationary_mean();
    WalkerEnsemble e;
    e.first_walker = first_walker;
    e.s1.assign(n, fixed);
    e.s2.assign(n, fixed);
    return e;
}

void step_ensemble(WalkerEnsemble& ens, const SdeModel& model, const NormalStream& rng)
{
    const std::size_t n = ens.size();
    for (std::size_t w = 0; w < n; ++w) {
        const Vec3 xi = rng.xi(ens.first_walker + w, ens.step).cast<cplx>();
        ens.s1[w] = model.propagator * ens.s1[w] + model.b_dt + model.b1_sqrt_dt * xi;
        ens.s2[w] = model.propagator * ens.s2[w] + model.b_dt + model.b2_sqrt_dt * xi;
    }
    ++ens.step;
}

void ComponentStats::add(const Vec3& x)
{
    ++count;
    sum += x;
    sum_sq_re += x.real().cwiseAbs2();
    sum_sq_im += x.imag().cwiseAbs2();
}

void ComponentStats::merge(const ComponentStats& other)
{
    count += other.count;
    sum += other.sum;
    sum_sq_re += other.sum_sq_re;
    sum_sq_im += other.sum_sq_im;
}

Vec3 ComponentStats::mean() const { return sum / static_cast<double>(count); }

namespace {

RVec3 standard_error(const RVec3& sum, const RVec3& sum_sq, std::size_t count)
{
    const double n = static_cast<double>(count);
    RVec3 out;
    for (int k = 0; k < 3; ++k) {
        const double mu = sum(k) / n;
        const double var = std::max(0.0, sum_sq(k) / n - mu * mu);
        out(k) = std::sqrt(var / n);
    }
    return out;
}

} // namespace

RVec3 ComponentStats::stderr_re() const { return standard_error(sum.real(), sum_sq_re, count); }

RVec3 ComponentStats::stderr_im() const { return standard_error(sum.imag(), sum_sq_im, count); }

void EnsembleResult::resize(std::size_t lags)
{
    prod_sum.assign(lags, Mat3::Zero());
    prod_sq_sum.assign(lags, Eigen::Matrix3d::Zero());
    s1_sum.assign(lags, Vec3::Zero());
}

void EnsembleResult::merge(const EnsembleResult& other)
{
    if (prod_sum.empty()) {
        resize(other.prod_sum.size());
        dt = other.dt;
    }
    samples += other.samples;
    for (std::size_t l = 0; l < prod_sum.size(); ++l) {
        prod_sum[l] += other.prod_sum[l];
        prod_sq_sum[l] += other.prod_sq_sum[l];
        s1_sum[l] += other.s1_sum[l];
    }
    s2_sum += other.s2_sum;
    s1_origin.merge(other.s1_origin);
    s2_origin.merge(other.s2_origin);
}

std::vector<double> EnsembleResult::tau_grid() const { return uniform_grid(dt, prod_sum.size()); }

EnsembleResult run_walkers(const SdeModel& model, const SystemParams& params,
    const EnsembleConfig& config, std::uint64_t first, std::size_t n)
{
    const NormalStream rng(config.seed);
    const std::size_t lags = config.lag_count();
    const std::size_t origins = config.origins_per_walker;
    const std::size_t spacing = config.spacing_steps(params);
    const std::size_t sample_steps = (origins - 1) * spacing + lags - 1;

    EnsembleResult acc;
    acc.dt = config.dt;
    acc.resize(lags);
    acc.samples = n * origins;

    WalkerEnsemble ens = WalkerEnsemble::at_fixed_point(model.drift, n, first);
    for (std::size_t k = 0; k < config.burn_in_steps(); ++k) {
        step_ensemble(ens, model, rng);
    }

    // s₂ at each origin, indexed [origin * n + walker].
    std::vector<Vec3> anchor(origins * n);
    for (std::size_t t = 0; t <= sample_steps; ++t) {
        if (t % spacing == 0 && t / spacing < origins) {
            const std::size_t o = t / spacing;
            for (std::size_t w = 0; w < n; ++w) {
                anchor[o * n + w] = ens.s2[w];
                acc.s2_sum += ens.s2[w];
                acc.s1_origin.add(ens.s1[w]);
                acc.s2_origin.add(ens.s2[w]);
            }
        }
        for (std::size_t o = 0; o < origins; ++o) {
            const std::size_t t0 = o * spacing;
            if (t < t0 || t - t0 >= lags) {
                continue;
            }
            const std::size_t l = t - t0;
            Mat3& prod = acc.prod_sum[l];
            Eigen::Matrix3d& sq = acc.prod_sq_sum[l];
            Vec3& s1sum = acc.s1_sum[l];
            for (std::size_t w = 0; w < n; ++w) {
                const Mat3 p = ens.s1[w] * anchor[o * n + w].transpose();
                prod += p;
                sq += p.cwiseAbs2();
                s1sum += ens.s1[w];
            }
        }
        if (t < sample_steps) {
            step_ensemble(ens, model, rng);
        }
    }
    return acc;
}

EnsembleResult run_ensemble(const SdeModel& model, const SystemParams& params,
    const EnsembleConfig& config, unsigned workers)
{
    config.validate(params);
    const std::size_t n_blocks = (config.n_walkers + block_size - 1) / block_size;
    workers = std::max(1u, workers);

    EnsembleResult total;
    total.dt = config.dt;
    total.resize(config.lag_count());

    std::vector<EnsembleResult> batch;
    for (std::size_t start = 0; start < n_blocks; start += blocks_per_batch) {
        const std::size_t count = std::min(blocks_per_batch, n_blocks - start);
        batch.assign(count, EnsembleResult{});

        auto run_block = [&](std::size_t k) {
            const std::size_t block = start + k;
            const std::size_t first = block * block_size;
            const std::size_t n = std::min(block_size, config.n_walkers - first);
            batch[k] = run_walkers(model, params, config, first, n);
        };

        const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(workers, count));
        if (threads <= 1) {
            for (std::size_t k = 0; k < count; ++k) {
                run_block(k);
            }
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < threads; ++t) {
                pool.emplace_back([&] {
                    for (std::size_t k = next++; k < count; k = next++) {
                        run_block(k);
                    }
                });
            }
        }
        for (const EnsembleResult& r : batch) {
            total.merge(r);
        }
    }
    return total;
}

EnsembleResult run_ensemble(const SystemParams& params, const EnsembleConfig& config,
    unsigned workers)
{
    config.validate(params);
    return run_ensemble(SdeModel::from_params(params, config.dt), params, config, workers);
}

Trajectory simulate_walker(const SdeModel& model, const EnsembleConfig& config,
    std::uint64_t walker, std::size_t n_steps)
{
    const NormalStream rng(config.seed);
    WalkerEnsemble ens = WalkerEnsemble::at_fixed_point(model.drift, 1, walker);
    for (std::size_t k = 0; k < config.burn_in_steps(); ++k) {
        step_ensemble(ens, model, rng);
    }
    Trajectory traj;
    traj.walker = walker;
    traj.dt = config.dt;
    traj.s1.reserve(n_steps + 1);
    traj.s2.reserve(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) {
        traj.s1.push_back(ens.s1[0]);
        traj.s2.push_back(ens.s2[0]);
        if (k < n_steps) {
            step_ensemble(ens, model, rng);
        }
    }
    return traj;
}

void accumulate_trajectory(EnsembleResult& acc, const Trajectory& traj, std::size_t origin,
    std::size_t lags)
{
    if (acc.prod_sum.empty()) {
        acc.dt = traj.dt;
        acc.resize(lags);
    }
    if (origin + lags > traj.s1.size() || acc.prod_sum.size() != lags) {
        throw ConfigError("accumulate_trajectory: window exceeds trajectory");
    }
    const Vec3& anchor = traj.s2[origin];
    for (std::size_t l = 0; l < lags; ++l) {
        const Mat3 p = traj.s1[origin + l] * anchor.transpose();
        acc.prod_sum[l] += p;
        acc.prod_sq_sum[l] += p.cwiseAbs2();
        acc.s1_sum[l] += traj.s1[origin + l];
    }
    acc.s2_sum += anchor;
    acc.s1_origin.add(traj.s1[origin]);
    acc.s2_origin.add(anchor);
    ++acc.samples;
}

void write_trajectory(std::ostream& os, const Trajectory& traj)
{
    const auto prec = os.precision(17);
    for (std::size_t k = 0; k < traj.s1.size(); ++k) {
        os << traj.walker << ' ' << k;
        for (const Vec3* s : {&traj.s1[k], &traj.s2[k]}) {
            for (int c = 0; c < 3; ++c) {
                os << ' ' << (*s)(c).real() << ' ' << (*s)(c).imag();
            }
        }
        os << '\n';
    }
    os.precision(prec);
}

} // namespace sbloch
