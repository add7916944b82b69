#include <sbloch/fdtd.hpp>

#include <algorithm>
#include <atomic>
#include <thread>
#include <cmath>
#include <string>

#include <sbloch/errors.hpp>

namespace sbloch {

double FdtdConfig::cell_size() const
{
    return dx > 0.0 ? dx : 2.0 * pi / (omega_c * 24.0);
}

double FdtdConfig::source_center() const
{
    return mu >= 0.0 ? mu : 0.5 * static_cast<double>(n_x - 1);
}

std::size_t FdtdConfig::probe_cell() const { return probe > 0 ? probe : (3 * n_x) / 4; }

double FdtdConfig::permittivity(std::size_t i) const { return eps.empty() ? 1.0 : eps[i]; }

void FdtdConfig::validate() const
{
    if (n_x < 8) {
        throw ConfigError("fdtd.n_x must be >= 8");
    }
    if (!eps.empty() && eps.size() != n_x) {
        throw ConfigError("fdtd.eps must have n_x entries");
    }
    double eps_min = 1.0;
    double eps_max = 1.0;
    if (!eps.empty()) {
        eps_min = *std::min_element(eps.begin(), eps.end());
        eps_max = *std::max_element(eps.begin(), eps.end());
        if (!(eps_min > 0.0)) {
            throw ConfigError("fdtd.eps must be positive");
        }
    }
    if (!(courant > 0.0) || courant / std::sqrt(eps_min) > 1.0) {
        throw CourantViolation("Courant number c*dt/dx = " + std::to_string(courant)
            + " exceeds 1 in the fastest medium");
    }
    if (!(omega_c > 0.0) || !(cell_size() > 0.0)) {
        throw ConfigError("fdtd.omega_c and fdtd.dx must be positive");
    }
    const double ppw = 2.0 * pi / (omega_c * std::sqrt(eps_max) * cell_size());
    if (ppw < 20.0 * (1.0 - 1e-12)) {
        throw ConfigError("fdtd: only " + std::to_string(ppw)
            + " cells per carrier wavelength (need >= 20)");
    }
    if (!(sigma > 0.0)) {
        throw ConfigError("fdtd.sigma must be > 0");
    }
    const double centre = source_center();
    if (centre < 1.0 || centre > static_cast<double>(n_x) - 2.0) {
        throw ConfigError("fdtd.mu lies outside the grid interior");
    }
    const std::size_t p = probe_cell();
    if (p < 1 || p + 1 >= n_x) {
        throw ConfigError("fdtd.probe lies outside the grid interior");
    }
}

void fdtd_step(FdtdState& state, const FdtdConfig& cfg, double dt, std::span<const cplx> j_half)
{
    const std::size_t n = state.e.size();
    const double dx = cfg.cell_size();
    const double ch = dt / dx;

    for (std::size_t i = 0; i + 1 < n; ++i) {
        state.h[i] -= ch * (state.e[i + 1] - state.e[i]);
    }

    const cplx e1_old = state.e[1];
    const cplx en2_old = state.e[n - 2];
    const cplx e0_old = state.e[0];
    const cplx en1_old = state.e[n - 1];

    const bool vacuum = cfg.eps.empty();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double inv_eps = vacuum ? 1.0 : 1.0 / cfg.eps[i];
        state.e[i] -= ch * inv_eps * (state.h[i] - state.h[i - 1]);
        if (!j_half.empty()) {
            state.e[i] -= dt * inv_eps * j_half[i];
        }
    }

    auto mur = [&](std::size_t edge) {
        const double v = 1.0 / std::sqrt(cfg.permittivity(edge));
        return (v * dt - dx) / (v * dt + dx);
    };
    state.e[0] = e1_old + mur(0) * (state.e[1] - e0_old);
    state.e[n - 1] = en2_old + mur(n - 1) * (state.e[n - 2] - en1_old);
    ++state.step;
}

std::vector<double> source_profile(const FdtdConfig& cfg)
{
    const double dx = cfg.cell_size();
    const double width = cfg.sigma * dx;
    const double centre = cfg.source_center() * dx;
    const double norm = 1.0 / (width * std::sqrt(2.0 * pi));
    std::vector<double> g(cfg.n_x);
    for (std::size_t i = 0; i < cfg.n_x; ++i) {
        const double x = static_cast<double>(i) * dx - centre;
        g[i] = norm * std::exp(-x * x / (2.0 * width * width));
    }
    return g;
}

std::string_view pairing_name(SourcePairing p)
{
    return p == SourcePairing::reversed ? "reversed" : "ordered";
}

SourcePairing parse_pairing(std::string_view name)
{
    if (name == "ordered") {
        return SourcePairing::ordered;
    }
    if (name == "reversed") {
        return SourcePairing::reversed;
    }
    throw ConfigError("fdtd.pairing: expected 'ordered' or 'reversed', got '" + std::string(name) + "'");
}

SourceCurrent source_current(std::span<const double> profile, double t, cplx s_minus,
    cplx s_plus, double omega_c)
{
    const cplx a_plus = std::polar(1.0, omega_c * t) * s_minus;
    const cplx a_minus = std::polar(1.0, -omega_c * t) * s_plus;
    SourceCurrent j;
    j.plus.resize(profile.size());
    j.minus.resize(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) {
        j.plus[i] = profile[i] * a_plus;
        j.minus[i] = profile[i] * a_minus;
    }
    return j;
}

FdtdPlan plan_realization(const FdtdConfig& cfg, double sde_dt, double t1, double tau_max)
{
    cfg.validate();
    FdtdPlan plan;
    plan.sde_dt = sde_dt;
    const double dt_max = cfg.courant * cfg.cell_size();
    plan.substeps = static_cast<std::size_t>(std::ceil(sde_dt / dt_max * (1.0 - 1e-12)));
    plan.substeps = std::max<std::size_t>(plan.substeps, 1);
    plan.dt = sde_dt / static_cast<double>(plan.substeps);

    // Light travel time from source centre to probe through the profile.
    const auto lo = static_cast<std::size_t>(std::floor(std::min<double>(cfg.source_center(),
        static_cast<double>(cfg.probe_cell()))));
    const auto hi = static_cast<std::size_t>(std::ceil(std::max<double>(cfg.source_center(),
        static_cast<double>(cfg.probe_cell()))));
    double travel = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        travel += std::sqrt(cfg.permittivity(i)) * cfg.cell_size();
    }
    plan.warmup_samples = static_cast<std::size_t>(std::ceil((2.0 * travel + 10.0 * t1) / sde_dt));
    plan.record_samples = static_cast<std::size_t>(std::llround(tau_max / sde_dt)) + 1;
    return plan;
}

FieldRecord run_realization(const Trajectory& traj, const FdtdConfig& cfg, const FdtdPlan& plan)
{
    if (traj.s1.size() < plan.trajectory_steps() + 1) {
        throw ConfigError("run_realization: trajectory shorter than the FDTD plan");
    }
    const std::vector<double> profile = source_profile(cfg);
    // Only cells where the Gaussian is non-negligible carry current.
    const double gmax = *std::max_element(profile.begin(), profile.end());
    std::size_t lo = 0;
    std::size_t hi = profile.size();
    while (lo < hi && profile[lo] < 1e-18 * gmax) {
        ++lo;
    }
    while (hi > lo && profile[hi - 1] < 1e-18 * gmax) {
        --hi;
    }

    FdtdState plus(cfg.n_x);
    FdtdState minus(cfg.n_x);
    std::vector<cplx> j_plus(cfg.n_x, 0.0);
    std::vector<cplx> j_minus(cfg.n_x, 0.0);

    FieldRecord rec;
    rec.realization = traj.walker;
    rec.dt = plan.sde_dt;
    rec.e_plus.reserve(plan.record_samples);
    rec.e_minus.reserve(plan.record_samples);

    const std::size_t probe = cfg.probe_cell();
    const std::size_t total = plan.trajectory_steps() * plan.substeps;
    for (std::size_t n = 0; n < total; ++n) {
        const std::size_t k = n / plan.substeps;
        const double t = (static_cast<double>(n) + 0.5) * plan.dt;
        const bool reversed = cfg.pairing == SourcePairing::reversed;
        const cplx s_minus = (reversed ? traj.s1[k] : traj.s2[k])(index(Spin::minus));
        const cplx s_plus = (reversed ? traj.s2[k] : traj.s1[k])(index(Spin::plus));
        const cplx a_plus = std::polar(1.0, cfg.omega_c * t) * s_minus;
        const cplx a_minus = std::polar(1.0, -cfg.omega_c * t) * s_plus;
        for (std::size_t i = lo; i < hi; ++i) {
            j_plus[i] = profile[i] * a_plus;
            j_minus[i] = profile[i] * a_minus;
        }
        fdtd_step(plus, cfg, plan.dt, j_plus);
        fdtd_step(minus, cfg, plan.dt, j_minus);

        if ((n + 1) % plan.substeps == 0) {
            const std::size_t sample = (n + 1) / plan.substeps;
            if (sample >= plan.warmup_samples) {
                rec.e_plus.push_back(plus.e[probe]);
                rec.e_minus.push_back(minus.e[probe]);
            }
        }
    }
    return rec;
}

void FieldAccumulator::add(const FieldRecord& rec)
{
    if (count == 0 && prod_sum.empty()) {
        dt = rec.dt;
        prod_sum.assign(rec.e_minus.size(), 0.0);
        minus_sum.assign(rec.e_minus.size(), 0.0);
    }
    if (rec.e_minus.size() != prod_sum.size()) {
        throw ConfigError("FieldAccumulator: record length mismatch");
    }
    const cplx e0 = rec.e_plus.front();
    for (std::size_t l = 0; l < prod_sum.size(); ++l) {
        prod_sum[l] += rec.e_minus[l] * e0;
        minus_sum[l] += rec.e_minus[l];
    }
    plus_sum += e0;
    ++count;
}

void FieldAccumulator::merge(const FieldAccumulator& other)
{
    if (prod_sum.empty()) {
        *this = other;
        return;
    }
    for (std::size_t l = 0; l < prod_sum.size(); ++l) {
        prod_sum[l] += other.prod_sum[l];
        minus_sum[l] += other.minus_sum[l];
    }
    plus_sum += other.plus_sum;
    count += other.count;
}

std::vector<cplx> field_correlation(const FieldAccumulator& acc, double omega_c)
{
    if (acc.count < 100) {
        throw InsufficientSamples("fdtd_spectrum needs >= 100 realizations, got "
            + std::to_string(acc.count));
    }
    const double n = static_cast<double>(acc.count);
    const cplx mean_plus = acc.plus_sum / n;
    std::vector<cplx> c(acc.prod_sum.size());
    for (std::size_t l = 0; l < c.size(); ++l) {
        const double tau = static_cast<double>(l) * acc.dt;
        c[l] = std::polar(1.0, omega_c * tau)
            * (acc.prod_sum[l] / n - (acc.minus_sum[l] / n) * mean_plus);
    }
    return c;
}

Spectrum fdtd_spectrum(const FieldAccumulator& acc, std::span<const double> omega_grid,
    double hbar, double omega_c)
{
    const std::vector<cplx> c = field_correlation(acc, omega_c);
    const std::vector<double> tau = uniform_grid(acc.dt, c.size());
    return incoherent_spectrum(tau, c, omega_grid, hbar);
}

Spectrum fdtd_spectrum(std::span<const FieldRecord> records, std::span<const double> omega_grid,
    double hbar, double omega_c)
{
    FieldAccumulator acc;
    for (const FieldRecord& r : records) {
        acc.add(r);
    }
    return fdtd_spectrum(acc, omega_grid, hbar, omega_c);
}

FdtdEnsembleResult run_fdtd_ensemble(const SdeModel& model, const SystemParams& params,
    const EnsembleConfig& ens, const FdtdConfig& cfg, unsigned workers)
{
    ens.validate(params);
    FdtdEnsembleResult out;
    out.plan = plan_realization(cfg, ens.dt, params.t1, ens.tau_max);
    const FdtdPlan& plan = out.plan;

    constexpr std::size_t block = 64;
    constexpr std::size_t blocks_per_batch = 16;
    const std::size_t n_blocks = (ens.n_walkers + block - 1) / block;
    workers = std::max(1u, workers);

    std::vector<FdtdEnsembleResult> partial;
    for (std::size_t start = 0; start < n_blocks; start += blocks_per_batch) {
        const std::size_t count = std::min(blocks_per_batch, n_blocks - start);
        partial.assign(count, FdtdEnsembleResult{});

        auto run_block = [&](std::size_t k) {
            FdtdEnsembleResult& r = partial[k];
            const std::size_t first = (start + k) * block;
            const std::size_t last = std::min(ens.n_walkers, first + block);
            for (std::size_t w = first; w < last; ++w) {
                const Trajectory traj = simulate_walker(model, ens, w, plan.trajectory_steps());
                r.field.add(run_realization(traj, cfg, plan));
                accumulate_trajectory(r.atom, traj, plan.warmup_samples, plan.record_samples);
            }
        };

        const std::size_t threads = std::min<std::size_t>(workers, count);
        if (threads <= 1) {
            for (std::size_t k = 0; k < count; ++k) {
                run_block(k);
            }
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::jthread> pool;
            for (std::size_t t = 0; t < threads; ++t) {
                pool.emplace_back([&] {
                    for (std::size_t k = next++; k < count; k = next++) {
                        run_block(k);
                    }
                });
            }
        }
        for (const FdtdEnsembleResult& r : partial) {
            out.field.merge(r.field);
            out.atom.merge(r.atom);
        }
    }
    return out;
}

void write_field_record(std::ostream& os, const FieldRecord& rec)
{
    const auto prec = os.precision(17);
    for (std::size_t k = 0; k < rec.e_plus.size(); ++k) {
        os << static_cast<double>(k) * rec.dt << ' ' << rec.e_plus[k].real() << ' '
           << rec.e_plus[k].imag() << ' ' << rec.e_minus[k].real() << ' '
           << rec.e_minus[k].imag() << '\n';
    }
    os.precision(prec);
}

} // namespace sbloch
