#include <sbloch/spectrum.hpp>

#include <algorithm>
#include <cmath>
#include <string>

#include <sbloch/errors.hpp>

namespace sbloch {

Spectrum Spectrum::max_normalized() const
{
    Spectrum out = *this;
    const double peak = s_inc.empty() ? 0.0 : *std::max_element(s_inc.begin(), s_inc.end());
    if (peak > 0.0) {
        for (double& v : out.s_inc) {
            v /= peak;
        }
    }
    out.normalized = true;
    return out;
}

std::vector<double> symmetric_grid(double half_width, std::size_t n)
{
    if (n % 2 == 0) {
        ++n;
    }
    std::vector<double> g(n, 0.0);
    if (n == 1) {
        return g;
    }
    const std::size_t mid = n / 2;
    const double step = half_width / static_cast<double>(mid);
    for (std::size_t k = 0; k < n; ++k) {
        const double offset = static_cast<double>(k) - static_cast<double>(mid);
        g[k] = offset * step;
    }
    return g;
}

Spectrum incoherent_spectrum(std::span<const double> tau, std::span<const cplx> corr,
    std::span<const double> omega_grid, double hbar, SpectrumOptions opts)
{
    check_time_grid(tau);
    if (corr.size() != tau.size()) {
        throw ConfigError("incoherent_spectrum: correlation and grid sizes differ");
    }

    Spectrum out;
    out.omega.assign(omega_grid.begin(), omega_grid.end());
    out.s_inc.assign(omega_grid.size(), 0.0);

    double peak = 0.0;
    for (const cplx& c : corr) {
        peak = std::max(peak, std::abs(c));
    }
    out.tail_ratio = peak > 0.0 ? std::abs(corr.back()) / peak : 0.0;
    if (opts.strict_tail && out.tail_ratio >= tail_tolerance) {
        throw TailNotDecayed("correlation tail ratio " + std::to_string(out.tail_ratio)
            + " at tau_max exceeds " + std::to_string(tail_tolerance));
    }

    const std::size_t n = tau.size();
    std::vector<double> weight(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double h = 0.5 * (tau[k + 1] - tau[k]);
        weight[k] += h;
        weight[k + 1] += h;
    }

    for (std::size_t w = 0; w < omega_grid.size(); ++w) {
        const double omega = omega_grid[w] / hbar;
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double phase = -omega * tau[k];
            // Re{e^{iφ} c} = cos φ Re c − sin φ Im c
            acc += weight[k] * (std::cos(phase) * corr[k].real() - std::sin(phase) * corr[k].imag());
        }
        out.s_inc[w] = acc;
    }
    return out;
}

Spectrum incoherent_spectrum(const CorrelationSeries& corr, std::span<const double> omega_grid,
    double hbar, SpectrumOptions opts)
{
    const std::vector<cplx> c = corr.component(Spin::plus, Spin::minus);
    return incoherent_spectrum(corr.tau, c, omega_grid, hbar, opts);
}

namespace {

void require_samples(const EnsembleResult& result)
{
    if (result.samples < 100) {
        throw InsufficientSamples("stochastic estimator needs >= 100 walker origins, got "
            + std::to_string(result.samples));
    }
}

} // namespace

CorrelationSeries stochastic_correlation(const EnsembleResult& result)
{
    require_samples(result);
    const double n = static_cast<double>(result.samples);
    const Vec3 mean2 = result.s2_sum / n;

    CorrelationSeries out;
    out.method = Method::sto;
    out.tau = result.tau_grid();
    out.values.resize(result.prod_sum.size());
    for (std::size_t l = 0; l < out.values.size(); ++l) {
        out.values[l] = result.prod_sum[l] / n - (result.s1_sum[l] / n) * mean2.transpose();
    }
    return out;
}

std::vector<cplx> stochastic_correlation(const EnsembleResult& result, Spin i, Spin j)
{
    return stochastic_correlation(result).component(i, j);
}

std::vector<double> correlation_stderr(const EnsembleResult& result, Spin i, Spin j)
{
    require_samples(result);
    const double n = static_cast<double>(result.samples);
    std::vector<double> out(result.prod_sum.size());
    for (std::size_t l = 0; l < out.size(); ++l) {
        const cplx mean = result.prod_sum[l](index(i), index(j)) / n;
        const double second = result.prod_sq_sum[l](index(i), index(j)) / n;
        out[l] = std::sqrt(std::max(0.0, second - std::norm(mean)) / n);
    }
    return out;
}

double coherent_weight(const EnsembleResult& result)
{
    require_samples(result);
    const double n = static_cast<double>(result.samples);
    return pi * (result.prod_sum.front()(index(Spin::plus), index(Spin::minus)) / n).real();
}

double integrated_power(const Spectrum& spec, double hbar)
{
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < spec.omega.size(); ++k) {
        const double h = (spec.omega[k + 1] - spec.omega[k]) / hbar;
        acc += 0.5 * h * (spec.s_inc[k] + spec.s_inc[k + 1]);
    }
    return acc / pi;
}

double normalized_rms(const Spectrum& a, const Spectrum& b)
{
    if (a.s_inc.size() != b.s_inc.size() || a.s_inc.empty()) {
        throw ConfigError("normalized_rms: spectra are on different grids");
    }
    const Spectrum na = a.max_normalized();
    const Spectrum nb = b.max_normalized();
    double acc = 0.0;
    for (std::size_t k = 0; k < na.s_inc.size(); ++k) {
        const double d = na.s_inc[k] - nb.s_inc[k];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(na.s_inc.size()));
}

std::vector<std::size_t> find_peaks(const Spectrum& spec, double floor)
{
    std::vector<std::size_t> peaks;
    if (spec.s_inc.size() < 3) {
        return peaks;
    }
    const double top = *std::max_element(spec.s_inc.begin(), spec.s_inc.end());
    for (std::size_t k = 1; k + 1 < spec.s_inc.size(); ++k) {
        const double v = spec.s_inc[k];
        if (v > spec.s_inc[k - 1] && v >= spec.s_inc[k + 1] && v > floor * top) {
            peaks.push_back(k);
        }
    }
    return peaks;
}

} // namespace sbloch
