#include <sbloch/fit.hpp>

#include <algorithm>
#include <cmath>
#include <string>

#include <sbloch/errors.hpp>

namespace sbloch {

double Lorentzian::operator()(double omega) const
{
    const double d = omega - center;
    return area / pi * half_width / (d * d + half_width * half_width);
}

double TripletFit::total_area() const
{
    return lines[0].area + lines[1].area + lines[2].area;
}

FitHint fit_hint(const SystemParams& params)
{
    return FitHint{params.rabi_energy, params.detuning_energy,
        params.hbar * 0.5 * (params.gamma1() + params.gamma2())};
}

namespace {

constexpr int n_params = 9;
constexpr int max_iterations = 500;
constexpr double step_tolerance = 1e-10;

using Params = Eigen::Matrix<double, n_params, 1>;

// Parameter layout per line k: [center, log γ, √area].
Lorentzian line(const Params& p, int k)
{
    const double a = p(3 * k + 2);
    return Lorentzian{p(3 * k), std::exp(p(3 * k + 1)), a * a};
}

double cost(const Params& p, const Spectrum& spec)
{
    double acc = 0.0;
    for (std::size_t w = 0; w < spec.omega.size(); ++w) {
        double model = 0.0;
        for (int k = 0; k < 3; ++k) {
            model += line(p, k)(spec.omega[w]);
        }
        const double r = spec.s_inc[w] - model;
        acc += r * r;
    }
    return acc;
}

} // namespace

TripletFit fit_triplet(const Spectrum& spec, const FitHint& hint)
{
    const std::size_t n = spec.omega.size();
    if (n < n_params) {
        throw ConfigError("fit_triplet: spectrum has fewer points than parameters");
    }
    const double spacing = (spec.omega.back() - spec.omega.front()) / static_cast<double>(n - 1);
    const double split = std::hypot(hint.rabi_energy, hint.detuning_energy);
    const double width = hint.half_width > 0.0 ? hint.half_width : 3.0 * spacing;

    double total = 0.0;
    for (std::size_t w = 0; w + 1 < n; ++w) {
        total += 0.5 * (spec.omega[w + 1] - spec.omega[w]) * (spec.s_inc[w] + spec.s_inc[w + 1]);
    }
    total = std::max(total, 1e-300);

    Params p;
    const double centers[3] = {-split, 0.0, split};
    const double shares[3] = {0.25, 0.5, 0.25};
    for (int k = 0; k < 3; ++k) {
        p(3 * k) = centers[k];
        p(3 * k + 1) = std::log(width);
        p(3 * k + 2) = std::sqrt(shares[k] * total);
    }

    double current = cost(p, spec);
    double lambda = 1e-3;
    int iter = 0;
    bool converged = false;
    Eigen::Matrix<double, Eigen::Dynamic, n_params> jac(n, n_params);
    Eigen::VectorXd resid(n);

    for (; iter < max_iterations && !converged; ++iter) {
        for (std::size_t w = 0; w < n; ++w) {
            const double om = spec.omega[w];
            double model = 0.0;
            for (int k = 0; k < 3; ++k) {
                const Lorentzian l = line(p, k);
                const double d = om - l.center;
                const double g = l.half_width;
                const double den = d * d + g * g;
                const double a = p(3 * k + 2);
                model += l.area / pi * g / den;
                jac(w, 3 * k) = l.area * g * 2.0 * d / (pi * den * den);
                jac(w, 3 * k + 1) = g * l.area / pi * (d * d - g * g) / (den * den);
                jac(w, 3 * k + 2) = 2.0 * a * g / (pi * den);
            }
            resid(w) = spec.s_inc[w] - model;
        }
        const Eigen::Matrix<double, n_params, n_params> jtj = jac.transpose() * jac;
        const Params jtr = jac.transpose() * resid;

        // Increase damping until a step lowers the cost.
        bool accepted = false;
        while (!accepted) {
            Eigen::Matrix<double, n_params, n_params> h = jtj;
            for (int k = 0; k < n_params; ++k) {
                h(k, k) += lambda * std::max(jtj(k, k), 1e-300);
            }
            const Params step = h.ldlt().solve(jtr);
            const Params trial = p + step;
            const double trial_cost = step.allFinite() ? cost(trial, spec) : HUGE_VAL;
            if (trial_cost <= current) {
                const double gain = current - trial_cost;
                p = trial;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (step.norm() <= step_tolerance * (p.norm() + step_tolerance)
                    || gain <= 1e-15 * current) {
                    converged = true;
                }
                current = trial_cost;
            } else {
                lambda *= 4.0;
                if (lambda > 1e16) {
                    // No descent direction left: stationary point.
                    converged = true;
                    break;
                }
            }
        }
    }
    if (!converged) {
        throw FitNotConverged("fit_triplet: no convergence in " + std::to_string(max_iterations)
                + " iterations",
            std::sqrt(current / static_cast<double>(n)));
    }

    TripletFit fit;
    for (int k = 0; k < 3; ++k) {
        fit.lines[k] = line(p, k);
    }
    std::sort(fit.lines.begin(), fit.lines.end(),
        [](const Lorentzian& a, const Lorentzian& b) { return a.center < b.center; });
    fit.residual = std::sqrt(current / static_cast<double>(n));
    fit.iterations = iter;
    return fit;
}

} // namespace sbloch
