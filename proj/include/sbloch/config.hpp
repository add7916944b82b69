#ifndef SBLOCH_CONFIG_HPP
#define SBLOCH_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <sbloch/ensemble.hpp>
#include <sbloch/fdtd.hpp>

namespace sbloch {

enum class SweepAxis { none, detuning, rabi };

std::string_view axis_name(SweepAxis a);
SweepAxis parse_axis(std::string_view name);

/// Inclusive range start, start + step, ..., stop.
struct SweepSpec {
    SweepAxis axis = SweepAxis::none;
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;

    std::vector<double> values() const;

    bool operator==(const SweepSpec&) const = default;
};

/// Energy grid of the emitted spectra. half_width = 0 picks a width from the
/// largest generalized Rabi energy and the linewidth.
struct SpectrumGrid {
    double half_width = 0.0;
    std::size_t points = 801;

    bool operator==(const SpectrumGrid&) const = default;
};

/**
 * One experiment: the base system, how to sample it, what to sweep and
 * which correlation routes to evaluate. Zero-valued ensemble times mean
 * "derive from T₁" (dt = T₁/200, burn-in 10·T₁, τ_max = 15·T₁).
 */
struct ExperimentConfig {
    SystemParams system;
    EnsembleConfig ensemble;
    SweepSpec sweep;
    SpectrumGrid grid;
    std::vector<Method> methods{Method::qrt};
    bool fit = false;
    std::optional<FdtdConfig> fdtd;
    std::string output_dir = "out";
    std::optional<std::uint64_t> seed;
    double eta_r = 0.0;                 ///< power calibration, 0 = unused
    std::optional<double> power;        ///< P_exc; sets ħΩ_R when given

    /// Schema checks; throws ConfigError naming the offending field.
    void validate() const;

    /// System parameters at one sweep value.
    SystemParams point(double sweep_value) const;
    std::vector<double> sweep_values() const;

    /// Ensemble settings with T₁-derived defaults filled in.
    EnsembleConfig resolved_ensemble(const SystemParams& params) const;

    std::vector<double> omega_grid() const;

    bool has(Method m) const;

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

/// ħΩ_R = √(ħ·η_R·P_exc). Throws NegativePower for p_exc < 0 and
/// ConfigError for eta_r <= 0.
double power_to_rabi(double p_exc, double eta_r, double hbar = hbar_ueV_ps);

} // namespace sbloch

#endif
