#ifndef SBLOCH_EXPERIMENT_HPP
#define SBLOCH_EXPERIMENT_HPP

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <sbloch/config.hpp>
#include <sbloch/fit.hpp>

namespace sbloch {

struct RunOptions {
    unsigned workers = 1;
    std::ostream* log = nullptr; ///< progress and warnings, serialized
    bool strict_tail = false;
};

/// Results at one sweep value. Vectors run parallel to the config's methods.
struct PointResult {
    double sweep_value = 0.0;
    SystemParams params;
    std::vector<Spectrum> spectra;
    std::vector<std::optional<TripletFit>> fits;
    std::vector<std::string> fit_errors;
    double coherent_qrt = 0.0; ///< π⟨σ₊⟩⟨σ₋⟩ from the steady state
};

struct OutputFile {
    std::string path; ///< relative to the output directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct SweepResult {
    std::vector<double> omega;
    std::vector<Method> methods;
    std::vector<PointResult> points;
    std::vector<OutputFile> files;
};

/// Evaluates every sweep point without touching the filesystem.
SweepResult compute_sweep(const ExperimentConfig& config, const RunOptions& opts);

/**
 * Runs the sweep and writes into config.output_dir:
 *   config.ini, spectra/point_NNNN.csv, map_<method>.csv, fits.csv (if
 *   fitting) and manifest.json listing every file with its SHA-256.
 * Output bytes depend only on the config and seed.
 */
SweepResult run_experiment(const ExperimentConfig& config, const RunOptions& opts);

/// Two-time correlations at the base point, one file per method, plus an
/// optional raw dump of walker 0.
std::vector<OutputFile> run_correlate(const ExperimentConfig& config, const RunOptions& opts,
    bool dump_trajectory = false);

/// Propagated-field and at-atom spectra per sweep point; requires [fdtd].
std::vector<OutputFile> run_fdtd(const ExperimentConfig& config, const RunOptions& opts,
    bool dump_field = false);

/// Steady state, cumulant, drift and noise matrices as text.
std::string steady_report(const SystemParams& params);

/// Resolved parameter table printed before every run.
void print_parameters(std::ostream& os, const ExperimentConfig& config, unsigned workers);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

} // namespace sbloch

#endif
