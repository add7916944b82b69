// Command-line front end: steady, correlate, spectrum, sweep, fdtd, validate.
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <sbloch/errors.hpp>
#include <sbloch/experiment.hpp>

using namespace sbloch;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<unsigned> workers;
    std::string methods;
    bool strict_tail = false;
    bool dump = false;
    bool quiet = false;
};

unsigned resolve_workers(const Flags& f)
{
    if (f.workers) {
        return std::max(1u, *f.workers);
    }
    if (const char* env = std::getenv("SBLOCH_WORKERS")) {
        try {
            const long n = std::stol(env);
            if (n >= 1) {
                return static_cast<unsigned>(n);
            }
        } catch (const std::exception&) {
        }
        throw ConfigError(std::string("SBLOCH_WORKERS: expected a positive integer, got '") + env + "'");
    }
    return 1;
}

ExperimentConfig resolve_config(const Flags& f)
{
    ExperimentConfig c = load_config(f.config);
    if (f.seed) {
        c.seed = f.seed;
    }
    if (!f.out.empty()) {
        c.output_dir = f.out;
    }
    if (!f.methods.empty()) {
        std::string text = "methods = " + f.methods + "\n";
        // Reuse the config grammar for the method list.
        c.methods = parse_config(text).methods;
    }
    c.validate();
    return c;
}

void add_common(CLI::App* cmd, Flags& f, bool runs)
{
    cmd->add_option("--config", f.config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "RNG seed (overrides config)");
    cmd->add_option("--out", f.out, "output directory (overrides config)");
    cmd->add_option("--workers", f.workers, "worker threads (default $SBLOCH_WORKERS or 1)");
    cmd->add_option("--methods", f.methods, "comma list of sto,qrt,grn (overrides config)");
    if (runs) {
        cmd->add_flag("--strict-tail", f.strict_tail, "treat an undecayed correlation tail as an error");
        cmd->add_flag("--quiet", f.quiet, "suppress progress lines");
    }
}

void need_seed(const ExperimentConfig& c)
{
    if (!c.seed) {
        throw ConfigError("seed: an explicit seed is required (--seed or config 'seed')");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stochastic Bloch-vector emission spectra"};
    app.require_subcommand(1);
    Flags f;

    auto* steady = app.add_subcommand("steady", "steady state, cumulant, drift and noise matrices");
    add_common(steady, f, false);
    auto* correlate = app.add_subcommand("correlate", "two-time correlations at the base point");
    add_common(correlate, f, true);
    correlate->add_flag("--dump-trajectory", f.dump, "write walker 0 as text");
    auto* spectrum = app.add_subcommand("spectrum", "spectra at the base point (sweep ignored)");
    add_common(spectrum, f, true);
    auto* sweep = app.add_subcommand("sweep", "spectral map over the configured sweep");
    add_common(sweep, f, true);
    auto* fdtd = app.add_subcommand("fdtd", "propagated-field spectra through the 1D Maxwell solver");
    add_common(fdtd, f, true);
    fdtd->add_flag("--dump-field", f.dump, "write the probe field of realization 0");
    auto* validate = app.add_subcommand("validate", "check a config and print the resolved parameters");
    add_common(validate, f, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        ExperimentConfig c = resolve_config(f);
        const unsigned workers = resolve_workers(f);
        if (spectrum->parsed()) {
            c.sweep = SweepSpec{};
        }
        if (sweep->parsed() && c.sweep.axis == SweepAxis::none) {
            throw ConfigError("sweep.axis: the sweep command needs axis = detuning or rabi");
        }
        print_parameters(std::cout, c, workers);
        std::cout.flush();

        RunOptions opts;
        opts.workers = workers;
        opts.log = f.quiet ? nullptr : &std::cerr;
        opts.strict_tail = f.strict_tail;

        if (validate->parsed()) {
            std::cout << "config ok\n";
        } else if (steady->parsed()) {
            std::cout << steady_report(c.point(c.sweep_values().front()));
        } else if (correlate->parsed()) {
            need_seed(c);
            const auto files = run_correlate(c, opts, f.dump);
            std::cout << "wrote " << files.size() << " files to " << c.output_dir << '\n';
        } else if (spectrum->parsed() || sweep->parsed()) {
            need_seed(c);
            const auto r = run_experiment(c, opts);
            std::cout << "wrote " << r.files.size() << " files to " << c.output_dir << '\n';
        } else if (fdtd->parsed()) {
            need_seed(c);
            const auto files = run_fdtd(c, opts, f.dump);
            std::cout << "wrote " << files.size() << " files to " << c.output_dir << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return exit_ok;
}
