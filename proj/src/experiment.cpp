#include <sbloch/experiment.hpp>

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <openssl/evp.h>

#include <sbloch/errors.hpp>
#include <sbloch/linalg.hpp>

namespace sbloch {

namespace fs = std::filesystem;

namespace {

constexpr const char* version = "1.0.0";

std::string num(double x)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

class Log {
public:
    explicit Log(std::ostream* os) : m_os(os) {}

    void line(const std::string& s)
    {
        if (m_os) {
            std::lock_guard lock(m_mutex);
            *m_os << s << '\n';
        }
    }

private:
    std::ostream* m_os;
    std::mutex m_mutex;
};

// Distinct, reproducible key per sweep point.
std::uint64_t point_seed(std::uint64_t seed, std::size_t index)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t require_seed(const ExperimentConfig& c)
{
    if (!c.seed) {
        throw ConfigError("seed: an explicit seed is required (--seed or config 'seed')");
    }
    return *c.seed;
}

std::string context(const ExperimentConfig& c, std::size_t k, double v)
{
    if (c.sweep.axis == SweepAxis::none) {
        return "point 0";
    }
    return "sweep point " + std::to_string(k) + " (" + std::string(axis_name(c.sweep.axis)) + " = "
        + num(v) + ")";
}

// Runs body(k) for k in [0, n) on up to `threads` workers.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body)
{
    threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
    if (threads <= 1) {
        for (std::size_t k = 0; k < n; ++k) {
            body(k);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < n; k = next++) {
                    try {
                        body(k);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) {
                            error = std::current_exception();
                        }
                        next = n;
                    }
                }
            });
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

PointResult compute_point(const ExperimentConfig& c, std::size_t k, double value,
    const std::vector<double>& omega, unsigned inner_workers, Log& log, bool strict)
{
    PointResult r;
    r.sweep_value = value;
    r.params = c.point(value);
    const SystemParams& p = r.params;

    const Liouvillian l = build_liouvillian(p);
    const SteadyState ss = steady_state(l);
    const Mat3 m = second_order_cumulant(ss);
    r.coherent_qrt = pi * (ss.means(index(Spin::plus)) * ss.means(index(Spin::minus))).real();

    EnsembleConfig ens = c.resolved_ensemble(p);
    ens.seed = point_seed(require_seed(c), k);
    const std::vector<double> tau = uniform_grid(ens.dt, ens.lag_count());
    const SpectrumOptions sopts{strict};

    for (Method method : c.methods) {
        CorrelationSeries corr;
        double weight = 0.0;
        switch (method) {
        case Method::qrt:
            corr = qrt_correlation(l, ss, tau);
            weight = r.coherent_qrt;
            break;
        case Method::grn:
            corr = greens_correlation(drift_matrix(l), m, tau);
            weight = r.coherent_qrt;
            break;
        case Method::sto: {
            const EnsembleResult er = run_ensemble(p, ens, inner_workers);
            corr = stochastic_correlation(er);
            weight = coherent_weight(er);
            break;
        }
        }
        Spectrum s = incoherent_spectrum(corr, omega, p.hbar, sopts);
        s.coherent_weight = weight;
        if (s.tail_ratio >= tail_tolerance) {
            log.line("warning: " + context(c, k, value) + " " + std::string(method_name(method))
                + " correlation tail ratio " + num(s.tail_ratio) + " >= " + num(tail_tolerance));
        }
        if (c.fit) {
            try {
                r.fits.emplace_back(fit_triplet(s, fit_hint(p)));
                r.fit_errors.emplace_back();
            } catch (const FitNotConverged& e) {
                r.fits.emplace_back(std::nullopt);
                r.fit_errors.emplace_back("not_converged residual=" + num(e.residual()));
            }
        }
        r.spectra.push_back(std::move(s));
    }
    log.line("done " + context(c, k, value));
    return r;
}

std::string column_name(Method m)
{
    switch (m) {
    case Method::sto:
        return "S_inc";
    case Method::qrt:
        return "S_qrt";
    case Method::grn:
        return "S_grn";
    }
    return "S";
}

std::string point_file(const PointResult& r, const SweepResult& s, const ExperimentConfig& c)
{
    std::ostringstream os;
    os << "# sweep_axis = " << axis_name(c.sweep.axis) << '\n';
    os << "# sweep_value = " << num(r.sweep_value) << '\n';
    os << "# rabi_energy_ueV = " << num(r.params.rabi_energy) << '\n';
    os << "# detuning_energy_ueV = " << num(r.params.detuning_energy) << '\n';
    os << "# t1 = " << num(r.params.t1) << '\n';
    os << "# t2 = " << num(r.params.t2) << '\n';
    for (std::size_t m = 0; m < s.methods.size(); ++m) {
        if (s.methods[m] == Method::sto) {
            os << "# coherent_weight = " << num(r.spectra[m].coherent_weight) << '\n';
        }
    }
    os << "# coherent_weight_qrt = " << num(r.coherent_qrt) << '\n';
    for (std::size_t m = 0; m < s.methods.size(); ++m) {
        os << "# tail_ratio_" << method_name(s.methods[m]) << " = " << num(r.spectra[m].tail_ratio)
           << '\n';
    }
    os << "omega_ueV";
    for (Method m : s.methods) {
        os << ',' << column_name(m);
    }
    os << '\n';
    for (std::size_t w = 0; w < s.omega.size(); ++w) {
        os << num(s.omega[w]);
        for (const Spectrum& sp : r.spectra) {
            os << ',' << num(sp.s_inc[w]);
        }
        os << '\n';
    }
    return os.str();
}

std::string map_file(const SweepResult& s, std::size_t m)
{
    std::ostringstream os;
    os << "# method = " << method_name(s.methods[m]) << '\n';
    os << "sweep_value,omega,intensity\n";
    for (const PointResult& r : s.points) {
        for (std::size_t w = 0; w < s.omega.size(); ++w) {
            os << num(r.sweep_value) << ',' << num(s.omega[w]) << ',' << num(r.spectra[m].s_inc[w])
               << '\n';
        }
    }
    return os.str();
}

std::string fits_file(const SweepResult& s)
{
    std::ostringstream os;
    os << "sweep_value,method,status,center_red,width_red,area_red,center_mid,width_mid,area_mid,"
          "center_blue,width_blue,area_blue,residual,iterations\n";
    for (const PointResult& r : s.points) {
        for (std::size_t m = 0; m < s.methods.size(); ++m) {
            os << num(r.sweep_value) << ',' << method_name(s.methods[m]) << ',';
            if (const auto& f = r.fits[m]) {
                os << "ok";
                for (const Lorentzian& line : f->lines) {
                    os << ',' << num(line.center) << ',' << num(line.half_width) << ','
                       << num(line.area);
                }
                os << ',' << num(f->residual) << ',' << f->iterations << '\n';
            } else {
                os << r.fit_errors[m] << ",,,,,,,,,,,\n";
            }
        }
    }
    return os.str();
}

OutputFile write_file(const fs::path& dir, const std::string& rel, const std::string& data)
{
    const fs::path path = dir / rel;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << data;
    out.close();
    return OutputFile{rel, sha256_hex(data), data.size()};
}

std::vector<OutputFile> finish(const ExperimentConfig& c, const std::string& command,
    std::vector<OutputFile> files)
{
    const fs::path dir(c.output_dir);
    // The snapshot leaves out where it was written, so a run's bytes do not
    // depend on the output location.
    ExperimentConfig snapshot = c;
    snapshot.output_dir = ExperimentConfig{}.output_dir;
    const std::string cfg_text = serialize_config(snapshot);
    files.insert(files.begin(), write_file(dir, "config.ini", cfg_text));

    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = version;
    j["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
    j["config_sha256"] = sha256_hex(cfg_text);
    j["sweep"] = {{"axis", axis_name(c.sweep.axis)}, {"points", c.sweep_values().size()}};
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const OutputFile& f : files) {
        list.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    }
    j["files"] = list;
    const std::string text = j.dump(2) + "\n";
    write_file(dir, "manifest.json", text);
    return files;
}

std::string point_name(std::size_t k)
{
    std::ostringstream os;
    os << "spectra/point_" << std::setw(4) << std::setfill('0') << k << ".csv";
    return os.str();
}

template <class M>
void print_matrix(std::ostream& os, const char* name, const M& m)
{
    os << name << ":\n";
    for (int r = 0; r < m.rows(); ++r) {
        os << "  ";
        for (int c = 0; c < m.cols(); ++c) {
            const cplx v = m(r, c);
            os << std::setw(26) << (num(v.real()) + (v.imag() < 0 ? "-" : "+") + num(std::abs(v.imag())) + "i");
        }
        os << '\n';
    }
}

} // namespace

std::string sha256_hex(std::string_view data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    std::ostringstream os;
    for (unsigned int k = 0; k < len; ++k) {
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[k]);
    }
    return os.str();
}

SweepResult compute_sweep(const ExperimentConfig& config, const RunOptions& opts)
{
    config.validate();
    if (config.has(Method::sto)) {
        require_seed(config);
    }
    Log log(opts.log);
    SweepResult out;
    out.omega = config.omega_grid();
    out.methods = config.methods;
    const std::vector<double> values = config.sweep_values();
    out.points.resize(values.size());

    const unsigned workers = std::max(1u, opts.workers);
    const unsigned outer = static_cast<unsigned>(std::min<std::size_t>(workers, values.size()));
    const unsigned inner = std::max(1u, workers / outer);
    parallel_for(values.size(), outer, [&](std::size_t k) {
        try {
            out.points[k] = compute_point(config, k, values[k], out.omega, inner, log, opts.strict_tail);
        } catch (const ConfigError& e) {
            throw ConfigError(context(config, k, values[k]) + ": " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError(context(config, k, values[k]) + ": " + e.what());
        }
    });
    return out;
}

SweepResult run_experiment(const ExperimentConfig& config, const RunOptions& opts)
{
    SweepResult s = compute_sweep(config, opts);
    const fs::path dir(config.output_dir);
    std::vector<OutputFile> files;
    for (std::size_t k = 0; k < s.points.size(); ++k) {
        files.push_back(write_file(dir, point_name(k), point_file(s.points[k], s, config)));
    }
    for (std::size_t m = 0; m < s.methods.size(); ++m) {
        files.push_back(write_file(dir, "map_" + std::string(method_name(s.methods[m])) + ".csv",
            map_file(s, m)));
    }
    if (config.fit) {
        files.push_back(write_file(dir, "fits.csv", fits_file(s)));
    }
    s.files = finish(config, "sweep", std::move(files));
    return s;
}

std::vector<OutputFile> run_correlate(const ExperimentConfig& config, const RunOptions& opts,
    bool dump_trajectory)
{
    config.validate();
    const SystemParams p = config.point(config.sweep_values().front());
    const Liouvillian l = build_liouvillian(p);
    const SteadyState ss = steady_state(l);
    EnsembleConfig ens = config.resolved_ensemble(p);
    const std::vector<double> tau = uniform_grid(ens.dt, ens.lag_count());
    const fs::path dir(config.output_dir);
    std::vector<OutputFile> files;

    for (Method method : config.methods) {
        CorrelationSeries corr;
        std::vector<double> se;
        switch (method) {
        case Method::qrt:
            corr = qrt_correlation(l, ss, tau);
            break;
        case Method::grn:
            corr = greens_correlation(drift_matrix(l), second_order_cumulant(ss), tau);
            break;
        case Method::sto: {
            ens.seed = point_seed(require_seed(config), 0);
            const EnsembleResult er = run_ensemble(p, ens, opts.workers);
            corr = stochastic_correlation(er);
            se = correlation_stderr(er, Spin::plus, Spin::minus);
            if (dump_trajectory) {
                std::ostringstream os;
                os << "# walker step re_s1m im_s1m re_s1p im_s1p re_s1z im_s1z re_s2m im_s2m re_s2p im_s2p re_s2z im_s2z\n";
                write_trajectory(os, simulate_walker(SdeModel::from_params(p, ens.dt), ens, 0,
                    ens.lag_count() - 1));
                files.push_back(write_file(dir, "trajectory_walker0.txt", os.str()));
            }
            break;
        }
        }
        std::ostringstream os;
        os << "# method = " << method_name(method) << '\n';
        os << "tau";
        const char* names[] = {"m", "p", "z"};
        for (const char* i : names) {
            for (const char* j : names) {
                os << ",re_" << i << j << ",im_" << i << j;
            }
        }
        if (!se.empty()) {
            os << ",stderr_pm";
        }
        os << '\n';
        for (std::size_t t = 0; t < corr.tau.size(); ++t) {
            os << num(corr.tau[t]);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    os << ',' << num(corr.values[t](i, j).real()) << ',' << num(corr.values[t](i, j).imag());
                }
            }
            if (!se.empty()) {
                os << ',' << num(se[t]);
            }
            os << '\n';
        }
        files.push_back(write_file(dir, "correlation_" + std::string(method_name(method)) + ".csv", os.str()));
    }
    return finish(config, "correlate", std::move(files));
}

std::vector<OutputFile> run_fdtd(const ExperimentConfig& config, const RunOptions& opts,
    bool dump_field)
{
    config.validate();
    if (!config.fdtd) {
        throw ConfigError("fdtd: section [fdtd] is required for this command");
    }
    Log log(opts.log);
    const std::uint64_t seed = require_seed(config);
    const std::vector<double> values = config.sweep_values();
    const std::vector<double> omega = config.omega_grid();
    const fs::path dir(config.output_dir);
    std::vector<OutputFile> files;

    for (std::size_t k = 0; k < values.size(); ++k) {
        try {
            const SystemParams p = config.point(values[k]);
            EnsembleConfig ens = config.resolved_ensemble(p);
            ens.seed = point_seed(seed, k);
            const SdeModel model = SdeModel::from_params(p, ens.dt);
            const FdtdEnsembleResult r = run_fdtd_ensemble(model, p, ens, *config.fdtd, opts.workers);
            const Spectrum field = fdtd_spectrum(r.field, omega, p.hbar, config.fdtd->omega_c);
            const Spectrum atom = incoherent_spectrum(stochastic_correlation(r.atom), omega, p.hbar);

            std::ostringstream os;
            os << "# sweep_axis = " << axis_name(config.sweep.axis) << '\n';
            os << "# sweep_value = " << num(values[k]) << '\n';
            os << "# realizations = " << r.field.count << '\n';
            os << "# fdtd_substeps = " << r.plan.substeps << '\n';
            os << "# pairing = " << pairing_name(config.fdtd->pairing) << '\n';
            os << "# normalized_rms = " << num(normalized_rms(field, atom)) << '\n';
            os << "omega,S_fdtd,S_atom\n";
            for (std::size_t w = 0; w < omega.size(); ++w) {
                os << num(omega[w]) << ',' << num(field.s_inc[w]) << ',' << num(atom.s_inc[w]) << '\n';
            }
            std::ostringstream name;
            name << "fdtd/point_" << std::setw(4) << std::setfill('0') << k << ".csv";
            files.push_back(write_file(dir, name.str(), os.str()));

            if (dump_field && k == 0) {
                std::ostringstream fo;
                fo << "# t re_Eplus im_Eplus re_Eminus im_Eminus\n";
                const Trajectory t = simulate_walker(model, ens, 0, r.plan.trajectory_steps());
                write_field_record(fo, run_realization(t, *config.fdtd, r.plan));
                files.push_back(write_file(dir, "fdtd/field_realization0.txt", fo.str()));
            }
            log.line("done " + context(config, k, values[k]));
        } catch (const ConfigError& e) {
            throw ConfigError(context(config, k, values[k]) + ": " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError(context(config, k, values[k]) + ": " + e.what());
        }
    }
    return finish(config, "fdtd", std::move(files));
}

std::string steady_report(const SystemParams& p)
{
    const Liouvillian l = build_liouvillian(p);
    const SteadyState ss = steady_state(l);
    const Mat3 m = second_order_cumulant(ss);
    const DriftModel drift = drift_matrix(l);
    const NoiseModel noise = svd_factorize(noise_cross_covariance(drift, m));

    std::ostringstream os;
    os << "rho_ss (ee, eg, ge, gg): ";
    for (int k = 0; k < 4; ++k) {
        os << (k ? ", " : "") << num(ss.rho(k).real()) << (ss.rho(k).imag() < 0 ? "-" : "+")
           << num(std::abs(ss.rho(k).imag())) << 'i';
    }
    os << '\n';
    os << "<sigma_->, <sigma_+>, <sigma_z>: ";
    for (int k = 0; k < 3; ++k) {
        os << (k ? ", " : "") << num(ss.means(k).real()) << (ss.means(k).imag() < 0 ? "-" : "+")
           << num(std::abs(ss.means(k).imag())) << 'i';
    }
    os << '\n';
    print_matrix(os, "M (cumulant)", m);
    print_matrix(os, "A (drift)", drift.a);
    print_matrix(os, "b", drift.b);
    print_matrix(os, "D (noise cross-covariance)", noise.d);
    print_matrix(os, "B1", noise.b1);
    print_matrix(os, "B2", noise.b2);
    os << "singular values: " << num(noise.svd.sigma(0)) << ", " << num(noise.svd.sigma(1)) << ", "
       << num(noise.svd.sigma(2)) << '\n';
    os << "spectral abscissa of A: " << num(spectral_abscissa(drift.a)) << '\n';
    return os.str();
}

void print_parameters(std::ostream& os, const ExperimentConfig& c, unsigned workers)
{
    const SystemParams p = c.point(c.sweep_values().front());
    const EnsembleConfig e = c.resolved_ensemble(p);
    const auto grid = c.omega_grid();
    auto row = [&](const std::string& k, const std::string& v) {
        os << "  " << std::left << std::setw(22) << k << v << '\n';
    };
    os << "parameters\n";
    row("rabi_energy", num(p.rabi_energy));
    row("detuning_energy", num(p.detuning_energy));
    row("t1", num(c.system.t1));
    row("t2", num(c.system.t2));
    row("hbar", num(c.system.hbar));
    if (c.power) {
        row("power", num(*c.power));
        row("eta_r", num(c.eta_r));
    }
    row("n_walkers", std::to_string(e.n_walkers));
    row("dt", num(e.dt));
    row("burn_in", num(e.burn_in));
    row("tau_max", num(e.tau_max));
    row("origins_per_walker", std::to_string(e.origins_per_walker));
    row("seed", c.seed ? std::to_string(*c.seed) : std::string("(unset)"));
    std::string methods;
    for (Method m : c.methods) {
        methods += (methods.empty() ? "" : ",") + std::string(method_name(m));
    }
    row("methods", methods);
    row("sweep", std::string(axis_name(c.sweep.axis))
        + (c.sweep.axis == SweepAxis::none ? "" : " [" + num(c.sweep.start) + ", " + num(c.sweep.stop)
            + "] step " + num(c.sweep.step) + " (" + std::to_string(c.sweep_values().size()) + " points)"));
    row("omega_grid", "[" + num(grid.front()) + ", " + num(grid.back()) + "] x " + std::to_string(grid.size()));
    row("fit", c.fit ? "yes" : "no");
    if (c.fdtd) {
        const FdtdConfig& f = *c.fdtd;
        row("fdtd.n_x", std::to_string(f.n_x));
        row("fdtd.dx", num(f.cell_size()));
        row("fdtd.courant", num(f.courant));
        row("fdtd.mu", num(f.source_center()));
        row("fdtd.sigma", num(f.sigma));
        row("fdtd.omega_c", num(f.omega_c));
        row("fdtd.probe", std::to_string(f.probe_cell()));
        row("fdtd.pairing", std::string(pairing_name(f.pairing)));
    }
    row("output", c.output_dir);
    row("workers", std::to_string(workers));
}

} // namespace sbloch
