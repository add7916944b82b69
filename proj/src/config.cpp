#include <sbloch/config.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <sbloch/errors.hpp>

namespace sbloch {

namespace pt = boost::property_tree;

std::string_view axis_name(SweepAxis a)
{
    switch (a) {
    case SweepAxis::detuning:
        return "detuning";
    case SweepAxis::rabi:
        return "rabi";
    case SweepAxis::none:
        break;
    }
    return "none";
}

SweepAxis parse_axis(std::string_view name)
{
    if (name == "none") {
        return SweepAxis::none;
    }
    if (name == "detuning") {
        return SweepAxis::detuning;
    }
    if (name == "rabi") {
        return SweepAxis::rabi;
    }
    throw ConfigError("sweep.axis: expected none, detuning or rabi, got '" + std::string(name) + "'");
}

std::vector<double> SweepSpec::values() const
{
    if (axis == SweepAxis::none) {
        return {};
    }
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) {
        v[k] = start + static_cast<double>(k) * step;
    }
    return v;
}

double power_to_rabi(double p_exc, double eta_r, double hbar)
{
    if (p_exc < 0.0 || std::isnan(p_exc)) {
        throw NegativePower("power: excitation power must be >= 0");
    }
    if (!(eta_r > 0.0)) {
        throw ConfigError("eta_r: must be > 0 when power is given");
    }
    return std::sqrt(hbar * eta_r * p_exc);
}

void ExperimentConfig::validate() const
{
    auto field = [](const char* path, bool ok, const char* what) {
        if (!ok) {
            throw ConfigError(std::string(path) + ": " + what);
        }
    };
    auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };

    field("system.t1", positive(system.t1), "must be finite and > 0");
    field("system.t2", positive(system.t2), "must be finite and > 0");
    field("system.rabi_energy", system.rabi_energy >= 0.0 && std::isfinite(system.rabi_energy),
        "must be finite and >= 0");
    field("system.detuning_energy", std::isfinite(system.detuning_energy), "must be finite");
    field("system.hbar", positive(system.hbar), "must be finite and > 0");

    field("ensemble.n_walkers", ensemble.n_walkers >= 1, "must be >= 1");
    field("ensemble.dt", ensemble.dt >= 0.0 && std::isfinite(ensemble.dt), "must be >= 0");
    field("ensemble.burn_in", ensemble.burn_in == 0.0 || ensemble.burn_in >= 10.0 * system.t1 * (1 - 1e-12),
        "must be 0 (auto) or >= 10*T1");
    field("ensemble.tau_max", ensemble.tau_max >= 0.0 && std::isfinite(ensemble.tau_max), "must be >= 0");
    field("ensemble.origins_per_walker", ensemble.origins_per_walker >= 1, "must be >= 1");
    field("ensemble.origin_spacing",
        ensemble.origin_spacing == 0.0 || ensemble.origin_spacing >= 10.0 * system.t1 * (1 - 1e-12),
        "must be 0 (auto) or >= 10*T1");

    if (sweep.axis != SweepAxis::none) {
        field("sweep.start", std::isfinite(sweep.start), "must be finite");
        field("sweep.stop", std::isfinite(sweep.stop) && sweep.stop >= sweep.start, "must be finite and >= start");
        field("sweep.step", positive(sweep.step), "must be finite and > 0");
        field("sweep.step", (sweep.stop - sweep.start) / sweep.step < 1e5, "too many sweep points");
        if (sweep.axis == SweepAxis::rabi) {
            field("sweep.start", sweep.start >= 0.0, "Rabi energy must be >= 0");
        }
    }
    field("spectrum.half_width", grid.half_width >= 0.0 && std::isfinite(grid.half_width), "must be >= 0");
    field("spectrum.points", grid.points >= 3, "must be >= 3");
    field("methods", !methods.empty(), "at least one method required");
    field("output", !output_dir.empty(), "must not be empty");
    field("eta_r", eta_r >= 0.0 && std::isfinite(eta_r), "must be >= 0");
    if (power) {
        power_to_rabi(*power, eta_r, system.hbar);
    }
    if (fdtd) {
        try {
            fdtd->validate();
        } catch (const CourantViolation& e) {
            throw CourantViolation(std::string("fdtd: ") + e.what());
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            throw ConfigError(msg.rfind("fdtd", 0) == 0 ? msg : "fdtd: " + msg);
        }
    }
}

SystemParams ExperimentConfig::point(double sweep_value) const
{
    SystemParams p = system;
    if (power) {
        p.rabi_energy = power_to_rabi(*power, eta_r, p.hbar);
    }
    switch (sweep.axis) {
    case SweepAxis::detuning:
        p.detuning_energy = sweep_value;
        break;
    case SweepAxis::rabi:
        p.rabi_energy = sweep_value;
        break;
    case SweepAxis::none:
        break;
    }
    return p;
}

std::vector<double> ExperimentConfig::sweep_values() const
{
    std::vector<double> v = sweep.values();
    if (v.empty()) {
        v.push_back(0.0);
    }
    return v;
}

EnsembleConfig ExperimentConfig::resolved_ensemble(const SystemParams& params) const
{
    EnsembleConfig e = ensemble;
    const EnsembleConfig d = EnsembleConfig::defaults(params, ensemble.n_walkers, seed.value_or(0));
    e.seed = d.seed;
    if (e.dt == 0.0) {
        e.dt = d.dt;
    }
    if (e.burn_in == 0.0) {
        e.burn_in = d.burn_in;
    }
    if (e.tau_max == 0.0) {
        e.tau_max = d.tau_max;
    }
    return e;
}

std::vector<double> ExperimentConfig::omega_grid() const
{
    double half = grid.half_width;
    if (half == 0.0) {
        double gen = 0.0;
        double width = 0.0;
        for (double v : sweep_values()) {
            const SystemParams p = point(v);
            gen = std::max(gen, std::hypot(p.rabi_energy, p.detuning_energy));
            width = std::max(width, p.hbar * 0.5 * (p.gamma1() + p.gamma2()));
        }
        half = 2.0 * gen + 20.0 * width;
    }
    return symmetric_grid(half, grid.points);
}

bool ExperimentConfig::has(Method m) const
{
    return std::find(methods.begin(), methods.end(), m) != methods.end();
}

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double x)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

// Reads keys of one section, rejecting anything not in the schema.
class Section {
public:
    Section(const pt::ptree* tree, std::string name) : m_tree(tree), m_name(std::move(name)) {}

    bool present() const { return m_tree != nullptr; }

    std::optional<std::string> raw(const std::string& key)
    {
        m_known.insert(key);
        if (!m_tree) {
            return std::nullopt;
        }
        const auto it = m_tree->find(key);
        if (it == m_tree->not_found()) {
            return std::nullopt;
        }
        return trim(it->second.data());
    }

    void number(const std::string& key, double& out)
    {
        if (const auto v = raw(key)) {
            out = parse_double(key, *v);
        }
    }

    void count(const std::string& key, std::size_t& out)
    {
        if (const auto v = raw(key)) {
            out = static_cast<std::size_t>(parse_u64(key, *v));
        }
    }

    void flag(const std::string& key, bool& out)
    {
        if (const auto v = raw(key)) {
            if (*v == "true" || *v == "1" || *v == "yes") {
                out = true;
            } else if (*v == "false" || *v == "0" || *v == "no") {
                out = false;
            } else {
                throw ConfigError(path(key) + ": expected a boolean, got '" + *v + "'");
            }
        }
    }

    double parse_double(const std::string& key, const std::string& v) const
    {
        double x = 0.0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
            throw ConfigError(path(key) + ": expected a number, got '" + v + "'");
        }
        return x;
    }

    std::uint64_t parse_u64(const std::string& key, const std::string& v) const
    {
        std::uint64_t x = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
            throw ConfigError(path(key) + ": expected a non-negative integer, got '" + v + "'");
        }
        return x;
    }

    std::string path(const std::string& key) const
    {
        return m_name.empty() ? key : m_name + "." + key;
    }

    // Called after all known keys were requested.
    void reject_unknown(bool top_level = false) const
    {
        if (!m_tree) {
            return;
        }
        for (const auto& [key, child] : *m_tree) {
            if (top_level && !child.empty()) {
                continue; // a section, checked separately
            }
            if (!m_known.contains(key)) {
                throw ConfigError(path(key) + ": unknown key");
            }
        }
    }

private:
    const pt::ptree* m_tree;
    std::string m_name;
    std::set<std::string> m_known;
};

const pt::ptree* child(const pt::ptree& root, const std::string& name)
{
    const auto it = root.find(name);
    return it == root.not_found() ? nullptr : &it->second;
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

} // namespace

ExperimentConfig parse_config(std::string_view text)
{
    pt::ptree root;
    try {
        std::istringstream in{std::string(text)};
        pt::read_ini(in, root);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config: " + e.message() + " at line " + std::to_string(e.line()));
    }

    static const std::set<std::string> sections{"system", "ensemble", "sweep", "spectrum", "fdtd"};
    for (const auto& [key, sub] : root) {
        if (!sub.empty() && !sections.contains(key)) {
            throw ConfigError(key + ": unknown section");
        }
    }

    ExperimentConfig c;

    Section top(&root, "");
    if (const auto v = top.raw("seed")) {
        c.seed = top.parse_u64("seed", *v);
    }
    if (const auto v = top.raw("methods")) {
        c.methods.clear();
        for (const std::string& name : split_list(*v)) {
            try {
                const Method m = parse_method(name);
                if (!c.has(m)) {
                    c.methods.push_back(m);
                }
            } catch (const Error&) {
                throw ConfigError("methods: unknown method '" + name + "'");
            }
        }
    }
    top.flag("fit", c.fit);
    if (const auto v = top.raw("output")) {
        c.output_dir = *v;
    }
    top.number("eta_r", c.eta_r);
    if (const auto v = top.raw("power")) {
        c.power = top.parse_double("power", *v);
    }
    top.reject_unknown(true);

    Section sys(child(root, "system"), "system");
    sys.number("rabi_energy", c.system.rabi_energy);
    sys.number("detuning_energy", c.system.detuning_energy);
    sys.number("t1", c.system.t1);
    sys.number("t2", c.system.t2);
    sys.number("hbar", c.system.hbar);
    sys.reject_unknown();

    c.ensemble.dt = 0.0;
    Section ens(child(root, "ensemble"), "ensemble");
    ens.count("n_walkers", c.ensemble.n_walkers);
    ens.number("dt", c.ensemble.dt);
    ens.number("burn_in", c.ensemble.burn_in);
    ens.number("tau_max", c.ensemble.tau_max);
    ens.count("origins_per_walker", c.ensemble.origins_per_walker);
    ens.number("origin_spacing", c.ensemble.origin_spacing);
    ens.reject_unknown();

    Section sw(child(root, "sweep"), "sweep");
    if (const auto v = sw.raw("axis")) {
        c.sweep.axis = parse_axis(*v);
    }
    sw.number("start", c.sweep.start);
    sw.number("stop", c.sweep.stop);
    sw.number("step", c.sweep.step);
    sw.reject_unknown();

    Section sp(child(root, "spectrum"), "spectrum");
    sp.number("half_width", c.grid.half_width);
    sp.count("points", c.grid.points);
    sp.reject_unknown();

    Section fd(child(root, "fdtd"), "fdtd");
    if (fd.present()) {
        FdtdConfig f;
        fd.count("n_x", f.n_x);
        fd.number("dx", f.dx);
        fd.number("courant", f.courant);
        fd.number("mu", f.mu);
        fd.number("sigma", f.sigma);
        fd.number("omega_c", f.omega_c);
        fd.count("probe", f.probe);
        if (const auto v = fd.raw("pairing")) {
            f.pairing = parse_pairing(*v);
        }
        if (const auto v = fd.raw("eps")) {
            for (const std::string& item : split_list(*v)) {
                f.eps.push_back(fd.parse_double("eps", item));
            }
        }
        fd.reject_unknown();
        c.fdtd = f;
    }

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c)
{
    std::ostringstream os;
    if (c.seed) {
        os << "seed = " << *c.seed << '\n';
    }
    os << "methods = ";
    for (std::size_t k = 0; k < c.methods.size(); ++k) {
        os << (k ? "," : "") << method_name(c.methods[k]);
    }
    os << '\n';
    os << "fit = " << (c.fit ? "true" : "false") << '\n';
    os << "output = " << c.output_dir << '\n';
    os << "eta_r = " << format_double(c.eta_r) << '\n';
    if (c.power) {
        os << "power = " << format_double(*c.power) << '\n';
    }

    os << "\n[system]\n"
       << "rabi_energy = " << format_double(c.system.rabi_energy) << '\n'
       << "detuning_energy = " << format_double(c.system.detuning_energy) << '\n'
       << "t1 = " << format_double(c.system.t1) << '\n'
       << "t2 = " << format_double(c.system.t2) << '\n'
       << "hbar = " << format_double(c.system.hbar) << '\n';

    os << "\n[ensemble]\n"
       << "n_walkers = " << c.ensemble.n_walkers << '\n'
       << "dt = " << format_double(c.ensemble.dt) << '\n'
       << "burn_in = " << format_double(c.ensemble.burn_in) << '\n'
       << "tau_max = " << format_double(c.ensemble.tau_max) << '\n'
       << "origins_per_walker = " << c.ensemble.origins_per_walker << '\n'
       << "origin_spacing = " << format_double(c.ensemble.origin_spacing) << '\n';

    os << "\n[sweep]\n"
       << "axis = " << axis_name(c.sweep.axis) << '\n'
       << "start = " << format_double(c.sweep.start) << '\n'
       << "stop = " << format_double(c.sweep.stop) << '\n'
       << "step = " << format_double(c.sweep.step) << '\n';

    os << "\n[spectrum]\n"
       << "half_width = " << format_double(c.grid.half_width) << '\n'
       << "points = " << c.grid.points << '\n';

    if (c.fdtd) {
        const FdtdConfig& f = *c.fdtd;
        os << "\n[fdtd]\n"
           << "n_x = " << f.n_x << '\n'
           << "dx = " << format_double(f.dx) << '\n'
           << "courant = " << format_double(f.courant) << '\n'
           << "mu = " << format_double(f.mu) << '\n'
           << "sigma = " << format_double(f.sigma) << '\n'
           << "omega_c = " << format_double(f.omega_c) << '\n'
           << "probe = " << f.probe << '\n'
           << "pairing = " << pairing_name(f.pairing) << '\n';
        if (!f.eps.empty()) {
            os << "eps = ";
            for (std::size_t k = 0; k < f.eps.size(); ++k) {
                os << (k ? "," : "") << format_double(f.eps[k]);
            }
            os << '\n';
        }
    }
    return os.str();
}

} // namespace sbloch
