#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include <sbloch/errors.hpp>
#include <sbloch/experiment.hpp>

using namespace sbloch;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("sbloch_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string error_of(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

// Columns of a spectrum CSV after the comment header.
std::vector<std::vector<double>> read_columns(const fs::path& p)
{
    std::ifstream in(p);
    std::vector<std::vector<double>> cols;
    bool header = true;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (header) {
            header = false;
            continue;
        }
        std::stringstream ss(line);
        std::size_t k = 0;
        for (std::string cell; std::getline(ss, cell, ','); ++k) {
            if (cols.size() <= k) {
                cols.emplace_back();
            }
            cols[k].push_back(std::stod(cell));
        }
    }
    return cols;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(SBLOCH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* small_config = R"(seed = 11
methods = qrt,grn

[system]
rabi_energy = 30
t1 = 400
t2 = 800

[spectrum]
half_width = 60
points = 121
)";

} // namespace

TEST_CASE("config round trip")
{
    ExperimentConfig c;
    c.system = SystemParams{30.0, -7.25, 400.0, 800.0};
    c.system.hbar = 0.1 + 0.2;
    c.ensemble.n_walkers = 12345;
    c.ensemble.dt = 1.0 / 3.0;
    c.ensemble.burn_in = 4000.5;
    c.ensemble.tau_max = 6000.0;
    c.ensemble.origins_per_walker = 3;
    c.ensemble.origin_spacing = 4000.0;
    c.sweep = SweepSpec{SweepAxis::rabi, 0.0, 60.0, 1.5};
    c.grid = SpectrumGrid{75.0, 301};
    c.methods = {Method::grn, Method::sto};
    c.fit = true;
    c.seed = 18446744073709551615ull;
    c.eta_r = 2.5e-3;
    c.power = 1e-300;
    c.output_dir = "results/run one";
    FdtdConfig f;
    f.n_x = 100;
    f.omega_c = 40.0;
    f.dx = 0.004;
    f.eps.assign(100, 1.0);
    f.eps[50] = 2.25;
    f.courant = 0.6;
    f.pairing = SourcePairing::reversed;
    c.fdtd = f;

    const std::string text = serialize_config(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(back == c);
    CHECK(serialize_config(back) == text);

    const ExperimentConfig minimal = parse_config(small_config);
    CHECK(parse_config(serialize_config(minimal)) == minimal);
    CHECK(minimal.methods == std::vector<Method>{Method::qrt, Method::grn});
    CHECK(minimal.system.hbar == hbar_ueV_ps);
    CHECK(!minimal.fdtd);
}

TEST_CASE("config errors name the field")
{
    CHECK(error_of("[system]\nt1 = abc\n").find("system.t1") == 0);
    CHECK(error_of("[system]\nt1 = -4\n").find("system.t1") == 0);
    CHECK(error_of("[system]\ncolour = red\n").find("system.colour") == 0);
    CHECK(error_of("[plots]\nx = 1\n").find("plots") == 0);
    CHECK(error_of("methods = sto,fast\n").find("methods") == 0);
    CHECK(error_of("methods = \n").find("methods") == 0);
    CHECK(error_of("[ensemble]\nn_walkers = 2.5\n").find("ensemble.n_walkers") == 0);
    CHECK(error_of("[system]\nt1 = 400\n[ensemble]\nburn_in = 10\n").find("ensemble.burn_in") == 0);
    CHECK(error_of("[sweep]\naxis = power\n").find("sweep.axis") == 0);
    CHECK(error_of("[sweep]\naxis = detuning\nstart = 1\nstop = 0\nstep = 1\n").find("sweep.stop") == 0);
    CHECK(error_of("[sweep]\naxis = rabi\nstart = 0\nstop = 10\nstep = 0\n").find("sweep.step") == 0);
    CHECK(error_of("fit = maybe\n").find("fit") == 0);
    CHECK(error_of("[fdtd]\ncourant = 1.5\n").find("fdtd") == 0);
    CHECK(error_of("[fdtd]\npairing = swapped\n").find("fdtd.pairing") == 0);
    CHECK_THROWS_AS(parse_config("[fdtd]\ncourant = 1.5\n"), CourantViolation);
    CHECK_THROWS_AS(parse_config("[system\nt1 = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("eta_r = 1\npower = -2\n"), NegativePower);
    CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("sweep values")
{
    SweepSpec s{SweepAxis::detuning, -60.0, 60.0, 2.0};
    const auto v = s.values();
    CHECK(v.size() == 61);
    CHECK(v.front() == -60.0);
    CHECK(v.back() == 60.0);
    s.step = 0.1;
    s.start = 0.0;
    s.stop = 0.3;
    CHECK(s.values().size() == 4);
    CHECK(SweepSpec{}.values().empty());

    ExperimentConfig c = parse_config(small_config);
    c.sweep = SweepSpec{SweepAxis::rabi, 0.0, 60.0, 30.0};
    CHECK(c.point(30.0).rabi_energy == 30.0);
    CHECK(c.point(30.0).detuning_energy == 0.0);
    c.sweep.axis = SweepAxis::detuning;
    CHECK(c.point(-5.0).detuning_energy == -5.0);
    CHECK(c.point(-5.0).rabi_energy == 30.0);
}

TEST_CASE("ensemble defaults derive from T1")
{
    const ExperimentConfig c = parse_config(small_config);
    const EnsembleConfig e = c.resolved_ensemble(c.system);
    CHECK(e.dt == doctest::Approx(2.0));
    CHECK(e.burn_in == doctest::Approx(4000.0));
    CHECK(e.tau_max == doctest::Approx(6000.0));
    CHECK(e.seed == 11);
}

TEST_CASE("power to Rabi energy")
{
    CHECK(power_to_rabi(0.0, 1.0) == 0.0);
    CHECK(power_to_rabi(4.0, 0.3) == doctest::Approx(2.0 * power_to_rabi(1.0, 0.3)));
    CHECK_THROWS_AS(power_to_rabi(-1.0, 0.3), NegativePower);
    CHECK_THROWS_AS(power_to_rabi(1.0, 0.0), ConfigError);

    // Calibrating η_R on the top of the power sweep (2.21 μW ↦ 57.7 μeV)
    // puts the 6.4 μeV end of the fitted-area range at (6.4/57.7)² of it.
    const double eta = 57.7 * 57.7 / (hbar_ueV_ps * 2.21);
    CHECK(power_to_rabi(2.21, eta) == doctest::Approx(57.7).epsilon(1e-12));
    const double low = 2.21 * std::pow(6.4 / 57.7, 2);
    CHECK(power_to_rabi(low, eta) == doctest::Approx(6.4).epsilon(1e-12));
    CHECK(low == doctest::Approx(0.0272).epsilon(0.01));

    ExperimentConfig c = parse_config(std::string(small_config) + "");
    c.eta_r = eta;
    c.power = 2.21;
    CHECK(c.point(0.0).rabi_energy == doctest::Approx(57.7));
}

TEST_CASE("sha256")
{
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("run experiment writes spectra and a complete manifest")
{
    ExperimentConfig c = parse_config(small_config);
    c.output_dir = scratch("oracle_pair").string();
    const SweepResult r = run_experiment(c, {});
    REQUIRE(r.points.size() == 1);

    const auto cols = read_columns(fs::path(c.output_dir) / "spectra/point_0000.csv");
    REQUIRE(cols.size() == 3);
    CHECK(cols[0].size() == 121);
    double worst = 0.0;
    double top = 0.0;
    for (std::size_t k = 0; k < cols[1].size(); ++k) {
        worst = std::max(worst, std::abs(cols[1][k] - cols[2][k]));
        top = std::max(top, std::abs(cols[1][k]));
    }
    CHECK(worst <= 1e-8 * top);

    const std::string head = slurp(fs::path(c.output_dir) / "spectra/point_0000.csv");
    CHECK(head.find("# coherent_weight_qrt = ") != std::string::npos);
    CHECK(head.find("omega_ueV,S_qrt,S_grn\n") != std::string::npos);

    const auto manifest = nlohmann::json::parse(slurp(fs::path(c.output_dir) / "manifest.json"));
    CHECK(manifest["seed"] == 11);
    std::set<std::string> listed;
    for (const auto& f : manifest["files"]) {
        const std::string path = f["path"];
        listed.insert(path);
        const std::string data = slurp(fs::path(c.output_dir) / path);
        CHECK(f["sha256"] == sha256_hex(data));
        CHECK(f["bytes"] == data.size());
    }
    for (const auto& entry : fs::recursive_directory_iterator(c.output_dir)) {
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
            CHECK(listed.contains(fs::relative(entry.path(), c.output_dir).string()));
        }
    }
    ExperimentConfig snapshot = parse_config(slurp(fs::path(c.output_dir) / "config.ini"));
    CHECK(snapshot.output_dir == "out");
    snapshot.output_dir = c.output_dir;
    CHECK(snapshot == c);
    fs::remove_all(c.output_dir);
}

TEST_CASE("stochastic sweep is byte-identical across worker counts")
{
    ExperimentConfig c = parse_config(small_config);
    c.methods = {Method::sto};
    c.ensemble.n_walkers = 300;
    c.ensemble.tau_max = 1000.0;
    c.fit = true;
    c.sweep = SweepSpec{SweepAxis::detuning, -10.0, 10.0, 10.0};
    std::vector<std::string> manifests;
    for (unsigned w : {1u, 2u, 5u}) {
        c.output_dir = scratch("det" + std::to_string(w)).string();
        run_experiment(c, RunOptions{w});
        manifests.push_back(slurp(fs::path(c.output_dir) / "map_sto.csv")
            + slurp(fs::path(c.output_dir) / "fits.csv"));
        fs::remove_all(c.output_dir);
    }
    CHECK(manifests[0] == manifests[1]);
    CHECK(manifests[0] == manifests[2]);

    c.seed.reset();
    CHECK_THROWS_AS(compute_sweep(c, {}), ConfigError);
}

TEST_CASE("steady report")
{
    const std::string s = steady_report(SystemParams{30.0, 0.0, 400.0, 800.0});
    CHECK(s.find("A (drift)") != std::string::npos);
    CHECK(s.find("singular values") != std::string::npos);
}

TEST_CASE("command line exit codes")
{
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    {
        std::ofstream(dir / "ok.ini") << small_config;
        std::ofstream(dir / "bad.ini") << "[system]\nt1 = -1\n";
        std::ofstream(dir / "courant.ini") << "[fdtd]\ncourant = 2\n";
        std::ofstream(dir / "noseed.ini") << "methods = qrt\n";
        std::ofstream(dir / "stuck.ini") << "[system]\nrabi_energy = 30\nt1 = 1e300\nt2 = 1e300\n";
    }
    const std::string out = " --out " + (dir / "out").string();
    CHECK(run_cli("validate --config " + (dir / "ok.ini").string()) == 0);
    CHECK(run_cli("validate --config " + (dir / "bad.ini").string()) == 2);
    CHECK(run_cli("validate --config " + (dir / "courant.ini").string()) == 2);
    CHECK(run_cli("spectrum --config " + (dir / "noseed.ini").string() + out) == 2);
    CHECK(run_cli("spectrum --config " + (dir / "noseed.ini").string() + " --seed 3" + out) == 0);
    CHECK(run_cli("spectrum --config " + (dir / "ok.ini").string() + " --methods qrt,bogus" + out) == 2);
    CHECK(run_cli("sweep --config " + (dir / "ok.ini").string() + out) == 2);
    CHECK(run_cli("steady --config " + (dir / "ok.ini").string()) == 0);
    CHECK(run_cli("steady --config " + (dir / "stuck.ini").string()) == 3);
    CHECK(run_cli("fdtd --config " + (dir / "ok.ini").string() + out) == 2);
    CHECK(run_cli("--bogus") == 2);
    CHECK(run_cli("steady") == 2);
    fs::remove_all(dir);
}
