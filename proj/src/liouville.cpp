#include <sbloch/liouville.hpp>

#include <cmath>
#include <limits>
#include <string>

#include <sbloch/errors.hpp>
#include <sbloch/linalg.hpp>
#include <sbloch/propagator.hpp>

namespace sbloch {

void SystemParams::validate() const
{
    if (!(t1 > 0.0)) {
        throw ConfigError("system.t1 must be > 0");
    }
    if (!(t2 > 0.0)) {
        throw ConfigError("system.t2 must be > 0");
    }
    if (!(rabi_energy >= 0.0) || !std::isfinite(rabi_energy)) {
        throw ConfigError("system.rabi_energy must be finite and >= 0");
    }
    if (!std::isfinite(detuning_energy)) {
        throw ConfigError("system.detuning_energy must be finite");
    }
    if (!(hbar > 0.0)) {
        throw ConfigError("system.hbar must be > 0");
    }
}

SystemParams SystemParams::natural(double omega_r, double delta, double t1, double t2)
{
    return SystemParams{omega_r, delta, t1, t2, 1.0};
}

namespace basis {

Mat2 sigma_minus()
{
    Mat2 m = Mat2::Zero();
    m(1, 0) = 1.0;
    return m;
}

Mat2 sigma_plus()
{
    Mat2 m = Mat2::Zero();
    m(0, 1) = 1.0;
    return m;
}

Mat2 sigma_z()
{
    Mat2 m = Mat2::Zero();
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
}

Mat2 sigma_gg()
{
    Mat2 m = Mat2::Zero();
    m(1, 1) = 1.0;
    return m;
}

Mat2 identity() { return Mat2::Identity(); }

Mat2 sigma(Spin s)
{
    switch (s) {
    case Spin::minus:
        return sigma_minus();
    case Spin::plus:
        return sigma_plus();
    case Spin::z:
        return sigma_z();
    }
    return Mat2::Zero();
}

Vec4 vec(const Mat2& op)
{
    return Vec4(op(0, 0), op(0, 1), op(1, 0), op(1, 1));
}

Mat2 devec(const Vec4& v)
{
    Mat2 m;
    m << v(0), v(1), v(2), v(3);
    return m;
}

cplx inner(const Vec4& a, const Vec4& b) { return a.dot(b); }

Vec4 superket(Spin s) { return vec(sigma(s)); }

Mat4 kron(const Mat2& x, const Mat2& y)
{
    Mat4 k;
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            k.block<2, 2>(2 * r, 2 * c) = x(r, c) * y;
        }
    }
    return k;
}

Mat4 supercommutator(const Mat2& x, const Mat2& y)
{
    return kron(x, y.transpose()) - kron(y, x.transpose());
}

Mat4 superanticommutator(const Mat2& x, const Mat2& y)
{
    return kron(x, y.transpose()) + kron(y, x.transpose());
}

} // namespace basis

Mat2 build_hamiltonian(const SystemParams& params)
{
    using namespace basis;
    return 0.5
        * (params.detuning_energy * sigma_z()
            - params.rabi_energy * (sigma_plus() + sigma_minus()));
}

Liouvillian build_liouvillian(const SystemParams& params)
{
    using namespace basis;
    params.validate();

    const Mat2 h = build_hamiltonian(params);
    const Mat2 id = identity();
    Mat4 l = (-I / params.hbar) * supercommutator(h, id);

    const Mat2 jumps[2] = {
        std::sqrt(params.gamma1()) * sigma_minus(),
        std::sqrt(params.gamma2()) * 0.5 * (id + sigma_z()),
    };
    for (const Mat2& lk : jumps) {
        l += kron(lk, lk.conjugate())
            - 0.5 * superanticommutator(lk.adjoint() * lk, id);
    }
    return Liouvillian{l, params};
}

Mat2 SteadyState::density_matrix() const { return basis::devec(rho); }

Vec3 pseudospin_means(const Vec4& rho)
{
    Vec3 m;
    for (Spin s : {Spin::minus, Spin::plus, Spin::z}) {
        const Vec4 bra = basis::vec(basis::sigma(s).adjoint());
        m(index(s)) = basis::inner(bra, rho);
    }
    return m;
}

namespace {

SteadyState make_steady_state(Vec4 rho)
{
    const cplx tr = rho(0) + rho(3);
    rho /= tr;
    return SteadyState{rho, pseudospin_means(rho)};
}

} // namespace

SteadyState steady_state(const Liouvillian& liouv)
{
    Mat4 sys = liouv.matrix;
    sys.row(0) = basis::vec(basis::identity()).adjoint();
    Vec4 rhs = Vec4::Zero();
    rhs(0) = 1.0;

    Eigen::FullPivLU<Mat4> lu(sys);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
        throw SingularSystem("steady_state: trace-constrained Liouvillian is "
                             "rank-deficient (rank "
            + std::to_string(lu.rank()) + ")");
    }
    Vec4 rho = lu.solve(rhs);
    const double residual = max_abs(liouv.matrix * rho);
    const double scale = std::max(1.0, max_abs(liouv.matrix));
    if (!(residual <= 1e-10 * scale)) {
        throw SingularSystem("steady_state: residual " + std::to_string(residual)
            + " exceeds tolerance");
    }
    return make_steady_state(rho);
}

SteadyState steady_state_eigen(const Liouvillian& liouv)
{
    Eigen::ComplexEigenSolver<Mat4> es(liouv.matrix, true);
    if (es.info() != Eigen::Success) {
        throw SingularSystem("steady_state_eigen: eigensolver failed");
    }
    Eigen::Index k0 = 0;
    es.eigenvalues().cwiseAbs().minCoeff(&k0);

    // Guard against a degenerate zero eigenvalue.
    for (Eigen::Index k = 0; k < 4; ++k) {
        if (k != k0 && std::abs(es.eigenvalues()(k)) <= 1e-12 * std::max(1.0, max_abs(liouv.matrix))) {
            throw SingularSystem("steady_state_eigen: degenerate zero eigenvalue");
        }
    }
    Vec4 rho = es.eigenvectors().col(k0);
    if (std::abs(rho(0) + rho(3)) < 1e-14) {
        throw SingularSystem("steady_state_eigen: zero mode is traceless");
    }
    return make_steady_state(rho);
}

Mat3 second_order_cumulant(const SteadyState& ss)
{
    using namespace basis;
    constexpr Spin spins[] = {Spin::minus, Spin::plus, Spin::z};
    Mat3 m;
    for (Spin si : spins) {
        for (Spin sj : spins) {
            const Mat2 prod = sigma(si) * sigma(sj);
            const cplx second = inner(vec(prod.adjoint()), ss.rho);
            m(index(si), index(sj)) = second - ss.means(index(si)) * ss.means(index(sj));
        }
    }
    return m;
}

std::string_view method_name(Method m)
{
    switch (m) {
    case Method::sto:
        return "sto";
    case Method::qrt:
        return "qrt";
    case Method::grn:
        return "grn";
    }
    return "?";
}

Method parse_method(std::string_view name)
{
    if (name == "sto") {
        return Method::sto;
    }
    if (name == "qrt") {
        return Method::qrt;
    }
    if (name == "grn") {
        return Method::grn;
    }
    throw ConfigError("unknown method '" + std::string(name) + "' (expected sto, qrt or grn)");
}

std::vector<cplx> CorrelationSeries::component(Spin i, Spin j) const
{
    std::vector<cplx> out;
    out.reserve(values.size());
    for (const Mat3& c : values) {
        out.push_back(c(index(i), index(j)));
    }
    return out;
}

std::vector<double> uniform_grid(double step, std::size_t count)
{
    std::vector<double> g(count);
    for (std::size_t k = 0; k < count; ++k) {
        g[k] = static_cast<double>(k) * step;
    }
    return g;
}

std::vector<double> default_tau_grid(const SystemParams& params)
{
    return uniform_grid(params.t1 / 200.0, 15 * 200 + 1);
}

void check_time_grid(std::span<const double> grid)
{
    if (grid.empty() || grid.front() != 0.0) {
        throw ConfigError("time grid must start at 0");
    }
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] > grid[k - 1])) {
            throw ConfigError("time grid must be strictly increasing");
        }
    }
}

namespace {

// Propagates the columns of x along the grid, invoking visit(k, x) per point.
template <int Cols, typename Visit>
void propagate_columns(const Mat4& generator, Eigen::Matrix<cplx, 4, Cols> x,
    std::span<const double> grid, Visit&& visit)
{
    check_time_grid(grid);
    StepPropagator<4> prop(generator);
    const double norm0 = x.norm();
    visit(std::size_t{0}, x);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        x = prop(grid[k] - grid[k - 1]) * x;
        const double n = x.norm();
        if (!std::isfinite(n) || n > 10.0 * norm0 + std::numeric_limits<double>::min()) {
            throw PropagationDiverged("supervector norm grew by more than 10x at t = "
                + std::to_string(grid[k]));
        }
        visit(k, x);
    }
}

} // namespace

CorrelationSeries qrt_correlation(const Liouvillian& liouv, const SteadyState& ss,
    std::span<const double> tau_grid)
{
    using namespace basis;
    constexpr Spin spins[] = {Spin::minus, Spin::plus, Spin::z};

    const Mat2 rho = ss.density_matrix();
    Eigen::Matrix<cplx, 4, 3> x;
    Mat34 bras;
    for (Spin s : spins) {
        x.col(index(s)) = vec(sigma(s) * rho);
        bras.row(index(s)) = vec(sigma(s).adjoint()).adjoint();
    }
    const Mat3 disconnected = ss.means * ss.means.transpose();

    CorrelationSeries out;
    out.method = Method::qrt;
    out.tau.assign(tau_grid.begin(), tau_grid.end());
    out.values.resize(tau_grid.size());
    propagate_columns<3>(liouv.matrix, x, tau_grid,
        [&](std::size_t k, const Eigen::Matrix<cplx, 4, 3>& xs) {
            out.values[k] = bras * xs - disconnected;
        });
    return out;
}

std::vector<cplx> qrt_correlation(const Liouvillian& liouv, const SteadyState& ss,
    Spin i, Spin j, std::span<const double> tau_grid)
{
    using namespace basis;
    const Vec4 x = vec(sigma(j) * ss.density_matrix());
    const Vec4 bra = vec(sigma(i).adjoint());
    const cplx disconnected = ss.means(index(i)) * ss.means(index(j));

    std::vector<cplx> out(tau_grid.size());
    propagate_columns<1>(liouv.matrix, x, tau_grid,
        [&](std::size_t k, const Vec4& xs) { out[k] = inner(bra, xs) - disconnected; });
    return out;
}

std::vector<Vec4> propagate_density(const Liouvillian& liouv, const Vec4& rho0,
    std::span<const double> t_grid)
{
    std::vector<Vec4> out(t_grid.size());
    propagate_columns<1>(liouv.matrix, rho0, t_grid,
        [&](std::size_t k, const Vec4& x) { out[k] = x; });
    return out;
}

} // namespace sbloch
