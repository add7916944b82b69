#ifndef SBLOCH_LINALG_HPP
#define SBLOCH_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <ostream>

#include <sbloch/types.hpp>

namespace sbloch {

/// Matrix 1-norm (max absolute column sum).
template <typename Derived>
double norm1(const Eigen::MatrixBase<Derived>& m)
{
    return m.cwiseAbs().colwise().sum().maxCoeff();
}

/// Max-abs entry, used for residual checks throughout.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/**
 * Matrix exponential by scaling and squaring with a [13/13] Padé core
 * (Higham 2005). Backward error is below unit roundoff for every input, so
 * the relative accuracy on the small Liouville-space matrices is ~1e-15.
 */
template <int N>
Eigen::Matrix<cplx, N, N> expm(const Eigen::Matrix<cplx, N, N>& a)
{
    using M = Eigen::Matrix<cplx, N, N>;
    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0,
        7771770303897600.0, 1187353796428800.0, 129060195264000.0,
        10559470521600.0, 670442572800.0, 33522128640.0, 1323241920.0,
        40840800.0, 960960.0, 16380.0, 182.0, 1.0};
    constexpr double theta13 = 5.371920351148152;

    const double nrm = norm1(a);
    int s = 0;
    if (nrm > theta13) {
        s = std::max(0, static_cast<int>(std::ceil(std::log2(nrm / theta13))));
    }
    const M x = a / std::ldexp(1.0, s);
    const M id = M::Identity();
    const M x2 = x * x;
    const M x4 = x2 * x2;
    const M x6 = x4 * x2;

    const M u = x
        * (x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4
            + b[3] * x2 + b[1] * id);
    const M v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6
        + b[4] * x4 + b[2] * x2 + b[0] * id;

    M r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < s; ++k) {
        r = r * r;
    }
    return r;
}

/// Plain-text dump: one matrix row per line, entries as "re,im" separated
/// by spaces.
template <typename Derived>
void dump(std::ostream& os, const Eigen::MatrixBase<Derived>& m)
{
    const auto flags = os.flags();
    const auto prec = os.precision(17);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const cplx z = m(r, c);
            os << (c ? " " : "") << z.real() << ',' << z.imag();
        }
        os << '\n';
    }
    os.precision(prec);
    os.flags(flags);
}

} // namespace sbloch

#endif
