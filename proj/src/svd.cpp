#include <sbloch/svd.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <sbloch/errors.hpp>

namespace sbloch {

namespace {

// Extends the columns flagged in `valid` to an orthonormal basis.
void complete_unitary(Mat3& u, const std::array<bool, 3>& valid)
{
    for (int k = 0; k < 3; ++k) {
        if (valid[k]) {
            continue;
        }
        for (int e = 0; e < 3; ++e) {
            Vec3 cand = Vec3::Unit(e);
            for (int j = 0; j < 3; ++j) {
                if (j != k && (valid[j] || j < k)) {
                    cand -= u.col(j).dot(cand) * u.col(j);
                }
            }
            // Second pass for numerical orthogonality.
            for (int j = 0; j < 3; ++j) {
                if (j != k && (valid[j] || j < k)) {
                    cand -= u.col(j).dot(cand) * u.col(j);
                }
            }
            if (cand.norm() > 0.5) {
                u.col(k) = cand.normalized();
                break;
            }
        }
    }
}

} // namespace

Svd3 jacobi_svd(const Mat3& d, int max_sweeps)
{
    if (!d.allFinite()) {
        throw SvdFailed("jacobi_svd: non-finite input");
    }
    Mat3 g = d;
    Mat3 v = Mat3::Identity();
    constexpr double eps = std::numeric_limits<double>::epsilon();

    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        converged = true;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const double alpha = g.col(p).squaredNorm();
                const double beta = g.col(q).squaredNorm();
                const cplx gamma = g.col(p).dot(g.col(q));
                const double mag = std::abs(gamma);
                if (mag == 0.0 || mag <= eps * std::sqrt(alpha * beta)) {
                    continue;
                }
                converged = false;
                const cplx phase = gamma / mag;
                const double zeta = (beta - alpha) / (2.0 * mag);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0)
                    / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;

                const Vec3 gp = g.col(p);
                const Vec3 gq = g.col(q);
                g.col(p) = c * gp - s * std::conj(phase) * gq;
                g.col(q) = s * phase * gp + c * gq;
                const Vec3 vp = v.col(p);
                const Vec3 vq = v.col(q);
                v.col(p) = c * vp - s * std::conj(phase) * vq;
                v.col(q) = s * phase * vp + c * vq;
            }
        }
    }
    if (!converged) {
        throw SvdFailed("jacobi_svd: no convergence within sweep budget");
    }

    std::array<int, 3> order;
    std::iota(order.begin(), order.end(), 0);
    RVec3 norms(g.col(0).norm(), g.col(1).norm(), g.col(2).norm());
    std::stable_sort(order.begin(), order.end(),
        [&](int a, int b) { return norms(a) > norms(b); });

    Svd3 out;
    out.u.setZero();
    std::array<bool, 3> valid{};
    const double cutoff = norms.maxCoeff() * 3.0 * eps;
    for (int k = 0; k < 3; ++k) {
        const int src = order[k];
        out.sigma(k) = norms(src);
        out.v.col(k) = v.col(src);
        if (norms(src) > cutoff && norms(src) > 0.0) {
            out.u.col(k) = g.col(src) / norms(src);
            valid[k] = true;
        }
    }
    complete_unitary(out.u, valid);
    return out;
}

} // namespace sbloch
