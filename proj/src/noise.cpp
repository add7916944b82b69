#include <sbloch/noise.hpp>

#include <cmath>

namespace sbloch {

NoiseModel NoiseModel::zero()
{
    NoiseModel n;
    n.d.setZero();
    n.b1.setZero();
    n.b2.setZero();
    n.svd = Svd3{Mat3::Identity(), RVec3::Zero(), Mat3::Identity()};
    return n;
}

Mat3 noise_cross_covariance(const DriftModel& drift, const Mat3& m)
{
    return -(drift.a * m + m * drift.a.transpose());
}

NoiseModel svd_factorize(const Mat3& d)
{
    NoiseModel n;
    n.d = d;
    n.svd = jacobi_svd(d);

    const double floor = 1e-14 * n.svd.sigma(0);
    RVec3 root;
    for (int k = 0; k < 3; ++k) {
        root(k) = n.svd.sigma(k) > floor ? std::sqrt(n.svd.sigma(k)) : 0.0;
    }
    n.b1 = n.svd.u * root.cast<cplx>().asDiagonal();
    n.b2 = n.svd.v.conjugate() * root.cast<cplx>().asDiagonal();
    return n;
}

} // namespace sbloch
