#ifndef SBLOCH_SVD_HPP
#define SBLOCH_SVD_HPP

#include <sbloch/types.hpp>

namespace sbloch {

/// d = u · diag(sigma) · v†, sigma non-increasing and non-negative.
struct Svd3 {
    Mat3 u;
    RVec3 sigma;
    Mat3 v;
};

/// One-sided (Hestenes) Jacobi SVD of a complex 3×3 matrix. Throws
/// SvdFailed on non-finite input or when the sweep budget is exhausted.
Svd3 jacobi_svd(const Mat3& d, int max_sweeps = 60);

} // namespace sbloch

#endif
