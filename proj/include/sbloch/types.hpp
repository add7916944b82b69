#ifndef SBLOCH_TYPES_HPP
#define SBLOCH_TYPES_HPP

#include <complex>

#include <Eigen/Dense>

namespace sbloch {

using real = double;
using cplx = std::complex<double>;

using Vec3 = Eigen::Matrix<cplx, 3, 1>;
using Vec4 = Eigen::Matrix<cplx, 4, 1>;
using RVec3 = Eigen::Matrix<double, 3, 1>;
using Mat2 = Eigen::Matrix<cplx, 2, 2>;
using Mat3 = Eigen::Matrix<cplx, 3, 3>;
using Mat4 = Eigen::Matrix<cplx, 4, 4>;
using Mat34 = Eigen::Matrix<cplx, 3, 4>;
using Mat43 = Eigen::Matrix<cplx, 4, 3>;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double pi = 3.14159265358979323846;

/// Reduced Planck constant in μeV·ps (0.658 μeV·ns).
inline constexpr double hbar_ueV_ps = 658.211951;

/// Pseudospin component index, basis order (−, +, z).
enum class Spin : int { minus = 0, plus = 1, z = 2 };

inline constexpr int index(Spin s) { return static_cast<int>(s); }

} // namespace sbloch

#endif
