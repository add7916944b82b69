#ifndef SBLOCH_PROPAGATOR_HPP
#define SBLOCH_PROPAGATOR_HPP

#include <cmath>

#include <sbloch/linalg.hpp>

namespace sbloch {

/// Caches e^{GΔt} for the most recent step so that uniform grids need a
/// single matrix exponential.
template <int N>
class StepPropagator {
public:
    using Matrix = Eigen::Matrix<cplx, N, N>;

    explicit StepPropagator(const Matrix& generator) : m_generator(generator) {}

    const Matrix& operator()(double dt)
    {
        if (!(std::abs(dt - m_dt) <= 1e-13 * std::abs(dt))) {
            m_dt = dt;
            m_prop = expm<N>(m_generator * dt);
        }
        return m_prop;
    }

private:
    Matrix m_generator;
    double m_dt = -1.0;
    Matrix m_prop;
};

} // namespace sbloch

#endif
