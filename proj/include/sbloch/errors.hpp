#ifndef SBLOCH_ERRORS_HPP
#define SBLOCH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sbloch {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failures map to CLI exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class PropagationDiverged : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotHurwitz : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SvdFailed : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InsufficientSamples : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class TailNotDecayed : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class FitNotConverged : public NumericalError {
public:
    FitNotConverged(const std::string& what, double residual)
      : NumericalError(what), m_residual(residual)
    {
    }
    double residual() const { return m_residual; }

private:
    double m_residual;
};

/// Invalid input, raised at configuration time.
class ConfigError : public Error {
public:
    using Error::Error;
};

class CourantViolation : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class NegativePower : public ConfigError {
public:
    using ConfigError::ConfigError;
};

} // namespace sbloch

#endif
