#ifndef TSREJECT_COMMON_HPP
#define TSREJECT_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace tsreject {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Malformed or unusable input data (files, shapes, non-finite content).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or contradictory run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numeric routine diverged or produced non-finite values.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Print a warning line to stderr (prefixed, never fatal).
void warn(const std::string& message);

/// Flatten a rows x cols window in time-major order:
/// (t0,v0), (t0,v1), ..., (t1,v0), ...
Vector flatten(const Matrix& window);

/// Inverse of flatten.
Matrix unflatten(const Vector& flat, Index rows, Index cols);

/// True when every entry of m is finite.
bool all_finite(const Matrix& m);

}  // namespace tsreject

#endif  // TSREJECT_COMMON_HPP
