#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace atomguide {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

using Vec2 = Vector2<double>;
using Mat2 = Matrix2<double>;

/// Unit vector at `angle` radians from the x axis.
template <typename Scalar>
Vector2<Scalar> direction(Scalar angle) {
    using std::cos;
    using std::sin;
    return {cos(angle), sin(angle)};
}

/// Left-hand normal of a direction: rotation by +90 degrees.
template <typename Derived>
auto left_normal(const Eigen::MatrixBase<Derived>& d) {
    return Vector2<typename Derived::Scalar>(-d.y(), d.x());
}

namespace detail {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace detail

/// Query point outside the scene domain.
class DomainError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

/// Inconsistent or physically invalid input parameters.
class ParameterError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Time step too coarse for the requested physics.
class TimeStepError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace atomguide
