#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace phase_replace {

using Index = Eigen::Index;

/// Dynamically sized point in R^m.
template <typename Scalar>
using Point = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Pointd = Point<double>;

template <typename Scalar>
using PointRef = Eigen::Ref<const Point<Scalar>>;

template <typename Scalar>
using PointOut = Eigen::Ref<Point<Scalar>>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A potential or field produced a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Input outside an operation's domain (nonpositive constants, degenerate w0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A precondition of the surgery or the flow does not hold.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace phase_replace
