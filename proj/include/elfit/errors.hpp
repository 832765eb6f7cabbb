#pragma once

#include <stdexcept>
#include <string>

namespace elfit {

/// Cholesky pivot collapsed relative to the matrix scale: the system lost
/// rank (e.g. duplicate points), which is a construction failure rather
/// than a programming error.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(int pivot_index, const std::string& what)
      : std::runtime_error(what), pivot_index_(pivot_index) {}
  int pivot_index() const noexcept { return pivot_index_; }

 private:
  int pivot_index_;
};

/// Eigen-iteration exhausted its iteration cap before meeting the
/// requested residual tolerance.
class NotConverged : public std::runtime_error {
 public:
  NotConverged(int iterations, const std::string& what)
      : std::runtime_error(what), iterations_(iterations) {}
  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

/// Gram matrix degenerated while solving the dual system. Wraps
/// NotPositiveDefinite; recorded as a trial status, never fatal.
class GramDegenerate : public std::runtime_error {
 public:
  GramDegenerate(int pivot_index, const std::string& what)
      : std::runtime_error(what), pivot_index_(pivot_index) {}
  int pivot_index() const noexcept { return pivot_index_; }

 private:
  int pivot_index_;
};

class DimensionTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotUnitVector : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InstanceTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnknownDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sweep configuration violated an invariant; names the offending field.
class ConfigInvalid : public std::runtime_error {
 public:
  ConfigInvalid(std::string field, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace elfit
