#pragma once

#include <stdexcept>

namespace mudelay {

/// An argument lies outside the domain of the operation (negative SNR, P_tgt >= 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Quadrature, root finding or fitting failed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The design problem has no solution (power constraint cannot be met, thresholds not ordered).
class InfeasibleError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// No positive root of the delay-exponent equation; the queue is unstable or degenerate.
class UnstableQueueError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Invalid experiment configuration.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mudelay
