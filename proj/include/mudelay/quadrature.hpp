#pragma once

#include <functional>

namespace mudelay {

/// Adaptive Gauss-Kronrod integral of f over [a, b] (finite bounds).
/// Throws NumericError when the error estimate exceeds `abs_tol`.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10);

}  // namespace mudelay
