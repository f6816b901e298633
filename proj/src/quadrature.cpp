#include "mudelay/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mudelay/errors.hpp"

namespace mudelay {

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  if (!(a <= b) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError("integrate: bounds must be finite with a <= b");
  }
  if (a == b) return 0.0;
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  double error = 0.0;
  double l1 = 0.0;
  // A single pass sizes the relative tolerance. The adaptive rule only stops on a relative
  // criterion, which is unreachable on segments where the integrand is tiny.
  Rule::integrate(f, a, b, 0, 1e-13, &error, &l1);
  const double rel_tol = std::clamp(1e-2 * abs_tol / std::max(l1, 1e-300), 1e-13, 1e-3);
  const double value = Rule::integrate(f, a, b, 15, rel_tol, &error, &l1);
  if (!std::isfinite(value) || error > abs_tol) {
    std::ostringstream msg;
    msg << "quadrature did not converge on [" << a << ", " << b << "]: value " << value
        << ", error estimate " << error << " > " << abs_tol;
    throw NumericError(msg.str());
  }
  return value;
}

}  // namespace mudelay
