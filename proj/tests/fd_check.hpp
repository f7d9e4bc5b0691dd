#pragma once

#include <cmath>
#include <functional>
#include <vector>

// Central-difference gradient oracle shared by the optimizer tests. The
// reported error is the symmetric relative error ||fd - an|| / (||fd|| + ||an||),
// which stays meaningful when either vector is near zero.
inline double fd_relative_error(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x, const std::vector<double>& analytic,
                                double step = 1e-5) {
  double norm_fd = 0.0, norm_an = 0.0, norm_diff = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double hi = f(x);
    x[i] = orig - step;
    const double lo = f(x);
    x[i] = orig;
    const double fd = (hi - lo) / (2.0 * step);
    norm_fd += fd * fd;
    norm_an += analytic[i] * analytic[i];
    const double d = fd - analytic[i];
    norm_diff += d * d;
  }
  const double denom = std::sqrt(norm_fd) + std::sqrt(norm_an);
  if (denom == 0.0) return 0.0;
  return std::sqrt(norm_diff) / denom;
}
