#pragma once

#include <functional>
#include <vector>

namespace storesim {

// Adaptive 15-point Gauss-Kronrod over [a, b], split at every breakpoint that
// falls strictly inside the interval. Either end may be infinite.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::vector<double> breakpoints = {});

}  // namespace storesim
