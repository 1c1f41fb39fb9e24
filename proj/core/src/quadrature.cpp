#include "storesim/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace storesim {

namespace {

constexpr unsigned kMaxDepth = 18;
constexpr double kRelTol = 1e-12;

double piece(const std::function<double(double)>& f, double a, double b) {
    if (!(a < b)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, kMaxDepth,
                                                                         kRelTol);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 std::vector<double> breakpoints) {
    if (a == b) return 0.0;
    if (a > b) return -integrate(f, b, a, std::move(breakpoints));

    std::vector<double> cuts;
    cuts.push_back(a);
    std::sort(breakpoints.begin(), breakpoints.end());
    for (double x : breakpoints)
        if (std::isfinite(x) && x > a && x < b && x != cuts.back()) cuts.push_back(x);
    cuts.push_back(b);

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += piece(f, cuts[i], cuts[i + 1]);
    return total;
}

}  // namespace storesim
