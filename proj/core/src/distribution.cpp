#include "storesim/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "storesim/errors.hpp"

namespace storesim {

double Distribution::pdf(double) const {
    throw UnsupportedModel("distribution has no density");
}

LaplaceModel::LaplaceModel(double mu, double b) : mu_(mu), b_(b) {
    if (!std::isfinite(mu)) throw InvalidArgument("Laplace location must be finite");
    if (!(b > 0.0 && std::isfinite(b))) throw InvalidArgument("Laplace scale must be positive");
}

double LaplaceModel::cdf(double x) const {
    double z = (x - mu_) / b_;
    if (z < 0.0) return 0.5 * std::exp(z);
    return 1.0 - 0.5 * std::exp(-z);
}

double LaplaceModel::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) {
        if (u == 0.0) return -INFINITY;
        if (u == 1.0) return INFINITY;
        throw InvalidArgument("quantile level must lie in [0, 1]");
    }
    if (u < 0.5) return mu_ + b_ * std::log(2.0 * u);
    return mu_ - b_ * std::log(2.0 * (1.0 - u));
}

double LaplaceModel::pdf(double x) const {
    return std::exp(-std::abs(x - mu_) / b_) / (2.0 * b_);
}

double LaplaceModel::expected_positive(double shift) const {
    double m = mu_ + shift;
    if (std::isinf(m)) return m > 0 ? INFINITY : 0.0;
    return std::max(m, 0.0) + 0.5 * b_ * std::exp(-std::abs(m) / b_);
}

double LaplaceModel::expected_negative(double shift) const {
    double m = mu_ + shift;
    if (std::isinf(m)) return m < 0 ? INFINITY : 0.0;
    return std::max(-m, 0.0) + 0.5 * b_ * std::exp(-std::abs(m) / b_);
}

double LaplaceModel::stddev() const { return std::sqrt(2.0) * b_; }

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> sample) : x_(std::move(sample)) {
    if (x_.empty()) throw InsufficientData("empirical distribution needs at least one sample");
    for (double v : x_)
        if (!std::isfinite(v)) throw InvalidArgument("empirical sample contains non-finite values");
    std::sort(x_.begin(), x_.end());
    prefix_.resize(x_.size() + 1, 0.0);
    for (std::size_t i = 0; i < x_.size(); ++i) prefix_[i + 1] = prefix_[i] + x_[i];
}

double EmpiricalDistribution::cdf(double x) const {
    auto k = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
    return static_cast<double>(k) / static_cast<double>(x_.size());
}

double EmpiricalDistribution::cdf_left(double x) const {
    auto k = std::lower_bound(x_.begin(), x_.end(), x) - x_.begin();
    return static_cast<double>(k) / static_cast<double>(x_.size());
}

double EmpiricalDistribution::quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
    double n = static_cast<double>(x_.size());
    auto k = static_cast<std::size_t>(std::ceil(u * n));
    if (k > 0) --k;
    return x_[std::min(k, x_.size() - 1)];
}

double EmpiricalDistribution::expected_positive(double shift) const {
    auto k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), -shift) - x_.begin());
    double cnt = static_cast<double>(x_.size() - k);
    return (prefix_.back() - prefix_[k] + cnt * shift) / static_cast<double>(x_.size());
}

double EmpiricalDistribution::expected_negative(double shift) const {
    auto k = static_cast<std::size_t>(std::lower_bound(x_.begin(), x_.end(), -shift) - x_.begin());
    return -(prefix_[k] + static_cast<double>(k) * shift) / static_cast<double>(x_.size());
}

double EmpiricalDistribution::mean() const {
    return prefix_.back() / static_cast<double>(x_.size());
}

double EmpiricalDistribution::stddev() const {
    double m = mean();
    double acc = 0.0;
    for (double v : x_) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(x_.size()));
}

std::string describe(const Distribution& dist) {
    char buf[96];
    if (auto* lap = dynamic_cast<const LaplaceModel*>(&dist)) {
        std::snprintf(buf, sizeof buf, "laplace(mu=%.17g,b=%.17g)", lap->mu(), lap->b());
        return buf;
    }
    if (auto* emp = dynamic_cast<const EmpiricalDistribution*>(&dist)) {
        std::snprintf(buf, sizeof buf, "empirical(n=%zu)", emp->sorted().size());
        return buf;
    }
    return "custom";
}

}  // namespace storesim
