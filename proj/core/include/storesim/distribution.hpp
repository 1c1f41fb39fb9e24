#pragma once

#include <memory>
#include <string>
#include <vector>

namespace storesim {

// Marginal law of the net-generation disturbance.
class Distribution {
public:
    virtual ~Distribution() = default;

    // P(X <= x)
    virtual double cdf(double x) const = 0;
    // P(X < x); differs from cdf only at atoms.
    virtual double cdf_left(double x) const { return cdf(x); }
    virtual double quantile(double u) const = 0;

    virtual bool has_pdf() const { return false; }
    // Throws UnsupportedModel when has_pdf() is false.
    virtual double pdf(double x) const;

    // E[(X + shift)^+] and E[(X + shift)^-].
    virtual double expected_positive(double shift = 0.0) const = 0;
    virtual double expected_negative(double shift = 0.0) const = 0;

    virtual double mean() const = 0;
    virtual double stddev() const = 0;

    // Points where the density is not smooth; used to split quadrature.
    virtual std::vector<double> kinks() const { return {}; }
};

class LaplaceModel final : public Distribution {
public:
    LaplaceModel(double mu, double b);

    double mu() const { return mu_; }
    double b() const { return b_; }
    double lambda() const { return 1.0 / b_; }

    double cdf(double x) const override;
    double quantile(double u) const override;
    bool has_pdf() const override { return true; }
    double pdf(double x) const override;
    double expected_positive(double shift = 0.0) const override;
    double expected_negative(double shift = 0.0) const override;
    double mean() const override { return mu_; }
    double stddev() const override;
    std::vector<double> kinks() const override { return {mu_}; }

private:
    double mu_;
    double b_;
};

// Empirical law of a sample; cdf is the right-continuous step function.
class EmpiricalDistribution final : public Distribution {
public:
    explicit EmpiricalDistribution(std::vector<double> sample);

    const std::vector<double>& sorted() const { return x_; }

    double cdf(double x) const override;
    double cdf_left(double x) const override;
    double quantile(double u) const override;
    double expected_positive(double shift = 0.0) const override;
    double expected_negative(double shift = 0.0) const override;
    double mean() const override;
    double stddev() const override;

private:
    std::vector<double> x_;
    std::vector<double> prefix_;  // prefix_[k] = sum of the k smallest values
};

// Short human-readable label, e.g. "laplace(mu=0,b=13.99)".
std::string describe(const Distribution& dist);

}  // namespace storesim
