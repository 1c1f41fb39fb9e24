#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "storesim/distribution.hpp"

namespace storesim {

// Regularly sampled series. Times are UTC seconds since the Unix epoch.
struct TimeSeries {
    std::int64_t start_time = 0;
    std::int64_t step_seconds = 600;
    std::vector<double> values;
    std::string label;

    std::size_t size() const { return values.size(); }
    std::int64_t time_at(std::size_t i) const {
        return start_time + static_cast<std::int64_t>(i) * step_seconds;
    }
};

enum class GapPolicy { Reject, Interpolate };

struct SchemaConfig {
    GapPolicy gaps = GapPolicy::Reject;
    // Sampling step when the file has a single row; otherwise inferred.
    std::optional<std::int64_t> step_seconds;
    // Mean-aggregate to this step after loading (a multiple of the native step).
    std::optional<std::int64_t> resample_seconds;
    std::string label;
};

// RFC3339 helpers; fractional seconds must be zero.
std::int64_t parse_rfc3339(const std::string& text);
std::string format_rfc3339(std::int64_t unix_seconds);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// CSV with header `timestamp,value_mw` (value_kw / value_gw are converted).
// Lines starting with '#' are skipped.
TimeSeries load_timeseries(const std::string& path, const SchemaConfig& cfg = {});
TimeSeries read_timeseries(std::istream& in, const SchemaConfig& cfg = {});

void emit_timeseries(const std::string& path, const TimeSeries& ts);
void write_timeseries(std::ostream& out, const TimeSeries& ts);

// Block means over factor = target/step consecutive samples; a trailing
// partial block is dropped.
TimeSeries resample_mean(const TimeSeries& ts, std::int64_t target_step_seconds);

// Elementwise wind - load; both series must share start, step and length.
TimeSeries net_generation(const TimeSeries& wind, const TimeSeries& load);

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
};

struct PredictorModel {
    std::size_t lags = 1;
    std::vector<double> coefficients;  // coefficients[k] multiplies x[t-1-k]
    double intercept = 0.0;
    IndexRange train_range;  // targets used in the fit (begin raised to at least lags)
};

struct FitOptions {
    double ridge = 1e-10;
    // A rank-deficient design (e.g. a constant series) yields the intercept-only
    // model instead of SingularDesign.
    bool allow_degenerate = false;
};

// Least squares of x[t] on (x[t-1], ..., x[t-lags]) over targets t in train_range.
PredictorModel fit_predictor(const std::vector<double>& x, std::size_t lags,
                             IndexRange train_range, const FitOptions& opts = {});
PredictorModel fit_predictor(const TimeSeries& series, std::size_t lags,
                             std::optional<IndexRange> train_range = std::nullopt,
                             const FitOptions& opts = {});

// One-step prediction of x[t]; requires t >= lags.
double predict_at(const PredictorModel& m, const std::vector<double>& x, std::size_t t);

// actual - predicted over eval_range (targets before `lags` are skipped).
TimeSeries residuals(const PredictorModel& m, const TimeSeries& series,
                     std::optional<IndexRange> eval_range = std::nullopt);

enum class LocationMode { Zero, Median };

// Scale = mean absolute deviation about the location.
LaplaceModel fit_laplace(const std::vector<double>& residuals,
                         LocationMode mode = LocationMode::Zero);

// Reference cdf with an optional left limit, for laws with atoms.
struct CdfFunction {
    std::function<double(double)> at;      // P(X <= x)
    std::function<double(double)> before;  // P(X < x); defaults to `at`

    static CdfFunction of(const Distribution& d);
};

// sup_x |F_n(x) - F(x)|, checking both one-sided limits at every sample value.
double ks_distance(std::vector<double> sample, const CdfFunction& cdf);

// AR(p) series x[t] = intercept + sum_k coeffs[k] x[t-1-k] + noise[t], started
// from its mean with a 1000-sample warm-up discarded.
TimeSeries synthetic_ar(const std::vector<double>& coeffs, double intercept,
                        const Distribution& noise, std::size_t n, std::uint64_t seed,
                        std::int64_t step_seconds = 600);

}  // namespace storesim
