#pragma once

#include <stdexcept>
#include <string>

namespace storesim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define STORESIM_DEFINE_ERROR(Name)            \
    class Name : public Error {                \
    public:                                    \
        using Error::Error;                    \
    }

STORESIM_DEFINE_ERROR(InfeasibleDecision);
STORESIM_DEFINE_ERROR(InvalidRegime);
STORESIM_DEFINE_ERROR(InvalidThresholds);
STORESIM_DEFINE_ERROR(UnsupportedModel);
STORESIM_DEFINE_ERROR(ConditionViolated);
STORESIM_DEFINE_ERROR(InvalidGrid);
STORESIM_DEFINE_ERROR(HypothesisViolated);
STORESIM_DEFINE_ERROR(UnitError);
STORESIM_DEFINE_ERROR(SingularDesign);
STORESIM_DEFINE_ERROR(InsufficientData);
STORESIM_DEFINE_ERROR(TargetInfeasible);
STORESIM_DEFINE_ERROR(EmptyTrace);
STORESIM_DEFINE_ERROR(InvalidArgument);

#undef STORESIM_DEFINE_ERROR

class NoConvergence : public Error {
public:
    NoConvergence(long iterations, double span)
        : Error("value iteration did not converge after " + std::to_string(iterations) +
                " iterations (span residual " + std::to_string(span) + ")"),
          iterations_(iterations), span_(span) {}

    long iterations() const noexcept { return iterations_; }
    double span_residual() const noexcept { return span_; }

private:
    long iterations_;
    double span_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Index range [first, last] of missing samples, relative to the series start.
class GapError : public Error {
public:
    GapError(std::size_t first, std::size_t last, const std::string& what)
        : Error(what), first_(first), last_(last) {}

    std::size_t first_missing() const noexcept { return first_; }
    std::size_t last_missing() const noexcept { return last_; }

private:
    std::size_t first_;
    std::size_t last_;
};

}  // namespace storesim
