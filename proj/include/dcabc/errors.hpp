#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dcabc {

// Precondition violated by the caller: bad dimensions, iteration < 1, etc.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Linear algebra failed (non-SPD covariance, negative variance, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A summary statistic or pilot weight has zero spread.
class DegenerateStatisticError : public std::runtime_error {
public:
    DegenerateStatisticError(const std::string& what, int coordinate = -1)
        : std::runtime_error(what), coordinate_(coordinate) {}
    int coordinate() const noexcept { return coordinate_; }

private:
    int coordinate_;
};

class RegressionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The chain stopped accepting proposals in a regime where that is fatal.
class StagnationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Carries the best point found so callers can still report it.
class OptimizationError : public std::runtime_error {
public:
    OptimizationError(const std::string& what, std::vector<double> best_point, double best_value)
        : std::runtime_error(what), best_point_(std::move(best_point)), best_value_(best_value) {}
    const std::vector<double>& best_point() const noexcept { return best_point_; }
    double best_value() const noexcept { return best_value_; }

private:
    std::vector<double> best_point_;
    double best_value_;
};

class BootstrapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dcabc
