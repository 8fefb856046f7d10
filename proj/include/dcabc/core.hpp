#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace dcabc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A point in parameter space. Coordinates flagged log_scale hold the log of a
// positive parameter; samplers always move in these inference coordinates.
class ParameterVector {
public:
    ParameterVector() = default;
    ParameterVector(Vector values, std::vector<std::string> names, std::vector<bool> log_scale);
    // All coordinates on their natural scale.
    ParameterVector(Vector values, std::vector<std::string> names);

    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
    const Vector& values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<bool>& log_scale() const noexcept { return log_scale_; }

    // Value on the natural scale (exp of log-scale coordinates).
    double natural(std::size_t i) const;

    ParameterVector with_values(Vector values) const;

private:
    Vector values_;
    std::vector<std::string> names_;
    std::vector<bool> log_scale_;
};

// Observations y_0..y_n at epochs t_0..t_n, one row per epoch.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<double> times, Matrix observations);

    std::size_t rows() const noexcept { return times_.size(); }
    Eigen::Index dim() const noexcept { return observations_.cols(); }
    const std::vector<double>& times() const noexcept { return times_; }
    const Matrix& observations() const noexcept { return observations_; }
    Eigen::Ref<const Vector> column(Eigen::Index c) const { return observations_.col(c); }

private:
    std::vector<double> times_;
    Matrix observations_;
};

// Piecewise-constant threshold schedule; breakpoints are 1-based iterations.
class DeltaSchedule {
public:
    DeltaSchedule() = default;
    explicit DeltaSchedule(std::vector<std::pair<long, double>> breakpoints);
    static DeltaSchedule constant(double delta) { return DeltaSchedule({{1, delta}}); }

    const std::vector<std::pair<long, double>>& breakpoints() const noexcept { return breakpoints_; }
    double final_delta() const { return breakpoints_.back().second; }
    // First iteration at which the final threshold is active.
    long final_start() const { return breakpoints_.back().first; }

private:
    std::vector<std::pair<long, double>> breakpoints_;
};

class CloneSchedule {
public:
    CloneSchedule() = default;
    explicit CloneSchedule(std::vector<std::pair<long, int>> breakpoints);
    static CloneSchedule constant(int k) { return CloneSchedule({{1, k}}); }

    const std::vector<std::pair<long, int>>& breakpoints() const noexcept { return breakpoints_; }
    int final_clones() const { return breakpoints_.back().second; }

private:
    std::vector<std::pair<long, int>> breakpoints_;
};

double active_delta(const DeltaSchedule& schedule, long iteration);
int active_clones(const CloneSchedule& schedule, long iteration);

struct TraceRow {
    long iteration = 0;
    double delta = 0.0;
    int clones = 1;
    bool accepted = false;
    Vector theta;
    // log q* of the state held after this iteration.
    double log_kernel = 0.0;
    // Number of clones that produced log_kernel; must equal `clones`.
    int kernel_clones = 1;
    // Mean simulated summary of the current state (empty for likelihood-based chains).
    Vector summary;
};

// Maximal run of iterations sharing one (delta, K) pair.
struct Regime {
    double delta = 0.0;
    int clones = 1;
    long first = 0;  // first iteration (inclusive)
    long last = 0;   // last iteration (inclusive)
    long accepted = 0;

    long length() const { return last - first + 1; }
    double acceptance_rate() const { return length() > 0 ? double(accepted) / double(length()) : 0.0; }
};

class ChainTrace {
public:
    explicit ChainTrace(std::vector<std::string> names = {}) : names_(std::move(names)) {}

    void push(TraceRow row);

    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<TraceRow>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    const std::vector<Regime>& regimes() const noexcept { return regimes_; }

    // Draws (one per row) of rows in [first, last], as a matrix.
    Matrix draws(long first, long last) const;
    // Rows of the given regime after dropping the leading burn-in fraction.
    std::pair<long, long> post_burnin(const Regime& regime, double burnin_fraction) const;

private:
    std::vector<std::string> names_;
    std::vector<TraceRow> rows_;
    std::vector<Regime> regimes_;
};

// `iter,delta,K,accepted,theta_1..theta_d,log_kernel` with 17 significant digits.
void write_trace_header(std::ostream& out, std::size_t dim);
void write_trace_row(std::ostream& out, const TraceRow& row);
void write_trace_csv(std::ostream& out, const ChainTrace& trace);

Vector sample_mean(const Matrix& draws);
// Unbiased (n-1) sample covariance; zero matrix for a single row.
Matrix sample_covariance(const Matrix& draws);

}  // namespace dcabc
