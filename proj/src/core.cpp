#include "dcabc/core.hpp"
#include "dcabc/errors.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace dcabc {

ParameterVector::ParameterVector(Vector values, std::vector<std::string> names, std::vector<bool> log_scale)
    : values_(std::move(values)), names_(std::move(names)), log_scale_(std::move(log_scale)) {
    const auto d = static_cast<std::size_t>(values_.size());
    if (names_.size() != d || log_scale_.size() != d)
        throw DomainError("ParameterVector: values, names and log_scale lengths differ");
    if (!values_.allFinite()) throw DomainError("ParameterVector: non-finite value");
}

ParameterVector::ParameterVector(Vector values, std::vector<std::string> names)
    : ParameterVector(values, std::move(names), std::vector<bool>(static_cast<std::size_t>(values.size()), false)) {}

double ParameterVector::natural(std::size_t i) const {
    const double v = (*this)[i];
    return log_scale_.at(i) ? std::exp(v) : v;
}

ParameterVector ParameterVector::with_values(Vector values) const {
    return ParameterVector(std::move(values), names_, log_scale_);
}

Dataset::Dataset(std::vector<double> times, Matrix observations)
    : times_(std::move(times)), observations_(std::move(observations)) {
    if (static_cast<Eigen::Index>(times_.size()) != observations_.rows())
        throw DomainError("Dataset: observation rows do not match number of times");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1])) throw DomainError("Dataset: times must be strictly increasing");
}

DeltaSchedule::DeltaSchedule(std::vector<std::pair<long, double>> breakpoints)
    : breakpoints_(std::move(breakpoints)) {
    if (breakpoints_.empty()) throw DomainError("DeltaSchedule: no breakpoints");
    if (breakpoints_.front().first != 1) throw DomainError("DeltaSchedule: first breakpoint must start at iteration 1");
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
        if (!(breakpoints_[i].second > 0.0) || !std::isfinite(breakpoints_[i].second))
            throw DomainError("DeltaSchedule: thresholds must be positive");
        if (i > 0) {
            if (breakpoints_[i].first <= breakpoints_[i - 1].first)
                throw DomainError("DeltaSchedule: breakpoints must be strictly increasing");
            if (breakpoints_[i].second > breakpoints_[i - 1].second)
                throw DomainError("DeltaSchedule: thresholds must be non-increasing");
        }
    }
}

CloneSchedule::CloneSchedule(std::vector<std::pair<long, int>> breakpoints) : breakpoints_(std::move(breakpoints)) {
    if (breakpoints_.empty()) throw DomainError("CloneSchedule: no breakpoints");
    if (breakpoints_.front().first != 1) throw DomainError("CloneSchedule: first breakpoint must start at iteration 1");
    if (breakpoints_.front().second != 1) throw DomainError("CloneSchedule: the first K must be 1");
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
        if (breakpoints_[i].second < 1) throw DomainError("CloneSchedule: K must be a positive integer");
        if (i > 0) {
            if (breakpoints_[i].first <= breakpoints_[i - 1].first)
                throw DomainError("CloneSchedule: breakpoints must be strictly increasing");
            if (breakpoints_[i].second <= breakpoints_[i - 1].second)
                throw DomainError("CloneSchedule: K must be strictly increasing");
        }
    }
}

namespace {
template <class T>
T lookup(const std::vector<std::pair<long, T>>& bps, long iteration) {
    if (iteration < 1) throw DomainError("schedule lookup: iteration must be >= 1");
    T value = bps.front().second;
    for (const auto& [start, v] : bps) {
        if (start > iteration) break;
        value = v;
    }
    return value;
}
}  // namespace

double active_delta(const DeltaSchedule& schedule, long iteration) { return lookup(schedule.breakpoints(), iteration); }

int active_clones(const CloneSchedule& schedule, long iteration) { return lookup(schedule.breakpoints(), iteration); }

void ChainTrace::push(TraceRow row) {
    const long expected = static_cast<long>(rows_.size()) + 1;
    if (row.iteration != expected) throw DomainError("ChainTrace: iterations must be contiguous from 1");
    if (regimes_.empty() || regimes_.back().delta != row.delta || regimes_.back().clones != row.clones) {
        regimes_.push_back(Regime{row.delta, row.clones, row.iteration, row.iteration, 0});
    }
    auto& r = regimes_.back();
    r.last = row.iteration;
    if (row.accepted) ++r.accepted;
    rows_.push_back(std::move(row));
}

Matrix ChainTrace::draws(long first, long last) const {
    if (first < 1 || last > static_cast<long>(rows_.size()) || first > last)
        throw DomainError("ChainTrace::draws: invalid row range");
    const auto d = rows_.front().theta.size();
    Matrix m(last - first + 1, d);
    for (long i = first; i <= last; ++i) m.row(i - first) = rows_[static_cast<std::size_t>(i - 1)].theta.transpose();
    return m;
}

std::pair<long, long> ChainTrace::post_burnin(const Regime& regime, double burnin_fraction) const {
    const long drop = static_cast<long>(std::floor(burnin_fraction * static_cast<double>(regime.length())));
    long first = regime.first + drop;
    if (first > regime.last) first = regime.last;
    return {first, regime.last};
}

namespace {
void put_double(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}
}  // namespace

void write_trace_header(std::ostream& out, std::size_t dim) {
    out << "iter,delta,K,accepted";
    for (std::size_t i = 1; i <= dim; ++i) out << ",theta_" << i;
    out << ",log_kernel\n";
}

void write_trace_row(std::ostream& out, const TraceRow& row) {
    out << row.iteration << ',';
    put_double(out, row.delta);
    out << ',' << row.clones << ',' << (row.accepted ? 1 : 0);
    for (Eigen::Index i = 0; i < row.theta.size(); ++i) {
        out << ',';
        put_double(out, row.theta[i]);
    }
    out << ',';
    put_double(out, row.log_kernel);
    out << '\n';
}

void write_trace_csv(std::ostream& out, const ChainTrace& trace) {
    if (trace.size() == 0) return;
    write_trace_header(out, static_cast<std::size_t>(trace.rows().front().theta.size()));
    for (const auto& row : trace.rows()) write_trace_row(out, row);
}

Vector sample_mean(const Matrix& draws) {
    if (draws.rows() == 0) throw DomainError("sample_mean: no rows");
    return draws.colwise().mean().transpose();
}

Matrix sample_covariance(const Matrix& draws) {
    if (draws.rows() == 0) throw DomainError("sample_covariance: no rows");
    if (draws.rows() == 1) return Matrix::Zero(draws.cols(), draws.cols());
    const Vector mean = sample_mean(draws);
    const Matrix centered = draws.rowwise() - mean.transpose();
    return (centered.transpose() * centered) / static_cast<double>(draws.rows() - 1);
}

}  // namespace dcabc
