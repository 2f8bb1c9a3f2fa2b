#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace hsk {

class RngStream;

/// Monte Carlo output: mean, standard error, sample count and the seed the
/// estimate was produced from.
struct EstimatorResult {
    double mean = 0.0;
    double stderr_ = 0.0;
    long long n_samples = 0;
    std::uint64_t seed = 0;
};

/// Mergeable (count, sum, sum of squares) accumulator.
struct Accumulator {
    long long n = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double x) { ++n; sum += x; sumsq += x * x; }
    void merge(const Accumulator& o) { n += o.n; sum += o.sum; sumsq += o.sumsq; }

    double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
    /// Unbiased sample variance.
    double variance() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double v = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return v > 0.0 ? v : 0.0;
    }
    double stderror() const {
        return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }

    EstimatorResult result(std::uint64_t seed = 0) const {
        return {mean(), stderror(), n, seed};
    }
};

/// sqrt(sa^2 + sb^2): combined standard error of a difference.
inline double combined_sigma(double sa, double sb) { return std::hypot(sa, sb); }

/// |a - b| expressed in units of the combined standard error.
inline double gap_in_sigmas(const EstimatorResult& a, const EstimatorResult& b) {
    const double s = combined_sigma(a.stderr_, b.stderr_);
    if (s == 0.0) return a.mean == b.mean ? 0.0 : HUGE_VAL;
    return std::abs(a.mean - b.mean) / s;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Least squares fit y = intercept + slope * x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Slope of log|y| vs log x (entries with y == 0 are skipped).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct SlopeCI {
    double slope = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Bootstrap confidence interval for the log-log slope. `buckets[i]` holds
/// independent replicate means of y at abscissa x[i]; each bootstrap round
/// resamples the replicates per abscissa and refits. Interval is the
/// [2.5%, 97.5%] empirical quantile range.
SlopeCI bootstrap_loglog_slope(const std::vector<double>& x,
                               const std::vector<std::vector<double>>& buckets,
                               int n_bootstrap, RngStream& rng);

} // namespace hsk
