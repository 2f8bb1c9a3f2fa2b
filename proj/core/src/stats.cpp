#include "hsk/stats.hpp"

#include <algorithm>
#include <stdexcept>

#include "hsk/random.hpp"

namespace hsk {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need at least two matched points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (y[i] == 0.0) continue;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(std::abs(y[i])));
    }
    return fit_line(lx, ly).slope;
}

SlopeCI bootstrap_loglog_slope(const std::vector<double>& x,
                               const std::vector<std::vector<double>>& buckets,
                               int n_bootstrap, RngStream& rng) {
    if (x.size() != buckets.size())
        throw std::invalid_argument("bootstrap_loglog_slope: size mismatch");
    std::vector<double> means(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double s = 0;
        for (double v : buckets[i]) s += v;
        means[i] = s / static_cast<double>(buckets[i].size());
    }
    SlopeCI out;
    out.slope = loglog_slope(x, means);

    std::vector<double> slopes;
    slopes.reserve(n_bootstrap);
    std::vector<double> resampled(x.size());
    for (int b = 0; b < n_bootstrap; ++b) {
        bool ok = true;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto& bucket = buckets[i];
            double s = 0;
            for (std::size_t k = 0; k < bucket.size(); ++k)
                s += bucket[static_cast<std::size_t>(rng.uniform() * bucket.size())];
            resampled[i] = s / static_cast<double>(bucket.size());
            if (resampled[i] == 0.0) ok = false;
        }
        if (ok) slopes.push_back(loglog_slope(x, resampled));
    }
    if (slopes.size() < 8) {
        out.lo = out.hi = out.slope;
        return out;
    }
    std::sort(slopes.begin(), slopes.end());
    const auto q = [&](double p) {
        const double idx = p * static_cast<double>(slopes.size() - 1);
        const std::size_t i0 = static_cast<std::size_t>(idx);
        const std::size_t i1 = std::min(i0 + 1, slopes.size() - 1);
        const double w = idx - static_cast<double>(i0);
        return slopes[i0] * (1.0 - w) + slopes[i1] * w;
    };
    out.lo = q(0.025);
    out.hi = q(0.975);
    return out;
}

} // namespace hsk
