#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace wcdp {

/// Monte Carlo estimate. `samples` keeps the per-scenario values so that
/// estimates computed on common scenarios can be compared pairwise.
struct BoundEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    /// Bound on the bias from resampling or truncating long horizons.
    double bias_bound = 0.0;
    std::vector<double> samples;
};

/// Mean and standard error; the summation order is fixed (index order), so
/// the result does not depend on how samples were produced.
inline BoundEstimate summarize(std::vector<double> samples, std::uint64_t seed, double offset = 0.0) {
    BoundEstimate e;
    e.seed = seed;
    e.count = samples.size();
    if (samples.empty()) return e;
    double sum = 0.0;
    for (double s : samples) sum += s;
    const double n = static_cast<double>(samples.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    e.mean = offset + mean;
    e.se = samples.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    e.samples = std::move(samples);
    return e;
}

/// Mean and standard error of the per-scenario difference a - b (common scenarios).
struct PairedDifference {
    double mean = 0.0;
    double se = 0.0;
};

inline PairedDifference paired_difference(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) d[i] = a[i] - b[i];
    d.resize(std::min(a.size(), b.size()));
    const auto s = summarize(std::move(d), 0);
    return {s.mean, s.se};
}

} // namespace wcdp
