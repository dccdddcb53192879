#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace skfluct {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Quantile via bisection on the CDF; plenty accurate for plot data
inline double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) throw std::domain_error("normal_quantile: p must be in (0,1)");
    double lo = -10.0, hi = 10.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (normal_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

// Survival function of the Kolmogorov distribution,
// Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        sum += sign * std::exp(-2.0 * j * j * lambda * lambda);
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

// KS distance of the empirical CDF to Normal(mean, variance)
inline double ks_statistic(std::vector<double> sample, double mean, double variance) {
    if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    if (variance <= 0.0) throw std::invalid_argument("ks_statistic: variance must be > 0");
    std::sort(sample.begin(), sample.end());
    const double sd = std::sqrt(variance);
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double cdf = normal_cdf((sample[i] - mean) / sd);
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
    }
    return d;
}

// One-sample Kolmogorov-Smirnov test against Normal(mean, variance)
inline KsResult ks_test(const std::vector<double>& sample, double mean, double variance) {
    if (sample.size() < 50) throw std::invalid_argument("ks_test: need at least 50 samples");
    const auto [min_it, max_it] = std::minmax_element(sample.begin(), sample.end());
    if (*min_it == *max_it) throw std::invalid_argument("ks_test: degenerate sample");
    const double d = ks_statistic(sample, mean, variance);
    const double sqrtn = std::sqrt(static_cast<double>(sample.size()));
    const double lambda = (sqrtn + 0.12 + 0.11 / sqrtn) * d;
    return {d, kolmogorov_sf(lambda)};
}

struct MomentSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double skewness = 0.0;
    double mean_se = 0.0;
    double variance_se = 0.0;  // delta method
};

inline MomentSummary moment_summary(const std::vector<double>& sample) {
    if (sample.size() < 2) throw std::invalid_argument("moment_summary: need at least 2 values");
    MomentSummary s;
    s.count = sample.size();
    const double n = static_cast<double>(sample.size());
    for (double x : sample) s.mean += x;
    s.mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : sample) {
        const double d = x - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.variance = m2 * n / (n - 1.0);
    s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    s.mean_se = std::sqrt(s.variance / n);
    const double var_of_var = (m4 - (n - 3.0) / (n - 1.0) * m2 * m2) / n;
    s.variance_se = var_of_var > 0.0 ? std::sqrt(var_of_var) : 0.0;
    return s;
}

inline double median(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("median: empty sample");
    std::sort(sample.begin(), sample.end());
    const std::size_t n = sample.size();
    return n % 2 == 1 ? sample[n / 2] : 0.5 * (sample[n / 2 - 1] + sample[n / 2]);
}

inline double quantile(std::vector<double> sample, double q) {
    if (sample.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(sample.begin(), sample.end());
    const double pos = q * (static_cast<double>(sample.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sample.size()) return sample.back();
    const double frac = pos - static_cast<double>(lo);
    return sample[lo] * (1.0 - frac) + sample[lo + 1] * frac;
}

}  // namespace skfluct
