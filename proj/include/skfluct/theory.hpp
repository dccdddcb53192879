#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "skfluct/mixture.hpp"

namespace skfluct {

// Limit parameters of the free-energy fluctuations for a given (xi, beta):
// s2 = -1/2 log(1 - 2 alpha_2 beta^2), mean shift -s2/2, and the geometric
// cycle-count means mu_k = (sqrt(2 alpha_2) beta)^k.
struct FluctParams {
    double beta = 0.0;
    double alpha2 = 0.0;
    double s2 = 0.0;
    double mean_shift = 0.0;
    std::vector<double> mu;  // mu[k-1] = mu_k, k = 1..K

    double mu_k(int k) const {
        return std::pow(std::sqrt(2.0 * alpha2) * beta, k);
    }
};

inline FluctParams fluct_params(const Mixture& m, double beta, int K) {
    if (beta < 0.0) throw std::domain_error("fluct_params: beta must be >= 0");
    if (K < 1) throw std::domain_error("fluct_params: K must be >= 1");
    const double a2 = m.alpha2();
    const double r = 2.0 * a2 * beta * beta;
    if (a2 <= 0.0)
        throw std::domain_error("fluct_params: alpha_2 must be > 0");
    if (r >= 1.0)
        throw std::domain_error("fluct_params: requires 2*alpha_2*beta^2 < 1");
    FluctParams p;
    p.beta = beta;
    p.alpha2 = a2;
    p.s2 = -0.5 * std::log1p(-r);
    p.mean_shift = -0.5 * p.s2;
    p.mu.resize(K);
    const double base = std::sqrt(2.0 * a2) * beta;
    double acc = 1.0;
    for (int k = 1; k <= K; ++k) {
        acc *= base;
        p.mu[k - 1] = acc;
    }
    return p;
}

// Var[C_{N,k}] = 2k N(N-1)...(N-k+1)/N^k, zero for k > N
inline double cycle_variance_exact(long long n, int k) {
    if (n < 1 || k < 1)
        throw std::domain_error("cycle_variance_exact: need N >= 1, k >= 1");
    if (k > n) return 0.0;
    double v = 2.0 * k;
    for (int i = 0; i < k; ++i) v *= static_cast<double>(n - i) / static_cast<double>(n);
    return v;
}

// Exact E_N[Zhat_N^2] = sum_l C(N,l) 2^-N exp(beta^2 N xi((2l-N)/N)),
// accumulated in log space.
inline double second_moment_exact(const Mixture& m, double beta, long long n) {
    if (n < 1) throw std::domain_error("second_moment_exact: N must be >= 1");
    const double b2n = beta * beta * static_cast<double>(n);
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(static_cast<std::size_t>(n) + 1);
    const double nlog2 = static_cast<double>(n) * std::log(2.0);
    double lbinom = 0.0;  // log C(n, l), updated incrementally
    for (long long l = 0; l <= n; ++l) {
        const double mag = (2.0 * static_cast<double>(l) - n) / static_cast<double>(n);
        const double t = lbinom - nlog2 + b2n * m.xi(mag);
        logs[static_cast<std::size_t>(l)] = t;
        max_term = std::max(max_term, t);
        if (l < n) lbinom += std::log(static_cast<double>(n - l)) -
                             std::log(static_cast<double>(l + 1));
    }
    double sum = 0.0;
    for (double t : logs) sum += std::exp(t - max_term);
    const double result = std::exp(max_term + std::log(sum));
    if (!std::isfinite(result))
        throw std::overflow_error("second_moment_exact: accumulator overflow");
    return result;
}

// Rademacher large-deviation rate I(a), with 0 log 0 = 0 at a = +-1
inline double rate_function(double a) {
    if (std::abs(a) > 1.0) throw std::domain_error("rate_function: |alpha| must be <= 1");
    auto half = [](double t) { return t > 0.0 ? 0.5 * t * std::log(t) : 0.0; };
    return half(1.0 + a) + half(1.0 - a);
}

namespace detail {

// Maximize f on [lo, hi] by golden-section search (f unimodal enough locally;
// called only to refine around a grid maximum).
template <class F>
double golden_max(F&& f, double lo, double hi) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80 && b - a > 1e-14; ++it) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gr * (b - a); f2 = f(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gr * (b - a); f1 = f(x1);
        }
    }
    return std::max(f1, f2);
}

// True iff g(a) = beta^2 xi(a) - I(a) stays below -1e-12 for all grid points
// with |a| >= grid step, i.e. the global maximum on [-1,1] sits at a = 0.
inline bool max_at_zero(const Mixture& m, double beta) {
    constexpr int kGridPoints = 4097;
    const double b2 = beta * beta;
    auto g = [&](double a) { return b2 * m.xi(a) - rate_function(a); };
    const double step = 2.0 / (kGridPoints - 1);
    double best = -std::numeric_limits<double>::infinity();
    double best_a = 0.0;
    for (int i = 0; i < kGridPoints; ++i) {
        const double a = -1.0 + i * step;
        if (std::abs(a) < step) continue;
        const double v = g(a);
        if (v > best) { best = v; best_a = a; }
    }
    // local refinement around the running maximum
    const double lo = std::max(best_a - step, best_a > 0 ? step : -1.0);
    const double hi = std::min(best_a + step, best_a > 0 ? 1.0 : -step);
    best = std::max(best, golden_max(g, lo, hi));
    return best < -1e-12;
}

}  // namespace detail

// Numerical beta_xi: sup of beta such that beta^2 xi(a) - I(a) has its unique
// global maximum on [-1,1] at a = 0. Bisection over [0, 1/sqrt(2 alpha_2)].
inline double beta_xi(const Mixture& m, double tol) {
    if (tol <= 0.0) throw std::domain_error("beta_xi: tol must be > 0");
    const double a2 = m.alpha2();
    if (a2 <= 0.0) throw std::domain_error("beta_xi: alpha_2 must be > 0");
    double lo = 0.0, hi = 1.0 / std::sqrt(2.0 * a2);
    if (!detail::max_at_zero(m, lo))
        throw std::runtime_error("beta_xi: no bracket in [0, 1/sqrt(2 alpha_2)]");
    if (detail::max_at_zero(m, hi)) return hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (detail::max_at_zero(m, mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Uniform-in-N bound on P(|tail of the fluctuation sum beyond K| >= x)
inline double tail_bound(const FluctParams& p, int K, double x) {
    if (x <= 0.0) throw std::domain_error("tail_bound: x must be > 0");
    const double r = 2.0 * p.alpha2 * p.beta * p.beta;
    if (r >= 1.0) throw std::domain_error("tail_bound: requires 2*alpha_2*beta^2 < 1");
    return 2.0 / (1.0 - r) * std::pow(r, K + 1) / (x * x);
}

// Smallest K >= 1 with tail_bound(K, eps) <= delta
inline int truncation_K(const FluctParams& p, double eps, double delta) {
    if (eps <= 0.0 || delta <= 0.0)
        throw std::domain_error("truncation_K: eps, delta must be > 0");
    int K = 1;
    while (tail_bound(p, K, eps) > delta) ++K;
    return K;
}

// s2_K = sum_{k<=K} mu_k^2 / (2k), nondecreasing in K with limit s2
inline double s2_truncated(const FluctParams& p, int K) {
    if (K < 1) throw std::domain_error("s2_truncated: K must be >= 1");
    const double r = 2.0 * p.alpha2 * p.beta * p.beta;
    double sum = 0.0, rk = 1.0;
    for (int k = 1; k <= K; ++k) {
        rk *= r;
        sum += rk / (2.0 * k);
    }
    return sum;
}

}  // namespace skfluct
