#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "skfluct/model.hpp"
#include "skfluct/rng.hpp"

namespace skfluct {

// Streaming max-shifted log-sum-exp accumulator
class LogSumExp {
public:
    void add(double x) {
        if (count_ == 0 || x > max_) {
            if (count_ > 0) sum_ = sum_ * std::exp(max_ - x);
            sum_ += 1.0;
            max_ = x;
        } else {
            sum_ += std::exp(x - max_);
        }
        ++count_;
    }

    std::uint64_t count() const { return count_; }
    double log_sum() const { return max_ + std::log(sum_); }
    double log_mean() const {
        return log_sum() - std::log(static_cast<double>(count_));
    }

private:
    double max_ = 0.0;
    double sum_ = 0.0;
    std::uint64_t count_ = 0;
};

struct EnumLimits {
    int pure2 = 26;  // pure 2-spin mixtures
    int mixed = 20;  // any p >= 3 active
};

namespace detail {

// Incremental Hamiltonian evaluation along a single-spin-flip walk.
// For p = 2 a local-field vector h_i = sum_j J_ij sigma_j gives O(N) flips;
// for p >= 3 the flip delta enumerates the O(p N^{p-1}) tuples containing
// the flipped index.
class EnumerationState {
public:
    EnumerationState(const DisorderRealization& d, bool include_two_spin)
        : d_(&d), include_two_spin_(include_two_spin), sigma_(d.n(), 1) {
        recompute();
    }

    const std::vector<int>& sigma() const { return sigma_; }

    void flip(int s) {
        const int n = d_->n();
        if (include_two_spin_) {
            const GoeMatrix& J = d_->goe;
            quad_ += -4.0 * sigma_[s] * h_[s] + 4.0 * J(s, s);
            for (int j = 0; j < n; ++j) h_[j] -= 2.0 * sigma_[s] * J(s, j);
        }
        for (std::size_t t = 0; t < d_->tensors.size(); ++t)
            tensor_sums_[t] += tensor_flip_delta(d_->tensors[t], s);
        sigma_[s] = -sigma_[s];
    }

    // energy of the current configuration; tensors only when
    // include_two_spin is false (the H~ part used by the Gibbs sampler)
    double energy() const {
        const double n = static_cast<double>(d_->n());
        double e = 0.0;
        if (include_two_spin_)
            e += std::sqrt(d_->mixture.alpha2()) * quad_ / std::sqrt(2.0 * n);
        for (std::size_t t = 0; t < d_->tensors.size(); ++t)
            e += std::sqrt(d_->mixture.alpha(d_->tensors[t].p)) * tensor_sums_[t] *
                 std::pow(n, -0.5 * (d_->tensors[t].p - 1));
        return e;
    }

    // from-scratch recomputation; throws if the cached values have drifted
    void spot_check(double rel_tol = 1e-9) {
        const double quad_before = quad_;
        const std::vector<double> sums_before = tensor_sums_;
        recompute();
        auto close = [rel_tol](double a, double b) {
            return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
        };
        if (include_two_spin_ && !close(quad_before, quad_))
            throw std::runtime_error("enumeration state: quadratic cache drifted");
        for (std::size_t t = 0; t < sums_before.size(); ++t)
            if (!close(sums_before[t], tensor_sums_[t]))
                throw std::runtime_error("enumeration state: tensor cache drifted");
    }

private:
    void recompute() {
        const int n = d_->n();
        if (include_two_spin_) {
            const GoeMatrix& J = d_->goe;
            h_.assign(n, 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) h_[i] += J(i, j) * sigma_[j];
            quad_ = 0.0;
            for (int i = 0; i < n; ++i) quad_ += sigma_[i] * h_[i];
        }
        tensor_sums_.assign(d_->tensors.size(), 0.0);
        for (std::size_t t = 0; t < d_->tensors.size(); ++t)
            tensor_sums_[t] = tensor_raw_sum(d_->tensors[t]);
    }

    double tensor_raw_sum(const CouplingTensor& t) const {
        const int n = t.n;
        std::vector<double> cur = t.entries;
        for (int level = t.p; level >= 1; --level) {
            const std::size_t outer = cur.size() / n;
            std::vector<double> next(std::max<std::size_t>(outer, 1), 0.0);
            for (std::size_t o = 0; o < outer; ++o) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += cur[o * n + k] * sigma_[k];
                next[o] = s;
            }
            cur.swap(next);
        }
        return cur[0];
    }

    // Change of sum g_{i1..ip} sigma_{i1}..sigma_{ip} when spin s flips:
    // tuples where s appears an odd number of times change sign. Tuples are
    // enumerated by the position of the first occurrence of s.
    double tensor_flip_delta(const CouplingTensor& t, int s) const {
        double acc = 0.0;
        for (int q = 0; q < t.p; ++q)
            tuple_walk(t, s, q, 0, 0, 1.0, 1, acc);
        return -2.0 * acc;
    }

    void tuple_walk(const CouplingTensor& t, int s, int q, int pos, std::size_t idx,
                    double prod, int s_count, double& acc) const {
        const int n = t.n;
        if (pos == t.p) {
            if (s_count % 2 == 1) acc += t.entries[idx] * prod;
            return;
        }
        if (pos == q) {
            tuple_walk(t, s, q, pos + 1, idx * n + s, prod * sigma_[s], s_count, acc);
        } else if (pos < q) {
            for (int j = 0; j < n; ++j)
                if (j != s)
                    tuple_walk(t, s, q, pos + 1, idx * n + j, prod * sigma_[j], s_count, acc);
        } else {
            for (int j = 0; j < n; ++j)
                tuple_walk(t, s, q, pos + 1, idx * n + j, prod * sigma_[j],
                           s_count + (j == s ? 1 : 0), acc);
        }
    }

    const DisorderRealization* d_;
    bool include_two_spin_;
    std::vector<int> sigma_;
    std::vector<double> h_;
    double quad_ = 0.0;
    std::vector<double> tensor_sums_;
};

inline void check_enumerable(const DisorderRealization& d, const EnumLimits& limits) {
    const int cap = d.tensors.empty() ? limits.pure2 : limits.mixed;
    if (d.n() > cap)
        throw std::invalid_argument("enumeration: N = " + std::to_string(d.n()) +
                                    " exceeds limit " + std::to_string(cap));
}

}  // namespace detail

// F_N = log( 2^-N sum_sigma exp(beta H(sigma)) ), exact by Gray-code
// traversal of {+-1}^N with log-sum-exp accumulation
inline double free_energy_exact(const DisorderRealization& d, double beta,
                                const EnumLimits& limits = {}) {
    if (beta < 0.0) throw std::domain_error("free_energy_exact: beta must be >= 0");
    detail::check_enumerable(d, limits);
    const int n = d.n();
    detail::EnumerationState state(d, /*include_two_spin=*/true);
    LogSumExp acc;
    acc.add(beta * state.energy());
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t t = 1; t < total; ++t) {
        state.flip(std::countr_zero(t));
        if ((t & 0xffffu) == 0) state.spot_check();
        acc.add(beta * state.energy());
    }
    return acc.log_mean();
}

// F_N - N beta^2 xi(1) / 2  (= log Zhat_N)
inline double recentered_free_energy(const DisorderRealization& d, double beta,
                                     const EnumLimits& limits = {}) {
    return free_energy_exact(d, beta, limits) -
           d.n() * beta * beta * 0.5 * d.mixture.xi(1.0);
}

// Inverse-CDF draw from weights proportional to exp(logw[i]); index bit i set
// means sigma_i = -1. Exposed separately so synthetic weight vectors can be
// tested directly.
inline SpinConfig gibbs_sample_from_logweights(const std::vector<double>& logw, int n,
                                               GaussianStream& stream) {
    if (logw.size() != (std::size_t{1} << n))
        throw std::invalid_argument("gibbs sample: weight vector must have 2^N entries");
    LogSumExp norm;
    for (double w : logw) norm.add(w);
    const double logz = norm.log_sum();
    const double u = stream.next_uniform();
    double cdf = 0.0;
    std::size_t chosen = logw.size() - 1;
    for (std::size_t i = 0; i < logw.size(); ++i) {
        cdf += std::exp(logw[i] - logz);
        if (cdf >= u) {
            chosen = i;
            break;
        }
    }
    SpinConfig sigma;
    sigma.spins.resize(n);
    for (int i = 0; i < n; ++i) sigma.spins[i] = (chosen >> i) & 1 ? -1 : 1;
    return sigma;
}

// Exact Gibbs draw from the p >= 3 part: sigma with probability proportional
// to exp(beta H~(sigma)). Uniform for a pure 2-spin mixture or beta = 0.
inline SpinConfig gibbs_sample_exact(const DisorderRealization& d, double beta,
                                     std::uint64_t seed, const EnumLimits& limits = {}) {
    const int n = d.n();
    GaussianStream stream(seed);
    if (d.tensors.empty() || beta == 0.0) {
        SpinConfig sigma;
        sigma.spins.resize(n);
        for (int i = 0; i < n; ++i)
            sigma.spins[i] = (stream.next_u64() & 1) ? -1 : 1;
        return sigma;
    }
    detail::check_enumerable(d, limits);
    const std::uint64_t total = std::uint64_t{1} << n;
    std::vector<double> logw(total);
    detail::EnumerationState state(d, /*include_two_spin=*/false);
    std::uint64_t gray = 0;  // current config: bit i set => sigma_i = -1
    logw[0] = beta * state.energy();
    for (std::uint64_t t = 1; t < total; ++t) {
        const int bit = std::countr_zero(t);
        state.flip(bit);
        if ((t & 0xffffu) == 0) state.spot_check();
        gray ^= std::uint64_t{1} << bit;
        logw[gray] = beta * state.energy();
    }
    return gibbs_sample_from_logweights(logw, n, stream);
}

}  // namespace skfluct
