#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "skfluct/mixture.hpp"
#include "skfluct/rng.hpp"

namespace skfluct {

// Spin configuration in {-1,+1}^N
struct SpinConfig {
    std::vector<int> spins;

    int n() const { return static_cast<int>(spins.size()); }

    static SpinConfig all_up(int n) { return SpinConfig{std::vector<int>(n, 1)}; }

    void validate() const {
        for (int s : spins)
            if (s != 1 && s != -1)
                throw std::invalid_argument("spin config: entries must be +-1");
    }

    double overlap(const SpinConfig& o) const {
        double q = 0.0;
        for (int i = 0; i < n(); ++i) q += spins[i] * o.spins[i];
        return q / n();
    }
};

// Symmetric N x N matrix with the upper triangle stored once, so
// J_ij == J_ji holds exactly.
class GoeMatrix {
public:
    explicit GoeMatrix(int n) : n_(n), data_(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0) {
        if (n < 1) throw std::invalid_argument("goe matrix: n must be >= 1");
    }

    int n() const { return n_; }

    double operator()(int i, int j) const { return data_[index(i, j)]; }
    double& at(int i, int j) { return data_[index(i, j)]; }

    const std::vector<double>& raw_upper() const { return data_; }
    std::vector<double>& raw_upper() { return data_; }

    // dense row-major copy, handy for contraction-heavy code
    std::vector<double> dense() const {
        std::vector<double> d(static_cast<std::size_t>(n_) * n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) d[static_cast<std::size_t>(i) * n_ + j] = (*this)(i, j);
        return d;
    }

private:
    std::size_t index(int i, int j) const {
        if (i > j) std::swap(i, j);
        return static_cast<std::size_t>(i) * n_ - static_cast<std::size_t>(i) * (i - 1) / 2 +
               (j - i);
    }

    int n_;
    std::vector<double> data_;
};

// GOE sample under P_N: diagonal N(0,2), off-diagonal N(0,1), independent.
// Entries are filled row by row over the upper triangle, so the draw order
// is part of the reproducibility contract.
inline GoeMatrix sample_goe(int n, std::uint64_t seed) {
    GoeMatrix J(n);
    GaussianStream g(seed);
    const double sqrt2 = std::sqrt(2.0);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            J.at(i, j) = g.next_gaussian() * (i == j ? sqrt2 : 1.0);
    return J;
}

// GOE with mean beta sqrt(2 alpha_2) sigma_i sigma_j / sqrt(N) added to every
// entry (diagonal included; sigma_i^2 = 1). Same seed and beta = 0 reproduce
// sample_goe bit for bit.
inline GoeMatrix sample_tilted_goe(int n, const SpinConfig& sigma, double beta, double alpha2,
                                   std::uint64_t seed) {
    if (sigma.n() != n) throw std::invalid_argument("sample_tilted_goe: dimension mismatch");
    if (beta < 0.0 || alpha2 <= 0.0)
        throw std::invalid_argument("sample_tilted_goe: need beta >= 0, alpha2 > 0");
    GoeMatrix J = sample_goe(n, seed);
    const double shift = beta * std::sqrt(2.0 * alpha2) / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            J.at(i, j) += shift * sigma.spins[i] * sigma.spins[j];
    return J;
}

// Order-p coupling tensor with i.i.d. standard Gaussian entries
// (no symmetrization). H^p(sigma) = N^{-(p-1)/2} sum g_{i1..ip} sigma_{i1}..sigma_{ip}
// has Var = N for every sigma.
struct CouplingTensor {
    int p = 0;
    int n = 0;
    std::vector<double> entries;  // row-major, size n^p

    static CouplingTensor sample(int p, int n, std::uint64_t seed) {
        if (p < 3 || p > Mixture::kMaxOrder)
            throw std::invalid_argument("coupling tensor: order p out of range");
        CouplingTensor t;
        t.p = p;
        t.n = n;
        std::size_t size = 1;
        for (int i = 0; i < p; ++i) size *= static_cast<std::size_t>(n);
        t.entries.resize(size);
        GaussianStream g(seed);
        for (double& e : t.entries) e = g.next_gaussian();
        return t;
    }
};

// One sample of the quenched disorder: GOE matrix plus one tensor per p >= 3
// with alpha_p > 0. Deterministic function of (seed, mixture, N); the GOE and
// each tensor get their own child streams.
struct DisorderRealization {
    Mixture mixture;
    GoeMatrix goe;
    std::vector<CouplingTensor> tensors;
    std::uint64_t seed = 0;

    static DisorderRealization sample(const Mixture& m, int n, std::uint64_t seed) {
        DisorderRealization d{m, sample_goe(n, child_seed(seed, 2)), {}, seed};
        for (const auto& [p, a] : m.coeffs())
            if (p >= 3 && a > 0.0)
                d.tensors.push_back(CouplingTensor::sample(p, n, child_seed(seed, p)));
        return d;
    }

    int n() const { return goe.n(); }
};

// H^2_N(sigma) = (1/sqrt(2N)) sum_{i,j} J_ij sigma_i sigma_j, diagonal included
inline double h2_eval(const GoeMatrix& J, const SpinConfig& sigma) {
    const int n = J.n();
    if (sigma.n() != n) throw std::invalid_argument("h2_eval: dimension mismatch");
    double q = 0.0;
    for (int i = 0; i < n; ++i) {
        q += J(i, i);
        for (int j = i + 1; j < n; ++j) q += 2.0 * J(i, j) * sigma.spins[i] * sigma.spins[j];
    }
    return q / std::sqrt(2.0 * n);
}

// N^{-(p-1)/2} sum over all index tuples, evaluated by contracting one index
// at a time (O(N^p) total)
inline double hp_eval(const CouplingTensor& t, const SpinConfig& sigma) {
    if (sigma.n() != t.n) throw std::invalid_argument("hp_eval: dimension mismatch");
    const int n = t.n;
    std::vector<double> cur = t.entries;
    for (int level = t.p; level > 1; --level) {
        const std::size_t outer = cur.size() / n;
        std::vector<double> next(outer);
        for (std::size_t o = 0; o < outer; ++o) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += cur[o * n + k] * sigma.spins[k];
            next[o] = s;
        }
        cur.swap(next);
    }
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += cur[k] * sigma.spins[k];
    return s * std::pow(static_cast<double>(n), -0.5 * (t.p - 1));
}

// H_N(sigma) = sqrt(alpha_2) H^2 + sum_{p>=3} sqrt(alpha_p) H^p
inline double hamiltonian_eval(const DisorderRealization& d, const SpinConfig& sigma) {
    double h = std::sqrt(d.mixture.alpha2()) * h2_eval(d.goe, sigma);
    for (const auto& t : d.tensors) h += std::sqrt(d.mixture.alpha(t.p)) * hp_eval(t, sigma);
    return h;
}

// ---- binary dump/load of a disorder realization (replay of failing cases) ----

namespace detail {
constexpr std::uint32_t kDisorderMagic = 0x534b4452u;  // "SKDR"
constexpr std::uint32_t kDisorderVersion = 1;

template <class T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("disorder load: truncated file");
    return v;
}
}  // namespace detail

inline void dump_disorder(const DisorderRealization& d, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("disorder dump: cannot open " + path);
    detail::write_pod(os, detail::kDisorderMagic);
    detail::write_pod(os, detail::kDisorderVersion);
    detail::write_pod(os, static_cast<std::uint32_t>(d.n()));
    detail::write_pod(os, d.seed);
    const auto& coeffs = d.mixture.coeffs();
    detail::write_pod(os, static_cast<std::uint32_t>(coeffs.size()));
    for (const auto& [p, a] : coeffs) {
        detail::write_pod(os, static_cast<std::uint32_t>(p));
        detail::write_pod(os, a);
    }
    for (double v : d.goe.raw_upper()) detail::write_pod(os, v);
    detail::write_pod(os, static_cast<std::uint32_t>(d.tensors.size()));
    for (const auto& t : d.tensors) {
        detail::write_pod(os, static_cast<std::uint32_t>(t.p));
        for (double v : t.entries) detail::write_pod(os, v);
    }
}

inline DisorderRealization load_disorder(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("disorder load: cannot open " + path);
    if (detail::read_pod<std::uint32_t>(is) != detail::kDisorderMagic)
        throw std::runtime_error("disorder load: bad magic");
    if (detail::read_pod<std::uint32_t>(is) != detail::kDisorderVersion)
        throw std::runtime_error("disorder load: unsupported version");
    const int n = static_cast<int>(detail::read_pod<std::uint32_t>(is));
    const std::uint64_t seed = detail::read_pod<std::uint64_t>(is);
    const auto ncoef = detail::read_pod<std::uint32_t>(is);
    std::map<int, double> coeffs;
    for (std::uint32_t i = 0; i < ncoef; ++i) {
        const int p = static_cast<int>(detail::read_pod<std::uint32_t>(is));
        coeffs[p] = detail::read_pod<double>(is);
    }
    DisorderRealization d{Mixture(coeffs), GoeMatrix(n), {}, seed};
    for (double& v : d.goe.raw_upper()) v = detail::read_pod<double>(is);
    const auto ntens = detail::read_pod<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < ntens; ++i) {
        CouplingTensor t;
        t.p = static_cast<int>(detail::read_pod<std::uint32_t>(is));
        t.n = n;
        std::size_t size = 1;
        for (int j = 0; j < t.p; ++j) size *= static_cast<std::size_t>(n);
        t.entries.resize(size);
        for (double& v : t.entries) v = detail::read_pod<double>(is);
        d.tensors.push_back(std::move(t));
    }
    return d;
}

}  // namespace skfluct
