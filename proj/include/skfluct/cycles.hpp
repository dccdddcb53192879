#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "skfluct/model.hpp"
#include "skfluct/theory.hpp"

namespace skfluct {

// Centered weighted cycle counts C_{N,1}..C_{N,kmax} for one disorder matrix
struct CycleCountVector {
    int n = 0;
    int kmax = 0;
    std::vector<double> values;  // values[k-1] = C_{N,k}
    std::string algorithm;       // "naive" or "mobius"

    double value(int k) const { return values.at(k - 1); }
};

// sum_{k<=K} (2 mu_k C_{N,k} - mu_k^2) / (4k)
inline double fluctuation_sum(const CycleCountVector& counts, const FluctParams& params,
                              int K) {
    if (K > counts.kmax) throw std::invalid_argument("fluctuation_sum: K exceeds kmax");
    double s = 0.0;
    for (int k = 1; k <= K; ++k) {
        const double mu = params.mu_k(k);
        s += (2.0 * mu * counts.value(k) - mu * mu) / (4.0 * k);
    }
    return s;
}

namespace detail {

// ---- naive algorithm: canonical-representative enumeration ----
//
// For k >= 3 each unordered k-cycle on distinct vertices corresponds to 2k
// ordered tuples (k rotations x 2 directions); the canonical representative
// has i0 = min and i1 < i_{k-1}.

template <class Mat>
double distinct_cycle_sum_naive(const Mat& J, int n, int k) {
    if (k > n) return 0.0;
    if (k == 1) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += J(i, i);
        return s;
    }
    if (k == 2) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += 2.0 * J(i, j) * J(i, j);
        return s;
    }
    double total = 0.0;
    std::vector<int> path(k);
    std::vector<char> used(n, 0);
    // DFS over canonical tuples: path[0] = minimal index, others drawn from
    // indices above it
    auto dfs = [&](auto&& self, int depth, double prod) -> void {
        if (depth == k) {
            if (path[1] < path[k - 1]) total += prod * J(path[k - 1], path[0]) * 2.0 * k;
            return;
        }
        for (int j = path[0] + 1; j < n; ++j) {
            if (used[j]) continue;
            used[j] = 1;
            path[depth] = j;
            self(self, depth + 1, prod * J(path[depth - 1], j));
            used[j] = 0;
        }
    };
    for (int i0 = 0; i0 + k <= n; ++i0) {
        path[0] = i0;
        dfs(dfs, 1, 1.0);
    }
    return total;
}

// ---- Moebius algorithm: partition lattice + quotient contraction ----

struct QuotientClass {
    std::vector<std::pair<int, int>> edges;  // cycle edges on block labels, a <= b
    int blocks = 0;
    long long weight = 0;  // sum of Moebius weights over the iso class
};

// All set partitions of {0..k-1} via restricted growth strings, grouped into
// isomorphism classes of the quotient multigraph (f depends only on the
// class; the Moebius weight depends only on block sizes, which isomorphism
// preserves).
inline std::vector<QuotientClass> build_partition_classes(int k) {
    std::map<std::vector<std::pair<int, int>>, QuotientClass> classes;
    std::vector<int> rgs(k, 0);
    std::vector<int> perm;

    auto canonical_key = [&](const std::vector<std::pair<int, int>>& edges, int b) {
        std::vector<std::pair<int, int>> best;
        perm.resize(b);
        std::iota(perm.begin(), perm.end(), 0);
        do {
            std::vector<std::pair<int, int>> relabeled(edges.size());
            for (std::size_t i = 0; i < edges.size(); ++i) {
                int a = perm[edges[i].first], c = perm[edges[i].second];
                relabeled[i] = {std::min(a, c), std::max(a, c)};
            }
            std::sort(relabeled.begin(), relabeled.end());
            if (best.empty() || relabeled < best) best = std::move(relabeled);
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    };

    auto emit = [&]() {
        const int b = *std::max_element(rgs.begin(), rgs.end()) + 1;
        std::vector<int> block_size(b, 0);
        for (int m = 0; m < k; ++m) ++block_size[rgs[m]];
        long long w = 1;
        for (int size : block_size) {
            long long fac = 1;
            for (int i = 2; i < size; ++i) fac *= i;
            w *= (size % 2 == 1 ? 1 : -1) * fac;
        }
        std::vector<std::pair<int, int>> edges(k);
        for (int m = 0; m < k; ++m) {
            int a = rgs[m], c = rgs[(m + 1) % k];
            edges[m] = {std::min(a, c), std::max(a, c)};
        }
        auto key = canonical_key(edges, b);
        auto& cls = classes[key];
        if (cls.weight == 0) {
            cls.edges = key;
            cls.blocks = b;
        }
        cls.weight += w;
    };

    auto gen = [&](auto&& self, int pos, int maxv) -> void {
        if (pos == k) {
            emit();
            return;
        }
        for (int v = 0; v <= maxv + 1; ++v) {
            rgs[pos] = v;
            self(self, pos + 1, std::max(maxv, v));
        }
    };
    rgs[0] = 0;
    gen(gen, 1, 0);

    std::vector<QuotientClass> out;
    for (auto& [key, cls] : classes)
        if (cls.weight != 0) out.push_back(std::move(cls));
    return out;
}

inline const std::vector<QuotientClass>& partition_classes(int k) {
    // built once, then shared read-only across threads
    static const std::vector<std::vector<QuotientClass>> cache = [] {
        std::vector<std::vector<QuotientClass>> c(9);
        for (int kk = 1; kk <= 8; ++kk) c[kk] = build_partition_classes(kk);
        return c;
    }();
    if (k < 1 || k > 8) throw std::invalid_argument("partition classes: k must be in [1,8]");
    return cache[k];
}

// Multilinear contraction of the quotient multigraph by greedy variable
// elimination (min resulting scope, ties to the lowest block index).
// Loops on a block become unary diagonal factors.
template <class T, class Mat>
T contract_quotient(const std::vector<std::pair<int, int>>& edges, int blocks, int n,
                    const Mat& J) {
    struct Factor {
        std::vector<int> scope;  // sorted block ids
        std::vector<T> data;     // row-major by scope order
    };
    std::vector<Factor> factors;
    for (auto [a, b] : edges) {
        Factor f;
        if (a == b) {
            f.scope = {a};
            f.data.resize(n);
            for (int x = 0; x < n; ++x) f.data[x] = J(x, x);
        } else {
            f.scope = {a, b};
            f.data.resize(static_cast<std::size_t>(n) * n);
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y) f.data[static_cast<std::size_t>(x) * n + y] = J(x, y);
        }
        factors.push_back(std::move(f));
    }

    std::vector<char> alive(blocks, 1);
    std::vector<int> scratch;
    for (int step = 0; step < blocks; ++step) {
        // pick the variable whose elimination leaves the smallest scope
        int best_v = -1;
        std::size_t best_size = ~std::size_t{0};
        for (int v = 0; v < blocks; ++v) {
            if (!alive[v]) continue;
            scratch.clear();
            for (const auto& f : factors)
                if (std::find(f.scope.begin(), f.scope.end(), v) != f.scope.end())
                    scratch.insert(scratch.end(), f.scope.begin(), f.scope.end());
            std::sort(scratch.begin(), scratch.end());
            scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
            if (scratch.size() - 1 < best_size) {
                best_size = scratch.size() - 1;
                best_v = v;
            }
        }
        const int v = best_v;
        alive[v] = 0;

        std::vector<Factor> involved, rest;
        for (auto& f : factors)
            (std::find(f.scope.begin(), f.scope.end(), v) != f.scope.end() ? involved : rest)
                .push_back(std::move(f));
        factors = std::move(rest);
        if (involved.empty()) continue;  // isolated variable cannot occur for cycle quotients

        std::vector<int> uni;
        for (const auto& f : involved) uni.insert(uni.end(), f.scope.begin(), f.scope.end());
        std::sort(uni.begin(), uni.end());
        uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
        if (uni.size() > 6)
            throw std::runtime_error("contract_quotient: intermediate tensor arity too large");

        std::vector<int> out_scope;
        for (int u : uni)
            if (u != v) out_scope.push_back(u);

        // strides of each involved factor w.r.t. the union scope
        std::vector<std::vector<std::size_t>> stride(involved.size(),
                                                     std::vector<std::size_t>(uni.size(), 0));
        for (std::size_t fi = 0; fi < involved.size(); ++fi) {
            const auto& scope = involved[fi].scope;
            std::size_t s = 1;
            for (int pos = static_cast<int>(scope.size()) - 1; pos >= 0; --pos) {
                const auto where =
                    std::find(uni.begin(), uni.end(), scope[pos]) - uni.begin();
                stride[fi][static_cast<std::size_t>(where)] = s;
                s *= static_cast<std::size_t>(n);
            }
        }
        const std::size_t v_pos =
            static_cast<std::size_t>(std::find(uni.begin(), uni.end(), v) - uni.begin());

        std::size_t out_size = 1;
        for (std::size_t i = 0; i < out_scope.size(); ++i) out_size *= n;
        Factor out{std::move(out_scope), std::vector<T>(out_size, T{})};

        // odometer over the union scope; the eliminated variable is summed out
        std::vector<int> assign(uni.size(), 0);
        std::vector<std::size_t> offs(involved.size(), 0);
        while (true) {
            T prod = T{1};
            for (std::size_t fi = 0; fi < involved.size(); ++fi)
                prod *= involved[fi].data[offs[fi]];
            std::size_t out_idx = 0;
            for (std::size_t i = 0; i < uni.size(); ++i)
                if (i != v_pos) out_idx = out_idx * n + assign[i];
            out.data[out_idx] += prod;

            int pos = static_cast<int>(uni.size()) - 1;
            while (pos >= 0) {
                ++assign[pos];
                for (std::size_t fi = 0; fi < involved.size(); ++fi)
                    offs[fi] += stride[fi][pos];
                if (assign[pos] < n) break;
                for (std::size_t fi = 0; fi < involved.size(); ++fi)
                    offs[fi] -= stride[fi][pos] * n;
                assign[pos] = 0;
                --pos;
            }
            if (pos < 0) break;
        }
        factors.push_back(std::move(out));
    }

    T result = T{1};
    for (const auto& f : factors) {
        if (!f.scope.empty())
            throw std::runtime_error("contract_quotient: non-scalar factor left over");
        result *= f.data[0];
    }
    return result;
}

// sum over distinct ordered k-tuples of the cycle product, via Moebius
// inversion on the partition lattice
template <class T, class Mat>
T distinct_cycle_sum_mobius(const Mat& J, int n, int k) {
    T total = T{};
    for (const auto& cls : partition_classes(k))
        total += static_cast<T>(cls.weight) * contract_quotient<T>(cls.edges, cls.blocks, n, J);
    return total;
}

struct DenseView {
    const std::vector<double>* d;
    int n;
    double operator()(int i, int j) const { return (*d)[static_cast<std::size_t>(i) * n + j]; }
};

}  // namespace detail

inline CycleCountVector cycle_counts_naive(const GoeMatrix& J, int kmax) {
    if (kmax < 1) throw std::invalid_argument("cycle_counts_naive: kmax must be >= 1");
    const int n = J.n();
    // canonical tuples per k: N(N-1)..(N-k+1)/(2k); guard the total
    double est = 0.0;
    for (int k = 1; k <= std::min(kmax, n); ++k) {
        double ff = 1.0;
        for (int i = 0; i < k; ++i) ff *= n - i;
        est += ff / (2.0 * k);
    }
    if (est > 5e7)
        throw std::invalid_argument("cycle_counts_naive: estimated " + std::to_string(est) +
                                    " canonical tuples exceeds cost guard");
    CycleCountVector out{n, kmax, std::vector<double>(kmax, 0.0), "naive"};
    for (int k = 1; k <= kmax; ++k) {
        if (k > n) continue;
        double s = detail::distinct_cycle_sum_naive(J, n, k);
        out.values[k - 1] =
            s / std::pow(static_cast<double>(n), 0.5 * k) - (k == 2 ? n - 1.0 : 0.0);
    }
    return out;
}

inline CycleCountVector cycle_counts_mobius(const GoeMatrix& J, int kmax) {
    if (kmax < 1 || kmax > 8)
        throw std::invalid_argument("cycle_counts_mobius: kmax must be in [1,8]");
    const int n = J.n();
    const std::vector<double> dense = J.dense();
    const detail::DenseView view{&dense, n};
    CycleCountVector out{n, kmax, std::vector<double>(kmax, 0.0), "mobius"};
    for (int k = 1; k <= kmax; ++k) {
        if (k > n) continue;  // distinct sum is identically zero
        const double s = detail::distinct_cycle_sum_mobius<double>(view, n, k);
        out.values[k - 1] =
            s / std::pow(static_cast<double>(n), 0.5 * k) - (k == 2 ? n - 1.0 : 0.0);
    }
    return out;
}

}  // namespace skfluct
