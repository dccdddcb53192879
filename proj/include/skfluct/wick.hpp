#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace skfluct::wick {

// Edge variable J_ij, i <= j, of an n x n GOE matrix
struct Edge {
    int i = 0;
    int j = 0;

    Edge() = default;
    Edge(int a, int b) : i(std::min(a, b)), j(std::max(a, b)) {}

    bool diagonal() const { return i == j; }
    auto operator<=>(const Edge&) const = default;
};

// Monomial in the edge variables: sorted (edge, exponent) pairs
using Monomial = std::vector<std::pair<Edge, int>>;

inline Monomial monomial_mul(const Monomial& a, const Monomial& b) {
    Monomial out;
    out.reserve(a.size() + b.size());
    std::size_t ia = 0, ib = 0;
    while (ia < a.size() || ib < b.size()) {
        if (ib == b.size() || (ia < a.size() && a[ia].first < b[ib].first))
            out.push_back(a[ia++]);
        else if (ia == a.size() || b[ib].first < a[ia].first)
            out.push_back(b[ib++]);
        else {
            out.emplace_back(a[ia].first, a[ia].second + b[ib].second);
            ++ia, ++ib;
        }
    }
    return out;
}

// E[prod_e J_e^{m_e}] for independent entries: per edge, 0 if m odd,
// (m-1)!! * v^{m/2} if even, with v = 2 on the diagonal and 1 off it.
inline mpq_class monomial_expectation(const Monomial& mono, int /*n*/ = 0) {
    mpq_class result = 1;
    for (const auto& [edge, m] : mono) {
        if (m < 0) throw std::invalid_argument("monomial expectation: negative exponent");
        if (m % 2 == 1) return 0;
        mpz_class factor = 1;
        for (int t = m - 1; t >= 1; t -= 2) factor *= t;  // (m-1)!!
        if (edge.diagonal())
            for (int t = 0; t < m / 2; ++t) factor *= 2;
        result *= mpq_class(factor);
    }
    return result;
}

// Exact polynomial in {J_ij : i <= j} with rational coefficients; the overall
// N^{-half_power/2} scaling is kept symbolic so comparisons stay exact.
struct GaussianPolynomial {
    int n = 0;
    int half_power = 0;  // polynomial is scaled by n^{-half_power/2}
    std::map<Monomial, mpq_class> terms;

    void add_term(const Monomial& mono, const mpq_class& coeff) {
        auto& c = terms[mono];
        c += coeff;
        if (c == 0) terms.erase(mono);
    }

    std::size_t term_count() const { return terms.size(); }
};

// C_{N,k} as an exact polynomial: sum over cyclic words (i0..i_{k-1}, i0) of
// the centered word weight, times n^{-k/2}. Zero polynomial for k > n.
inline GaussianPolynomial cycle_count_polynomial(int n, int k) {
    if (n < 1 || n > 6) throw std::invalid_argument("cycle_count_polynomial: need 1 <= n <= 6");
    if (k < 1 || k > 8)
        throw std::invalid_argument("cycle_count_polynomial: k out of supported range");
    GaussianPolynomial poly;
    poly.n = n;
    poly.half_power = k;
    if (k > n) return poly;

    std::vector<int> word(k);
    std::vector<char> used(n, 0);
    auto emit = [&]() {
        if (k == 2) {
            // centered weight J^2 - 1
            poly.add_term({{Edge(word[0], word[1]), 2}}, 1);
            poly.add_term({}, -1);
        } else {
            Monomial mono;
            for (int m = 0; m < k; ++m)
                mono = monomial_mul(mono, {{Edge(word[m], word[(m + 1) % k]), 1}});
            poly.add_term(mono, 1);
        }
    };
    auto gen = [&](auto&& self, int pos) -> void {
        if (pos == k) {
            emit();
            return;
        }
        for (int v = 0; v < n; ++v) {
            if (used[v]) continue;
            used[v] = 1;
            word[pos] = v;
            self(self, pos + 1);
            used[v] = 0;
        }
    };
    gen(gen, 0);
    return poly;
}

// Expectation of the product of the given polynomials, exact. The combined
// n^{-sum k / 2} prefactor is folded in; an odd combined power can only
// multiply a zero expectation.
inline mpq_class exact_moment(const std::vector<GaussianPolynomial>& polys,
                              std::size_t max_terms = 2000000) {
    if (polys.empty()) return 1;
    const int n = polys[0].n;
    int total_half = 0;
    for (const auto& p : polys) {
        if (p.n != n) throw std::invalid_argument("exact_moment: dimension mismatch");
        total_half += p.half_power;
    }

    std::map<Monomial, mpq_class> product = {{Monomial{}, mpq_class(1)}};
    for (const auto& p : polys) {
        std::map<Monomial, mpq_class> next;
        for (const auto& [ma, ca] : product)
            for (const auto& [mb, cb] : p.terms) {
                auto& c = next[monomial_mul(ma, mb)];
                c += ca * cb;
            }
        if (next.size() > max_terms)
            throw std::runtime_error("exact_moment: product exceeds memory guard");
        product = std::move(next);
    }

    mpq_class raw = 0;
    for (const auto& [mono, coeff] : product) raw += coeff * monomial_expectation(mono);

    if (total_half % 2 != 0) {
        // all-even monomials have even total degree, so the expectation of an
        // odd-total-power product must vanish
        if (raw != 0)
            throw std::logic_error("exact_moment: nonzero expectation with odd n^{1/2} power");
        return 0;
    }
    mpz_class scale = 1;
    for (int t = 0; t < total_half / 2; ++t) scale *= n;
    return raw / mpq_class(scale);
}

// ---- verification of the centered word weight covariance structure ----

struct WordPair {
    std::vector<int> w;
    std::vector<int> v;
    mpq_class expectation;
    mpq_class predicted;
};

struct CovarianceReport {
    int n = 0;
    int k = 0;
    std::size_t pairs_checked = 0;
    std::vector<WordPair> violations;

    bool ok() const { return violations.empty(); }
};

namespace detail {

inline GaussianPolynomial word_weight_poly(int n, const std::vector<int>& word) {
    const int k = static_cast<int>(word.size());
    GaussianPolynomial p;
    p.n = n;
    if (k == 2) {
        p.add_term({{Edge(word[0], word[1]), 2}}, 1);
        p.add_term({}, -1);
    } else {
        Monomial mono;
        for (int m = 0; m < k; ++m)
            mono = monomial_mul(mono, {{Edge(word[m], word[(m + 1) % k]), 1}});
        p.add_term(mono, 1);
    }
    return p;
}

inline std::set<Edge> word_graph_edges(const std::vector<int>& word) {
    std::set<Edge> edges;
    const int k = static_cast<int>(word.size());
    for (int m = 0; m < k; ++m) edges.insert(Edge(word[m], word[(m + 1) % k]));
    return edges;
}

inline void enumerate_words(int n, int k, std::vector<std::vector<int>>& out) {
    std::vector<int> word(k);
    std::vector<char> used(n, 0);
    auto gen = [&](auto&& self, int pos) -> void {
        if (pos == k) {
            out.push_back(word);
            return;
        }
        for (int v = 0; v < n; ++v) {
            if (used[v]) continue;
            used[v] = 1;
            word[pos] = v;
            self(self, pos + 1);
            used[v] = 0;
        }
    };
    gen(gen, 0);
}

}  // namespace detail

// Exhaustively checks E[Jhat_w Jhat_v] over word pairs in W_{k+1}:
// zero when G_w != G_v, a_k (2 for k <= 2, 1 for k >= 3) when G_w = G_v.
inline CovarianceReport word_weight_covariance_check(int n, int k) {
    if (n < 1 || n > 5 || k < 1 || k > 4)
        throw std::invalid_argument("word_weight_covariance_check: need n <= 5, k <= 4");
    CovarianceReport report;
    report.n = n;
    report.k = k;
    std::vector<std::vector<int>> words;
    detail::enumerate_words(n, k, words);
    const mpq_class a_k = (k <= 2) ? 2 : 1;
    for (const auto& w : words) {
        const auto gw = detail::word_graph_edges(w);
        const auto pw = detail::word_weight_poly(n, w);
        for (const auto& v : words) {
            const mpq_class expect = exact_moment({pw, detail::word_weight_poly(n, v)});
            const mpq_class predicted = (gw == detail::word_graph_edges(v)) ? a_k : 0;
            ++report.pairs_checked;
            if (expect != predicted) report.violations.push_back({w, v, expect, predicted});
        }
    }
    return report;
}

}  // namespace skfluct::wick
