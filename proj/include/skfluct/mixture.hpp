#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace skfluct {

// Coefficient sequence (alpha_p)_{p>=2} of a finite mixture
// xi(x) = sum_p alpha_p x^p. Only finitely many coefficients, p <= max
// supported order, so xi is entire and all tensors are storable.
class Mixture {
public:
    static constexpr int kMaxOrder = 6;

    explicit Mixture(std::map<int, double> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty())
            throw std::invalid_argument("mixture: at least one coefficient required");
        bool any_positive = false;
        for (const auto& [p, a] : coeffs_) {
            if (p < 2 || p > kMaxOrder)
                throw std::invalid_argument("mixture: order p must be in [2, " +
                                            std::to_string(kMaxOrder) + "]");
            if (a < 0.0) throw std::invalid_argument("mixture: alpha_p must be >= 0");
            if (a > 0.0) any_positive = true;
        }
        if (!any_positive)
            throw std::invalid_argument("mixture: at least one alpha_p must be > 0");
    }

    static Mixture pure2(double alpha2 = 1.0) { return Mixture({{2, alpha2}}); }

    double alpha(int p) const {
        auto it = coeffs_.find(p);
        return it == coeffs_.end() ? 0.0 : it->second;
    }

    double alpha2() const { return alpha(2); }

    int max_p() const {
        int m = 2;
        for (const auto& [p, a] : coeffs_)
            if (a > 0.0) m = p;
        return m;
    }

    bool pure_two_spin() const {
        for (const auto& [p, a] : coeffs_)
            if (p >= 3 && a > 0.0) return false;
        return true;
    }

    const std::map<int, double>& coeffs() const { return coeffs_; }

    // xi(x) = sum_p alpha_p x^p, |x| <= 1
    double xi(double x) const {
        if (std::abs(x) > 1.0)
            throw std::domain_error("xi: |x| must be <= 1");
        double s = 0.0;
        for (const auto& [p, a] : coeffs_) s += a * std::pow(x, p);
        return s;
    }

    // xi~(x) = xi(x) - alpha_2 x^2, covariance of the p>=3 remainder
    double xi_tilde(double x) const { return xi(x) - alpha2() * x * x; }

    // "2:1.0,3:0.5" or "x2+0.5x3" / "x2"
    static Mixture parse(const std::string& text);

    std::string to_string() const {
        std::ostringstream os;
        bool first = true;
        for (const auto& [p, a] : coeffs_) {
            if (a == 0.0) continue;
            if (!first) os << ",";
            os << p << ":" << a;
            first = false;
        }
        return os.str();
    }

    bool operator==(const Mixture& o) const = default;

private:
    std::map<int, double> coeffs_;
};

inline double xi_eval(const Mixture& m, double x) { return m.xi(x); }

inline Mixture Mixture::parse(const std::string& text) {
    std::map<int, double> c;
    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
    if (s.empty()) throw std::invalid_argument("mixture: empty mixture string");

    if (s.find(':') != std::string::npos) {
        // p:alpha pairs separated by commas
        std::istringstream in(s);
        std::string item;
        while (std::getline(in, item, ',')) {
            auto colon = item.find(':');
            if (colon == std::string::npos)
                throw std::invalid_argument("mixture: expected p:alpha in '" + item + "'");
            int p = std::stoi(item.substr(0, colon));
            double a = std::stod(item.substr(colon + 1));
            c[p] += a;
        }
    } else {
        // monomial sum, e.g. "x2", "x2+x4", "x2+0.5x3"
        std::istringstream in(s);
        std::string term;
        while (std::getline(in, term, '+')) {
            auto xpos = term.find('x');
            if (xpos == std::string::npos)
                throw std::invalid_argument("mixture: expected coeff*x^p term in '" + term + "'");
            double a = xpos == 0 ? 1.0 : std::stod(term.substr(0, xpos));
            std::string ps = term.substr(xpos + 1);
            if (!ps.empty() && ps[0] == '^') ps = ps.substr(1);
            int p = std::stoi(ps);
            c[p] += a;
        }
    }
    return Mixture(c);
}

}  // namespace skfluct
