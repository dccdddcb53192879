#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "skfluct/cycles.hpp"
#include "skfluct/model.hpp"
#include "skfluct/partition.hpp"
#include "skfluct/stats.hpp"
#include "skfluct/theory.hpp"

namespace skfluct {

enum class ExperimentKind { fluct, cycles_p, cycles_q, residual, qn_mixture };

inline std::string kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::fluct: return "fluct";
        case ExperimentKind::cycles_p: return "cycles-P";
        case ExperimentKind::cycles_q: return "cycles-Q";
        case ExperimentKind::residual: return "residual";
        case ExperimentKind::qn_mixture: return "qn-mixture";
    }
    return "?";
}

struct ExperimentConfig {
    Mixture mixture = Mixture::pure2();
    double beta = 0.4;
    std::vector<int> n_list = {16};
    int replicas = 1000;
    std::uint64_t master_seed = 1;
    int kmax = 0;  // 0: derive from truncation_K(eps, delta), capped at 8
    double eps = 0.05;
    double delta = 0.01;
    ExperimentKind kind = ExperimentKind::fluct;
    std::string out_dir;
    int workers = 0;  // 0: hardware concurrency
    EnumLimits limits;

    int n() const { return n_list.at(0); }

    // limit-law assertions are only meaningful below the variance blowup
    bool assertions_allowed() const {
        return 2.0 * mixture.alpha2() * beta * beta < 1.0;
    }

    int effective_workers() const {
        if (workers > 0) return workers;
        const unsigned hc = std::thread::hardware_concurrency();
        return hc > 0 ? static_cast<int>(hc) : 1;
    }

    int effective_K() const {
        if (kmax > 0) return kmax;
        if (beta == 0.0) return 1;
        if (!assertions_allowed()) return 8;  // truncation bound needs 2 alpha2 beta^2 < 1
        const FluctParams p = fluct_params(mixture, beta, 1);
        return std::min(truncation_K(p, eps, delta), 8);
    }
};

struct ReplicaRecord {
    int replica_id = 0;
    std::uint64_t child_seed = 0;
    double free_energy = std::numeric_limits<double>::quiet_NaN();
    double recentered = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> counts;  // C_{N,1}..C_{N,K}
    double fluct_sum = std::numeric_limits<double>::quiet_NaN();
    double residual = std::numeric_limits<double>::quiet_NaN();
};

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ExperimentResult {
    ExperimentConfig cfg;
    int n = 0;
    int K = 0;
    FluctParams params;
    std::vector<ReplicaRecord> records;
    std::vector<CheckResult> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    std::vector<double> column(const std::function<double(const ReplicaRecord&)>& get) const {
        std::vector<double> v;
        v.reserve(records.size());
        for (const auto& r : records) v.push_back(get(r));
        return v;
    }

    std::vector<double> count_column(int k) const {
        return column([k](const ReplicaRecord& r) { return r.counts.at(k - 1); });
    }
};

namespace detail {

// Runs body(i) for i in [0, count) on a worker pool. The first failure wins;
// its replica id is attached so the case can be replayed from its seed.
template <class F>
void parallel_replicas(int count, int workers, F&& body) {
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr error;
    int error_id = -1;
    auto work = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!error || i < error_id) {
                    error = std::current_exception();
                    error_id = i;
                }
                return;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) {
        try {
            std::rethrow_exception(error);
        } catch (const std::exception& e) {
            throw std::runtime_error("replica " + std::to_string(error_id) +
                                     " failed: " + e.what());
        }
    }
}

inline std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// mu_k is defined for every beta >= 0; s2 only below the variance blowup.
// Out-of-regime runs keep NaN there and the evaluators refuse to assert.
inline FluctParams lenient_params(const Mixture& m, double beta, int K) {
    if (2.0 * m.alpha2() * beta * beta < 1.0) return fluct_params(m, beta, K);
    FluctParams p;
    p.beta = beta;
    p.alpha2 = m.alpha2();
    p.s2 = std::numeric_limits<double>::quiet_NaN();
    p.mean_shift = p.s2;
    p.mu.resize(K);
    for (int k = 1; k <= K; ++k) p.mu[k - 1] = p.mu_k(k);
    return p;
}

}  // namespace detail

// One replica of the fluctuation experiment: disorder -> exact F_N ->
// cycle counts -> truncated fluctuation sum -> residual.
inline ReplicaRecord fluct_replica(const ExperimentConfig& cfg, const FluctParams& params,
                                   int K, int replica_id) {
    ReplicaRecord rec;
    rec.replica_id = replica_id;
    rec.child_seed = child_seed(cfg.master_seed, static_cast<std::uint64_t>(replica_id));
    const DisorderRealization d =
        DisorderRealization::sample(cfg.mixture, cfg.n(), rec.child_seed);
    rec.free_energy = free_energy_exact(d, cfg.beta, cfg.limits);
    rec.recentered =
        rec.free_energy - cfg.n() * cfg.beta * cfg.beta * 0.5 * cfg.mixture.xi(1.0);
    const CycleCountVector counts = cycle_counts_mobius(d.goe, K);
    rec.counts = counts.values;
    rec.fluct_sum = fluctuation_sum(counts, params, K);
    rec.residual = rec.recentered - rec.fluct_sum;
    return rec;
}

inline ExperimentResult run_fluct_experiment(const ExperimentConfig& cfg) {
    ExperimentResult result;
    result.cfg = cfg;
    result.n = cfg.n();
    result.K = cfg.effective_K();
    result.params = detail::lenient_params(cfg.mixture, cfg.beta, result.K);
    result.records.resize(cfg.replicas);
    detail::parallel_replicas(cfg.replicas, cfg.effective_workers(), [&](int i) {
        result.records[i] = fluct_replica(cfg, result.params, result.K, i);
    });
    return result;
}

// Cycle-count experiment under P_N (tilted = false) or Q_N (tilted = true).
// Q_N is realized by its mixture representation: draw sigma from the Gibbs
// measure of the p >= 3 part (uniform for pure 2-spin), then a mean-shifted
// GOE matrix.
inline ExperimentResult run_cycles_experiment(const ExperimentConfig& cfg, bool tilted) {
    ExperimentResult result;
    result.cfg = cfg;
    result.cfg.kind = tilted ? ExperimentKind::cycles_q : ExperimentKind::cycles_p;
    result.n = cfg.n();
    result.K = cfg.effective_K();
    result.params = detail::lenient_params(cfg.mixture, cfg.beta, result.K);
    result.records.resize(cfg.replicas);
    detail::parallel_replicas(cfg.replicas, cfg.effective_workers(), [&](int i) {
        ReplicaRecord rec;
        rec.replica_id = i;
        rec.child_seed = child_seed(cfg.master_seed, static_cast<std::uint64_t>(i));
        GoeMatrix J(1);
        if (tilted && cfg.beta > 0.0) {
            SpinConfig sigma;
            if (cfg.mixture.pure_two_spin()) {
                GaussianStream stream(child_seed(rec.child_seed, 11));
                sigma.spins.resize(cfg.n());
                for (int s = 0; s < cfg.n(); ++s)
                    sigma.spins[s] = (stream.next_u64() & 1) ? -1 : 1;
            } else {
                const DisorderRealization d =
                    DisorderRealization::sample(cfg.mixture, cfg.n(), rec.child_seed);
                sigma = gibbs_sample_exact(d, cfg.beta, child_seed(rec.child_seed, 11),
                                           cfg.limits);
            }
            J = sample_tilted_goe(cfg.n(), sigma, cfg.beta, cfg.mixture.alpha2(),
                                  child_seed(rec.child_seed, 12));
        } else {
            J = sample_goe(cfg.n(), child_seed(rec.child_seed, 12));
        }
        rec.counts = cycle_counts_mobius(J, result.K).values;
        result.records[i] = rec;
    });
    return result;
}

inline ExperimentResult run_tilted_experiment(const ExperimentConfig& cfg) {
    return run_cycles_experiment(cfg, /*tilted=*/true);
}

// ---- per-kind statistical checks ----

namespace detail {

inline CheckResult within(const std::string& name, double value, double target, double tol) {
    CheckResult c;
    c.name = name;
    c.pass = std::abs(value - target) <= tol;
    c.detail = "value " + fmt9(value) + " target " + fmt9(target) + " tol " + fmt9(tol);
    return c;
}

inline CheckResult above(const std::string& name, double value, double threshold) {
    CheckResult c;
    c.name = name;
    c.pass = value > threshold;
    c.detail = "value " + fmt9(value) + " threshold " + fmt9(threshold);
    return c;
}

}  // namespace detail

// Limit-law checks at desk scale: mean/variance/KS of the recentered free
// energy, and E[Zhat] = 1 within 4 SE.
inline void evaluate_fluct(ExperimentResult& r, double mean_tol = 0.03,
                           double var_rel_tol = 0.25, double ks_p_min = 1e-2) {
    if (!r.cfg.assertions_allowed())
        throw std::runtime_error("evaluate_fluct: 2 alpha_2 beta^2 >= 1, assertions refused");
    const auto rec = r.column([](const ReplicaRecord& x) { return x.recentered; });
    const MomentSummary ms = moment_summary(rec);
    const double s2 = r.params.s2;
    r.checks.push_back(detail::within("recentered_mean", ms.mean, -0.5 * s2, mean_tol));
    r.checks.push_back(detail::within("recentered_variance", ms.variance, s2, var_rel_tol * s2));
    r.checks.push_back(
        detail::above("recentered_ks_p", ks_test(rec, -0.5 * s2, s2).p_value, ks_p_min));
    std::vector<double> zhat;
    zhat.reserve(rec.size());
    for (double v : rec) zhat.push_back(std::exp(v));
    const MomentSummary zs = moment_summary(zhat);
    r.checks.push_back(detail::within("zhat_mean", zs.mean, 1.0, 4.0 * zs.mean_se));
}

// Moment checks under P_N: zero means within 4 SE, variances against the
// exact finite-N formula, cross-covariances within 4 SE of zero.
inline void evaluate_cycles_p_moments(ExperimentResult& r, double var_rel_tol = 0.05,
                                      double se_mult = 4.0) {
    const double m = static_cast<double>(r.records.size());
    for (int k = 1; k <= r.K; ++k) {
        const auto col = r.count_column(k);
        const MomentSummary ms = moment_summary(col);
        const double vexact = cycle_variance_exact(r.n, k);
        r.checks.push_back(detail::within("mean_C" + std::to_string(k), ms.mean, 0.0,
                                          se_mult * std::sqrt(vexact / m)));
        r.checks.push_back(detail::within("var_C" + std::to_string(k), ms.variance, vexact,
                                          var_rel_tol * vexact));
    }
    for (int k = 1; k <= r.K; ++k)
        for (int l = k + 1; l <= r.K; ++l) {
            const auto a = r.count_column(k);
            const auto b = r.count_column(l);
            const double ma = moment_summary(a).mean, mb = moment_summary(b).mean;
            double cov = 0.0, var_prod = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double t = (a[i] - ma) * (b[i] - mb);
                cov += t;
                var_prod += t * t;
            }
            cov /= m - 1.0;
            var_prod = var_prod / m - cov * cov;
            const double se = std::sqrt(std::max(var_prod, 0.0) / m);
            r.checks.push_back(detail::within(
                "cov_C" + std::to_string(k) + "_C" + std::to_string(l), cov, 0.0,
                se_mult * se));
        }
}

// CLT checks under P_N: KS against Normal(0, exact finite-N variance)
inline void evaluate_cycles_p_clt(ExperimentResult& r, double ks_p_min = 1e-3) {
    for (int k = 1; k <= r.K; ++k) {
        const KsResult ks = ks_test(r.count_column(k), 0.0, cycle_variance_exact(r.n, k));
        r.checks.push_back(
            detail::above("clt_ks_p_C" + std::to_string(k), ks.p_value, ks_p_min));
    }
}

// Checks under Q_N: mean within se_mult SE of the exact finite-N shift
// mu_k prod_{i<k}(1 - i/N), variance within var_rel_tol of the limit 2k.
inline void evaluate_cycles_q(ExperimentResult& r, double var_rel_tol = 0.10,
                              double se_mult = 4.0) {
    if (!r.cfg.assertions_allowed())
        throw std::runtime_error("evaluate_cycles_q: 2 alpha_2 beta^2 >= 1, assertions refused");
    const double m = static_cast<double>(r.records.size());
    for (int k = 1; k <= r.K; ++k) {
        const auto col = r.count_column(k);
        const MomentSummary ms = moment_summary(col);
        double shift = r.params.mu_k(k);
        for (int i = 1; i < k; ++i) shift *= 1.0 - static_cast<double>(i) / r.n;
        r.checks.push_back(detail::within("q_mean_C" + std::to_string(k), ms.mean, shift,
                                          se_mult * ms.mean_se));
        r.checks.push_back(detail::within("q_var_C" + std::to_string(k), ms.variance,
                                          2.0 * k, var_rel_tol * 2.0 * k));
    }
}

// ---- truncation residual study across N ----

struct ResidualSummary {
    std::vector<int> n_values;
    std::vector<double> medians;       // median |residual| per N
    std::vector<double> percentile90;  // 90th percentile per N
    std::vector<CheckResult> checks;
    std::vector<ExperimentResult> runs;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

inline ResidualSummary residual_study(const ExperimentConfig& cfg) {
    ResidualSummary out;
    for (int n : cfg.n_list) {
        ExperimentConfig run_cfg = cfg;
        run_cfg.n_list = {n};
        // decorrelate the N runs while keeping the whole study reproducible
        run_cfg.master_seed = child_seed(cfg.master_seed, static_cast<std::uint64_t>(n));
        ExperimentResult r = run_fluct_experiment(run_cfg);
        std::vector<double> abs_res;
        abs_res.reserve(r.records.size());
        for (const auto& rec : r.records) abs_res.push_back(std::abs(rec.residual));
        out.n_values.push_back(n);
        out.medians.push_back(median(abs_res));
        out.percentile90.push_back(quantile(abs_res, 0.9));
        out.runs.push_back(std::move(r));
    }
    for (std::size_t i = 1; i < out.medians.size(); ++i) {
        CheckResult c;
        c.name = "median_decrease_N" + std::to_string(out.n_values[i - 1]) + "_to_N" +
                 std::to_string(out.n_values[i]);
        c.pass = out.medians[i] < out.medians[i - 1];
        c.detail = detail::fmt9(out.medians[i - 1]) + " -> " + detail::fmt9(out.medians[i]);
        out.checks.push_back(c);
    }
    return out;
}

// ---- Q_N mixture identity (importance weighting vs direct tilted sampling) ----

struct QnMixtureResult {
    double importance_estimate = 0.0;  // E_P[Zhat 1_{C1 > 0}]
    double importance_se = 0.0;
    double direct_frequency = 0.0;  // Q_N frequency of {C1 > 0}
    double direct_se = 0.0;
    CheckResult check;
};

inline QnMixtureResult qn_mixture_check(const ExperimentConfig& cfg, double se_mult = 4.0) {
    QnMixtureResult out;
    const int m = cfg.replicas;
    const double md = static_cast<double>(m);

    std::vector<double> weighted(m);
    detail::parallel_replicas(m, cfg.effective_workers(), [&](int i) {
        const std::uint64_t seed = child_seed(cfg.master_seed, static_cast<std::uint64_t>(i));
        const DisorderRealization d = DisorderRealization::sample(cfg.mixture, cfg.n(), seed);
        const double zhat = std::exp(recentered_free_energy(d, cfg.beta, cfg.limits));
        const double c1 = cycle_counts_mobius(d.goe, 1).value(1);
        weighted[i] = c1 > 0.0 ? zhat : 0.0;
    });
    const MomentSummary ws = moment_summary(weighted);
    out.importance_estimate = ws.mean;
    out.importance_se = ws.mean_se;

    ExperimentConfig qcfg = cfg;
    qcfg.kmax = 1;
    qcfg.master_seed = child_seed(cfg.master_seed, 0x51u);
    const ExperimentResult qrun = run_cycles_experiment(qcfg, /*tilted=*/true);
    int hits = 0;
    for (const auto& rec : qrun.records)
        if (rec.counts.at(0) > 0.0) ++hits;
    out.direct_frequency = static_cast<double>(hits) / md;
    out.direct_se = std::sqrt(out.direct_frequency * (1.0 - out.direct_frequency) / md);

    const double combined =
        std::sqrt(out.importance_se * out.importance_se + out.direct_se * out.direct_se);
    out.check = detail::within("qn_mixture_identity", out.importance_estimate,
                               out.direct_frequency, se_mult * combined);
    return out;
}

// ---- output writers ----

inline void write_replicas_csv(const ExperimentResult& r, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "replica_id,seed,free_energy,recentered";
    for (int k = 1; k <= r.K; ++k) os << ",C" << k;
    os << ",fluct_sum,residual\n";
    for (const auto& rec : r.records) {
        os << rec.replica_id << ',' << rec.child_seed << ',' << detail::fmt9(rec.free_energy)
           << ',' << detail::fmt9(rec.recentered);
        for (double c : rec.counts) os << ',' << detail::fmt9(c);
        os << ',' << detail::fmt9(rec.fluct_sum) << ',' << detail::fmt9(rec.residual) << '\n';
    }
}

inline void write_cycles_csv(const ExperimentResult& r, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "replica_id,k,value,algorithm\n";
    for (const auto& rec : r.records)
        for (int k = 1; k <= r.K; ++k)
            os << rec.replica_id << ',' << k << ',' << detail::fmt9(rec.counts.at(k - 1))
               << ",mobius\n";
}

// sorted recentered values against the theoretical Normal quantiles
inline void write_plot_csv(const ExperimentResult& r, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    auto rec = r.column([](const ReplicaRecord& x) { return x.recentered; });
    std::sort(rec.begin(), rec.end());
    const double m = static_cast<double>(rec.size());
    os << "rank,empirical,theoretical\n";
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const double p = (static_cast<double>(i) + 0.5) / m;
        const double q = r.params.mean_shift + std::sqrt(r.params.s2) * normal_quantile(p);
        os << i << ',' << detail::fmt9(rec[i]) << ',' << detail::fmt9(q) << '\n';
    }
}

inline nlohmann::json summary_json(const ExperimentResult& r) {
    nlohmann::json j;
    j["experiment"] = kind_name(r.cfg.kind);
    j["parameters"] = {{"mixture", r.cfg.mixture.to_string()},
                       {"beta", r.cfg.beta},
                       {"n", r.n},
                       {"replicas", r.cfg.replicas},
                       {"master_seed", r.cfg.master_seed},
                       {"K", r.K},
                       {"workers", r.cfg.effective_workers()}};
    j["theory"] = {{"s2", r.params.s2},
                   {"mean_shift", r.params.mean_shift},
                   {"mu", r.params.mu}};
    nlohmann::json stats = nlohmann::json::array();
    const bool has_fe = !r.records.empty() && std::isfinite(r.records.front().recentered);
    if (has_fe) {
        const auto rec = r.column([](const ReplicaRecord& x) { return x.recentered; });
        const MomentSummary ms = moment_summary(rec);
        j["empirical"]["recentered_mean"] = ms.mean;
        j["empirical"]["recentered_variance"] = ms.variance;
    }
    for (int k = 1; k <= r.K; ++k) {
        const MomentSummary ms = moment_summary(r.count_column(k));
        stats.push_back({{"k", k},
                         {"mean", ms.mean},
                         {"variance", ms.variance},
                         {"exact_variance", cycle_variance_exact(r.n, k)}});
    }
    j["empirical"]["cycle_counts"] = stats;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    j["checks"] = checks;
    j["all_pass"] = r.all_pass();
    return j;
}

}  // namespace skfluct
