#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "skfluct/config.hpp"
#include "skfluct/harness.hpp"
#include "skfluct/wick.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCriterionFailed = 1;
constexpr int kExitUsage = 2;

struct CommonOpts {
    std::string config_path;
    std::string mixture = "2:1";
    double beta = 0.4;
    std::string n_text = "16";
    int replicas = 1000;
    std::uint64_t seed = 1;
    int kmax = 0;
    double eps = 0.05;
    double delta = 0.01;
    std::string out_dir;
    int workers = 0;
    bool no_assert = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "key=value config file");
    cmd->add_option("--mixture", o.mixture, "mixture, e.g. 2:1.0,3:0.5 or x2+0.5x3");
    cmd->add_option("--beta", o.beta, "inverse temperature");
    cmd->add_option("--n", o.n_text, "system size N (comma list for residual)");
    cmd->add_option("--replicas,-M", o.replicas, "replica count");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--kmax", o.kmax, "truncation K (0 = derive from eps/delta)");
    cmd->add_option("--eps", o.eps, "tail bound epsilon for K selection");
    cmd->add_option("--delta", o.delta, "tail bound delta for K selection");
    cmd->add_option("--out", o.out_dir, "output directory (default $SKFLUCT_OUT or .)");
    cmd->add_option("--workers", o.workers, "worker threads (0 = hardware)");
    cmd->add_flag("--no-assert", o.no_assert, "skip pass/fail checks, always exit 0");
}

// config file first, then any explicitly passed flags on top
skfluct::ExperimentConfig build_config(const CLI::App* cmd, const CommonOpts& o) {
    skfluct::ExperimentConfig cfg;
    if (!o.config_path.empty()) skfluct::apply_config(cfg, skfluct::load_config_file(o.config_path));
    auto given = [cmd](const std::string& name) { return cmd->count(name) > 0; };
    if (o.config_path.empty() || given("--mixture")) cfg.mixture = skfluct::Mixture::parse(o.mixture);
    if (o.config_path.empty() || given("--beta")) cfg.beta = o.beta;
    if (o.config_path.empty() || given("--n")) cfg.n_list = skfluct::parse_int_list(o.n_text);
    if (o.config_path.empty() || given("--replicas")) cfg.replicas = o.replicas;
    if (o.config_path.empty() || given("--seed")) cfg.master_seed = o.seed;
    if (o.config_path.empty() || given("--kmax")) cfg.kmax = o.kmax;
    if (o.config_path.empty() || given("--eps")) cfg.eps = o.eps;
    if (o.config_path.empty() || given("--delta")) cfg.delta = o.delta;
    if (given("--out")) cfg.out_dir = o.out_dir;
    if (o.config_path.empty() || given("--workers")) cfg.workers = o.workers;
    if (cfg.out_dir.empty()) {
        const char* env = std::getenv("SKFLUCT_OUT");
        cfg.out_dir = env && *env ? env : ".";
    }
    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

std::string out_path(const skfluct::ExperimentConfig& cfg, const std::string& stem) {
    return cfg.out_dir + "/" + stem;
}

void print9(const std::string& label, double v) {
    std::printf("%-14s %.9g\n", label.c_str(), v);
}

int finish_run(skfluct::ExperimentResult& result, const std::string& stem, bool assertions) {
    const auto& cfg = result.cfg;
    const bool has_fe = result.cfg.kind == skfluct::ExperimentKind::fluct;
    if (has_fe) {
        skfluct::write_replicas_csv(result, out_path(cfg, stem + "_replicas.csv"));
        skfluct::write_plot_csv(result, out_path(cfg, stem + "_plot.csv"));
    }
    skfluct::write_cycles_csv(result, out_path(cfg, stem + "_cycles.csv"));
    nlohmann::json j = skfluct::summary_json(result);
    j["config"] = skfluct::effective_config_json(cfg);
    j["assertions"] = assertions;
    const std::string summary = out_path(cfg, stem + "_summary.json");
    std::ofstream(summary) << j.dump(2) << '\n';
    std::printf("summary: %s\n", summary.c_str());
    for (const auto& c : result.checks)
        std::printf("%-28s %s  (%s)\n", c.name.c_str(), c.pass ? "pass" : "FAIL",
                    c.detail.c_str());
    if (assertions && !result.all_pass()) return kExitCriterionFailed;
    return kExitOk;
}

int cmd_theory(const skfluct::ExperimentConfig& cfg) {
    const int K = cfg.effective_K();
    const skfluct::FluctParams p = skfluct::fluct_params(cfg.mixture, cfg.beta, K);
    std::printf("mixture        %s\n", cfg.mixture.to_string().c_str());
    print9("beta", cfg.beta);
    print9("s2", p.s2);
    print9("mean_shift", p.mean_shift);
    for (int k = 1; k <= K; ++k) print9("mu_" + std::to_string(k), p.mu[k - 1]);
    print9("beta_xi", skfluct::beta_xi(cfg.mixture, 1e-4));
    std::printf("K              %d  (eps=%.9g, delta=%.9g)\n", K, cfg.eps, cfg.delta);
    print9("s2_truncated", skfluct::s2_truncated(p, K));
    print9("tail_bound", skfluct::tail_bound(p, K, cfg.eps));
    return kExitOk;
}

int cmd_fluct(const skfluct::ExperimentConfig& cfg, bool assertions) {
    skfluct::ExperimentResult r = skfluct::run_fluct_experiment(cfg);
    if (assertions) skfluct::evaluate_fluct(r);
    return finish_run(r, "fluct", assertions);
}

int cmd_cycles(const skfluct::ExperimentConfig& cfg, bool assertions, bool clt) {
    skfluct::ExperimentResult r = skfluct::run_cycles_experiment(cfg, /*tilted=*/false);
    if (assertions) {
        skfluct::evaluate_cycles_p_moments(r);
        if (clt) skfluct::evaluate_cycles_p_clt(r);
    }
    return finish_run(r, "cycles", assertions);
}

int cmd_tilted(const skfluct::ExperimentConfig& cfg, bool assertions) {
    skfluct::ExperimentResult r = skfluct::run_tilted_experiment(cfg);
    if (assertions) skfluct::evaluate_cycles_q(r);
    return finish_run(r, "tilted", assertions);
}

int cmd_residual(const skfluct::ExperimentConfig& cfg, bool assertions) {
    skfluct::ResidualSummary s = skfluct::residual_study(cfg);
    nlohmann::json j;
    j["experiment"] = "residual";
    j["config"] = skfluct::effective_config_json(cfg);
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < s.n_values.size(); ++i) {
        rows.push_back({{"n", s.n_values[i]},
                        {"median_abs_residual", s.medians[i]},
                        {"p90_abs_residual", s.percentile90[i]}});
        std::printf("N=%-4d median|res| %.9g   p90 %.9g\n", s.n_values[i], s.medians[i],
                    s.percentile90[i]);
        skfluct::write_replicas_csv(
            s.runs[i], out_path(cfg, "residual_N" + std::to_string(s.n_values[i]) +
                                         "_replicas.csv"));
    }
    j["per_n"] = rows;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : s.checks) {
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        std::printf("%-28s %s  (%s)\n", c.name.c_str(), c.pass ? "pass" : "FAIL",
                    c.detail.c_str());
    }
    j["checks"] = checks;
    j["all_pass"] = s.all_pass();
    const std::string summary = out_path(cfg, "residual_summary.json");
    std::ofstream(summary) << j.dump(2) << '\n';
    std::printf("summary: %s\n", summary.c_str());
    if (assertions && !s.all_pass()) return kExitCriterionFailed;
    return kExitOk;
}

int cmd_qn_mixture(const skfluct::ExperimentConfig& cfg, bool assertions) {
    skfluct::QnMixtureResult r = skfluct::qn_mixture_check(cfg);
    print9("importance", r.importance_estimate);
    print9("importance_se", r.importance_se);
    print9("direct", r.direct_frequency);
    print9("direct_se", r.direct_se);
    std::printf("%-28s %s  (%s)\n", r.check.name.c_str(), r.check.pass ? "pass" : "FAIL",
                r.check.detail.c_str());
    nlohmann::json j;
    j["experiment"] = "qn-mixture";
    j["config"] = skfluct::effective_config_json(cfg);
    j["importance_estimate"] = r.importance_estimate;
    j["importance_se"] = r.importance_se;
    j["direct_frequency"] = r.direct_frequency;
    j["direct_se"] = r.direct_se;
    j["all_pass"] = r.check.pass;
    const std::string summary = out_path(cfg, "qn_mixture_summary.json");
    std::ofstream(summary) << j.dump(2) << '\n';
    std::printf("summary: %s\n", summary.c_str());
    if (assertions && !r.check.pass) return kExitCriterionFailed;
    return kExitOk;
}

int cmd_wick_verify(int n, int kmax) {
    using skfluct::wick::cycle_count_polynomial;
    using skfluct::wick::exact_moment;
    bool all_match = true;
    std::printf("%2s %2s %2s  %-22s %-22s %s\n", "n", "k", "l", "exact", "predicted", "match");
    for (int k = 1; k <= kmax; ++k) {
        const mpq_class first = exact_moment({cycle_count_polynomial(n, k)});
        const bool m0 = first == 0;
        all_match = all_match && m0;
        std::printf("%2d %2d %2s  %-22s %-22s %s\n", n, k, "-", first.get_str().c_str(), "0",
                    m0 ? "yes" : "NO");
    }
    for (int k = 1; k <= kmax; ++k)
        for (int l = k; l <= kmax; ++l) {
            const mpq_class exact =
                exact_moment({cycle_count_polynomial(n, k), cycle_count_polynomial(n, l)});
            mpq_class predicted = 0;
            if (k == l && k <= n) {
                mpz_class fall = 1, pow = 1;
                for (int i = 0; i < k; ++i) {
                    fall *= n - i;
                    pow *= n;
                }
                predicted = mpq_class(2 * k) * mpq_class(fall) / mpq_class(pow);
            }
            const bool match = exact == predicted;
            all_match = all_match && match;
            std::printf("%2d %2d %2d  %-22s %-22s %s\n", n, k, l, exact.get_str().c_str(),
                        predicted.get_str().c_str(), match ? "yes" : "NO");
        }
    return all_match ? kExitOk : kExitCriterionFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sk spin glass free-energy fluctuation lab"};
    app.require_subcommand(1);

    CommonOpts theory_o, fluct_o, cycles_o, tilted_o, residual_o, qn_o;
    bool cycles_clt = false;
    int wick_n = 4, wick_kmax = 3;

    auto* c_theory = app.add_subcommand("theory", "closed-form limit quantities");
    add_common(c_theory, theory_o);
    auto* c_fluct = app.add_subcommand("fluct", "free-energy fluctuation experiment");
    add_common(c_fluct, fluct_o);
    auto* c_cycles = app.add_subcommand("cycles", "cycle-count moments under the base measure");
    add_common(c_cycles, cycles_o);
    c_cycles->add_flag("--clt", cycles_clt, "also run KS normality checks");
    auto* c_tilted = app.add_subcommand("tilted", "cycle counts under the tilted measure");
    add_common(c_tilted, tilted_o);
    auto* c_residual = app.add_subcommand("residual", "truncation residual study across N");
    add_common(c_residual, residual_o);
    auto* c_wick = app.add_subcommand("wick-verify", "exact rational moment table");
    c_wick->add_option("--n", wick_n, "matrix dimension (<= 6)");
    c_wick->add_option("--kmax", wick_kmax, "largest cycle length");
    auto* c_qn = app.add_subcommand("qn-mixture", "mixture identity cross-check");
    add_common(c_qn, qn_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (c_theory->parsed()) return cmd_theory(build_config(c_theory, theory_o));
        if (c_wick->parsed()) return cmd_wick_verify(wick_n, wick_kmax);
        if (c_fluct->parsed()) {
            auto cfg = build_config(c_fluct, fluct_o);
            cfg.kind = skfluct::ExperimentKind::fluct;
            return cmd_fluct(cfg, !fluct_o.no_assert && cfg.assertions_allowed());
        }
        if (c_cycles->parsed()) {
            auto cfg = build_config(c_cycles, cycles_o);
            cfg.kind = skfluct::ExperimentKind::cycles_p;
            return cmd_cycles(cfg, !cycles_o.no_assert, cycles_clt);
        }
        if (c_tilted->parsed()) {
            auto cfg = build_config(c_tilted, tilted_o);
            cfg.kind = skfluct::ExperimentKind::cycles_q;
            return cmd_tilted(cfg, !tilted_o.no_assert && cfg.assertions_allowed());
        }
        if (c_residual->parsed()) {
            auto cfg = build_config(c_residual, residual_o);
            cfg.kind = skfluct::ExperimentKind::residual;
            return cmd_residual(cfg, !residual_o.no_assert && cfg.assertions_allowed());
        }
        if (c_qn->parsed()) {
            auto cfg = build_config(c_qn, qn_o);
            cfg.kind = skfluct::ExperimentKind::qn_mixture;
            return cmd_qn_mixture(cfg, !qn_o.no_assert);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
