#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "skfluct/harness.hpp"

using namespace skfluct;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    REQUIRE(is);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("fluct experiment at beta = 0") {
    ExperimentConfig cfg;
    cfg.beta = 0.0;
    cfg.n_list = {8};
    cfg.replicas = 1;
    cfg.master_seed = 5;
    cfg.workers = 1;
    const ExperimentResult r = run_fluct_experiment(cfg);
    REQUIRE(r.records.size() == 1);
    const ReplicaRecord& rec = r.records[0];
    CHECK(rec.free_energy == 0.0);
    CHECK(rec.recentered == 0.0);
    CHECK(rec.fluct_sum == 0.0);
    CHECK(rec.residual == 0.0);
    for (double c : rec.counts) CHECK(std::isfinite(c));
}

TEST_CASE("replica records are internally consistent") {
    ExperimentConfig cfg;
    cfg.beta = 0.4;
    cfg.n_list = {8};
    cfg.replicas = 20;
    cfg.master_seed = 99;
    cfg.kmax = 4;
    const ExperimentResult r = run_fluct_experiment(cfg);
    const FluctParams p = fluct_params(cfg.mixture, cfg.beta, 4);
    for (const auto& rec : r.records) {
        CHECK(rec.child_seed == child_seed(99, rec.replica_id));
        CHECK(rec.recentered ==
              Catch::Approx(rec.free_energy - 8.0 * 0.16 * 0.5).margin(1e-12));
        CycleCountVector counts{8, 4, rec.counts, "mobius"};
        CHECK(rec.fluct_sum == Catch::Approx(fluctuation_sum(counts, p, 4)).margin(1e-12));
        CHECK(rec.residual == Catch::Approx(rec.recentered - rec.fluct_sum).margin(1e-12));
    }
    // records in replica order regardless of scheduling
    for (int i = 0; i < 20; ++i) CHECK(r.records[i].replica_id == i);
}

TEST_CASE("byte-identical output across worker counts") {
    ExperimentConfig cfg;
    cfg.beta = 0.4;
    cfg.n_list = {10};
    cfg.replicas = 24;
    cfg.master_seed = 314;
    cfg.kmax = 3;

    cfg.workers = 1;
    ExperimentResult a = run_fluct_experiment(cfg);
    cfg.workers = 4;
    ExperimentResult b = run_fluct_experiment(cfg);

    write_replicas_csv(a, "harness_a.csv");
    write_replicas_csv(b, "harness_b.csv");
    CHECK(slurp("harness_a.csv") == slurp("harness_b.csv"));
    std::remove("harness_a.csv");
    std::remove("harness_b.csv");
}

TEST_CASE("replica csv format") {
    ExperimentConfig cfg;
    cfg.beta = 0.4;
    cfg.n_list = {8};
    cfg.replicas = 3;
    cfg.master_seed = 1;
    cfg.kmax = 2;
    const ExperimentResult r = run_fluct_experiment(cfg);
    write_replicas_csv(r, "harness_fmt.csv");
    const std::string text = slurp("harness_fmt.csv");
    std::istringstream is(text);
    std::string header;
    std::getline(is, header);
    CHECK(header == "replica_id,seed,free_energy,recentered,C1,C2,fluct_sum,residual");
    int rows = 0;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
    CHECK(text.find("\r") == std::string::npos);
    std::remove("harness_fmt.csv");
}

TEST_CASE("plot csv quantiles are monotone") {
    ExperimentConfig cfg;
    cfg.beta = 0.4;
    cfg.n_list = {8};
    cfg.replicas = 60;
    cfg.master_seed = 11;
    cfg.kmax = 2;
    const ExperimentResult r = run_fluct_experiment(cfg);
    write_plot_csv(r, "harness_plot.csv");
    std::ifstream is("harness_plot.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line == "rank,empirical,theoretical");
    double prev_emp = -1e300, prev_th = -1e300;
    int rows = 0;
    while (std::getline(is, line)) {
        double emp, th;
        int rank;
        REQUIRE(std::sscanf(line.c_str(), "%d,%lf,%lf", &rank, &emp, &th) == 3);
        CHECK(emp >= prev_emp);
        CHECK(th > prev_th);
        prev_emp = emp;
        prev_th = th;
        ++rows;
    }
    CHECK(rows == 60);
    std::remove("harness_plot.csv");
}

TEST_CASE("tilted experiment at beta = 0 matches the base measure") {
    ExperimentConfig cfg;
    cfg.beta = 0.0;
    cfg.n_list = {12};
    cfg.replicas = 10;
    cfg.master_seed = 88;
    cfg.kmax = 3;
    const ExperimentResult q = run_cycles_experiment(cfg, true);
    const ExperimentResult p = run_cycles_experiment(cfg, false);
    for (int i = 0; i < 10; ++i) CHECK(q.records[i].counts == p.records[i].counts);
}

TEST_CASE("residual study at beta = 0 is identically zero") {
    ExperimentConfig cfg;
    cfg.beta = 0.0;
    cfg.n_list = {4, 6, 8};
    cfg.replicas = 5;
    cfg.master_seed = 3;
    const ResidualSummary s = residual_study(cfg);
    REQUIRE(s.medians.size() == 3);
    for (double m : s.medians) CHECK(m == 0.0);
    for (double q : s.percentile90) CHECK(q == 0.0);
}

TEST_CASE("assertions refuse the out-of-regime case") {
    ExperimentConfig cfg;
    cfg.beta = 0.9;
    cfg.n_list = {6};
    cfg.replicas = 4;
    cfg.kmax = 2;
    ExperimentResult r = run_cycles_experiment(cfg, false);
    r.cfg.kind = ExperimentKind::fluct;
    CHECK_THROWS_AS(evaluate_fluct(r), std::runtime_error);
    CHECK_THROWS_AS(evaluate_cycles_q(r), std::runtime_error);
}

TEST_CASE("summary json carries the expected fields") {
    ExperimentConfig cfg;
    cfg.beta = 0.4;
    cfg.n_list = {8};
    cfg.replicas = 5;
    cfg.master_seed = 17;
    cfg.kmax = 2;
    ExperimentResult r = run_fluct_experiment(cfg);
    const nlohmann::json j = summary_json(r);
    CHECK(j.at("experiment") == "fluct");
    CHECK(j.at("parameters").at("n") == 8);
    CHECK(j.at("parameters").at("K") == 2);
    CHECK(j.at("theory").contains("s2"));
    CHECK(j.at("empirical").contains("recentered_mean"));
    CHECK(j.at("empirical").at("cycle_counts").size() == 2);
    CHECK(j.contains("all_pass"));
}

TEST_CASE("failed replica aborts with a replayable id") {
    ExperimentConfig cfg;
    cfg.beta = 0.4;
    cfg.n_list = {40};  // over the pure 2-spin enumeration limit
    cfg.replicas = 3;
    cfg.master_seed = 1;
    cfg.kmax = 2;
    try {
        run_fluct_experiment(cfg);
        FAIL("expected an enumeration-limit failure");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("replica") != std::string::npos);
    }
}
