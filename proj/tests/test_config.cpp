#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "skfluct/config.hpp"

using namespace skfluct;

TEST_CASE("parse_config_text") {
    const std::string text =
        "# experiment setup\n"
        "mixture = 2:1.0, 3:0.5\n"
        "beta=0.4   # inline comment\n"
        "n = 8,12,16\n"
        "\n"
        "replicas = 500\n"
        "seed = 42\n";
    const ConfigMap map = parse_config_text(text);
    CHECK(map.at("mixture") == "2:1.0, 3:0.5");
    CHECK(map.at("beta") == "0.4");
    CHECK(map.at("n") == "8,12,16");
    CHECK(map.at("replicas") == "500");
    CHECK(map.size() == 5);

    CHECK_THROWS_AS(parse_config_text("just a line\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("= value\n"), std::invalid_argument);
}

TEST_CASE("apply_config") {
    ExperimentConfig cfg;
    apply_config(cfg, parse_config_text("mixture = 2:1.0, 3:0.5\nbeta = 0.3\nn = 8,12\n"
                                        "replicas = 250\nseed = 7\nkmax = 4\nworkers = 2\n"));
    CHECK(cfg.mixture == Mixture::parse("2:1.0,3:0.5"));
    CHECK(cfg.beta == 0.3);
    CHECK(cfg.n_list == std::vector<int>{8, 12});
    CHECK(cfg.replicas == 250);
    CHECK(cfg.master_seed == 7);
    CHECK(cfg.kmax == 4);
    CHECK(cfg.workers == 2);

    CHECK_THROWS_AS(apply_config(cfg, parse_config_text("betta = 0.3\n")),
                    std::invalid_argument);
}

TEST_CASE("round trip through the effective-config echo") {
    ExperimentConfig cfg;
    cfg.mixture = Mixture::parse("2:0.75,4:0.25");
    cfg.beta = 0.35;
    cfg.n_list = {8, 12, 16};
    cfg.replicas = 123;
    cfg.master_seed = 999;
    cfg.kmax = 5;
    cfg.eps = 0.04;
    cfg.delta = 0.02;
    cfg.out_dir = "out";
    cfg.workers = 3;

    ExperimentConfig round;
    apply_config(round, parse_config_text(render_config(config_to_map(cfg))));
    CHECK(config_to_map(round) == config_to_map(cfg));
}

TEST_CASE("load_config_file") {
    const std::string path = "tmp_test_config.cfg";
    std::ofstream(path) << "beta = 0.25\nreplicas = 9\n";
    const ConfigMap map = load_config_file(path);
    CHECK(map.at("beta") == "0.25");
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_config_file("definitely_missing.cfg"), std::runtime_error);
}

TEST_CASE("effective K policy") {
    ExperimentConfig cfg;  // x^2, beta 0.4, eps 0.05, delta 0.01
    CHECK(cfg.effective_K() == 8);  // derived K = 10, capped at 8
    cfg.kmax = 3;
    CHECK(cfg.effective_K() == 3);
    cfg.kmax = 0;
    cfg.beta = 0.0;
    CHECK(cfg.effective_K() == 1);
}

TEST_CASE("assertion gate") {
    ExperimentConfig cfg;
    cfg.beta = 0.4;
    CHECK(cfg.assertions_allowed());
    cfg.beta = 0.8;  // 2 alpha2 beta^2 = 1.28
    CHECK_FALSE(cfg.assertions_allowed());
}
