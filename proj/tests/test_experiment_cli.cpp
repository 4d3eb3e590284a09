#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "selfdiff/experiment.hpp"

using namespace selfdiff;

namespace {

const char* kValidConfig =
    "experiment.name = smoke\n"
    "potential.name = quadratic\n"
    "potential.c = 1\n"
    "gain.family = constant\n"
    "gain.g0 = 1\n"
    "sim.r = 1\n"
    "sim.x0 = 1\n"
    "sim.mu_bar0 = 0\n"
    "sim.horizon = 2\n"
    "sim.dt_base = 0.02\n"
    "sim.decimation = 10\n"
    "sim.seed = 9\n"
    "sim.n_paths = 64\n"
    "diagnostics.run = occupation,oracle_compare\n"
    "diagnostics.burn_in = 0.5\n"
    "diagnostics.occupation_of = X\n"
    "output.dir = OUTDIR\n";

std::string with_outdir(const std::string& text, const std::string& dir) {
    std::string s = text;
    const auto pos = s.find("OUTDIR");
    s.replace(pos, 6, dir);
    return s;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing: happy path") {
    const ExperimentConfig cfg = parse_config_text(with_outdir(kValidConfig, "/tmp/x"));
    CHECK(cfg.name == "smoke");
    CHECK(cfg.potential_name == "quadratic");
    CHECK(cfg.gain_family == "constant");
    CHECK(cfg.horizon == 2.0);
    CHECK(cfg.n_paths == 64);
    CHECK(cfg.diagnostics.size() == 2);
    CHECK(cfg.output_dir == "/tmp/x");
    CHECK(cfg.seed == 9);
}

TEST_CASE("config parsing: strictness and diagnostics") {
    // Unknown key is rejected with its line number.
    try {
        parse_config_text("gain.family = constant\npotential.name = quadratic\nsim.horzon = 5\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("sim.horzon") != std::string::npos);
    }
    // Missing gain.family is required.
    try {
        parse_config_text("potential.name = quadratic\nsim.horizon = 5\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("gain.family") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("gain.family = constant\npotential.name = quadratic\n"
                                      "diagnostics.run = occupation,bogus\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("gain.family = constant\npotential.name = quadratic\n"
                                      "sim.horizon = abc\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_file("/nonexistent/selfdiff.cfg"), ConfigError);
}

TEST_CASE("canned catalog: names, descriptions, parsable configs") {
    const auto& canned = canned_experiments();
    CHECK(canned.size() == 11);
    bool has_ergodic = false, has_logt = false, has_apt = false;
    for (const auto& e : canned) {
        CHECK(!e.description.empty());
        CHECK(e.runner != nullptr);
        const ExperimentConfig cfg = parse_config_text(e.config_text);
        CHECK(cfg.name == e.name);
        if (e.name == "quadratic_ergodic") has_ergodic = true;
        if (e.name == "xt_over_logt") has_logt = true;
        if (e.name == "apt_flow") has_apt = true;
    }
    CHECK(has_ergodic);
    CHECK(has_logt);
    CHECK(has_apt);
    CHECK(find_canned("quadratic_ergodic") != nullptr);
    CHECK(find_canned("nope") == nullptr);
}

TEST_CASE("run_experiment writes a reproducible bundle") {
    const std::string base = "/tmp/selfdiff_test_bundle";
    std::filesystem::remove_all(base);

    ExperimentConfig cfg = parse_config_text(with_outdir(kValidConfig, base + "/a"));
    const ReportBundle a = run_experiment(cfg, 2);
    CHECK(a.status == 0);
    CHECK(a.blown_paths == 0);
    CHECK(a.all_passed());

    const std::string manifest = slurp(base + "/a/manifest.txt");
    CHECK(manifest.find("sim.seed = 9") != std::string::npos);
    CHECK(manifest.find("run.threads = 2") != std::string::npos);
    const std::string summary_csv = slurp(base + "/a/ensemble_summary.csv");
    CHECK(summary_csv.rfind("t,mean_X,var_X,mean_Y,var_Y,mean_mubar,var_mubar\n", 0) == 0);
    CHECK(slurp(base + "/a/oracle_table.csv").rfind("t,mean_Y,var_Y,mean_mubar,var_mubar\n", 0) == 0);
    CHECK(slurp(base + "/a/path0.csv").rfind("t,X_1,Y_1,mubar_1\n", 0) == 0);

    // Same seed, same thread count: byte-identical CSV bodies.
    cfg.output_dir = base + "/b";
    run_experiment(cfg, 2);
    CHECK(slurp(base + "/b/ensemble_summary.csv") == summary_csv);
    CHECK(slurp(base + "/b/occupation_hist.txt") == slurp(base + "/a/occupation_hist.txt"));

    // Different worker counts agree numerically.
    cfg.output_dir = base + "/c";
    run_experiment(cfg, 1);
    std::stringstream sa(summary_csv), sc(slurp(base + "/c/ensemble_summary.csv"));
    std::string la, lc;
    std::getline(sa, la);
    std::getline(sc, lc);
    while (std::getline(sa, la) && std::getline(sc, lc)) {
        std::stringstream fa(la), fc(lc);
        std::string va, vc;
        while (std::getline(fa, va, ',') && std::getline(fc, vc, ',')) {
            CHECK(std::stod(va) == doctest::Approx(std::stod(vc)).epsilon(1e-11));
        }
    }
}

TEST_CASE("trichotomy diagnostic writes per-path verdicts") {
    const std::string base = "/tmp/selfdiff_test_tri";
    std::filesystem::remove_all(base);
    ExperimentConfig cfg;
    cfg.name = "tri";
    cfg.potential_name = "double_well";
    cfg.gain_family = "power_log";
    cfg.gain_alpha = 1.0;
    cfg.gain_beta = 0.0;
    cfg.gain_g0 = 1.0;
    cfg.x0 = {0.0};
    cfg.mu_bar0 = {0.0};
    cfg.horizon = 100.0;
    cfg.dt_base = 0.2;
    cfg.decimation = 20;
    cfg.seed = 51;
    cfg.n_paths = 16;
    cfg.diagnostics = {"trichotomy"};
    cfg.epsilon = 0.2;
    cfg.output_dir = base;
    const ReportBundle b = run_experiment(cfg, 1);
    CHECK(b.status == 0);
    const std::string tri = slurp(base + "/trichotomy.csv");
    CHECK(tri.rfind("path,label,", 0) == 0);
}

TEST_CASE("selfdiff binary: exit codes for list and config errors") {
#ifdef SELFDIFF_BIN
    const std::string bin = SELFDIFF_BIN;
    CHECK(std::system((bin + " list > /dev/null").c_str()) == 0);
    const int missing = std::system((bin + " run /nonexistent.cfg 2> /dev/null").c_str());
    CHECK(WEXITSTATUS(missing) == 2);
    {
        std::ofstream bad("/tmp/selfdiff_bad.cfg");
        bad << "potential.name = quadratic\nsim.horizon = 5\n";  // no gain.family
    }
    const int rc = std::system((bin + " run /tmp/selfdiff_bad.cfg 2> /dev/null").c_str());
    CHECK(WEXITSTATUS(rc) == 2);
#endif
}
