#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "sbstack/sim.hpp"

using namespace sbstack;

namespace {

std::string csv_of(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    write_csv(os, rows);
    return os.str();
}

ExperimentConfig base_config() {
    ExperimentConfig cfg;
    cfg.m = 2;
    cfg.n_rx = 2;
    cfg.q = 4;
    cfg.decoders = {parse_decoder_spec("ml")};
    cfg.snr_db = {10.0};
    cfg.trials = 50;
    cfg.master_seed = 7;
    return cfg;
}

const ResultRow& find_row(const std::vector<ResultRow>& rows, const std::string& id,
                          double snr) {
    for (const auto& r : rows)
        if (r.decoder_id == id && r.snr_db == snr) return r;
    REQUIRE(false);
    static ResultRow dummy;
    return dummy;
}

}  // namespace

TEST_CASE("decoder spec parsing") {
    auto d = parse_decoder_spec("sb-stack:bias_rel=0.5");
    CHECK(d.name == "sb-stack");
    CHECK(d.params.at("bias_rel") == "0.5");
    CHECK(d.id == "sb-stack:bias_rel=0.5");

    auto plain = parse_decoder_spec("ml");
    CHECK(plain.name == "ml");
    CHECK(plain.params.empty());

    auto multi = parse_decoder_spec("neighbor-stack:t=1,2,1,2");
    CHECK(multi.params.at("t") == "1,2,1,2");

    CHECK_THROWS_AS(parse_decoder_spec(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_decoder_spec("ml:np=2:np=3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_decoder_spec("ml:np"), std::invalid_argument);
}

TEST_CASE("config text round trip") {
    const std::string text =
        "# comment line\n"
        "schema_version = 1\n"
        "scheme = sm\n"
        "m = 2\n"
        "n = 2\n"
        "q = 16\n"
        "decoders = sphere, sb-stack:bias_rel=0.1\n"
        "snr_db = 6, 8, 10\n"
        "trials = 123\n"
        "master_seed = 42\n";
    auto cfg = parse_config_text(text);
    CHECK(cfg.q == 16);
    CHECK(cfg.decoders.size() == 2);
    CHECK(cfg.decoders[1].name == "sb-stack");
    CHECK(cfg.snr_db == std::vector<double>{6.0, 8.0, 10.0});
    CHECK(cfg.trials == 123);
    CHECK(cfg.master_seed == 42);
    validate_config(cfg);
}

TEST_CASE("config grid expansion and conflicts") {
    auto cfg = parse_config_text(
        "schema_version = 1\nsnr_min = 4\nsnr_max = 8\nsnr_step = 2\n"
        "decoders = ml\n");
    CHECK(cfg.snr_db == std::vector<double>{4.0, 6.0, 8.0});

    CHECK_THROWS_AS(parse_config_text("schema_version = 1\ndecoders = ml\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        parse_config_text("schema_version = 1\nsnr_db = 5\nsnr_min = 1\n"
                          "snr_max = 3\nsnr_step = 1\ndecoders = ml\n"),
        std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("snr_db = 5\ndecoders = ml\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("schema_version = 1\nsnr_db = 5\nbogus = 1\n"),
                    std::invalid_argument);
}

TEST_CASE("config validation rejects bad setups") {
    auto cfg = base_config();

    auto broken = cfg;
    broken.trials = 0;
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);

    broken = cfg;
    broken.snr_db = {10.0, 8.0};
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);
    broken.snr_db = {10.0, 10.0};
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);

    broken = cfg;
    broken.coded = true;
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);

    broken = cfg;
    broken.decoders = {parse_decoder_spec("soft-sb-stack:np=4")};
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);

    broken = cfg;
    broken.mode = "lattice";
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);

    broken = cfg;
    broken.decoders = {parse_decoder_spec("neighbor-stack:t=1")};
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);

    broken = cfg;
    broken.scheme = "stbc";
    broken.stbc = "golden";
    broken.m = 4;
    broken.n_rx = 4;
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);

    broken = cfg;
    broken.workers = 0;
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);
    broken.workers = 300;
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);

    broken = cfg;
    broken.growth = 1.0;
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);

    broken = cfg;
    broken.llr_bits = 1;
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);

    broken = cfg;
    broken.radius = "fixed:0";
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);
    broken.radius = "sideways";
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);

    broken = cfg;
    broken.decoders = {parse_decoder_spec("ml:zeta=2")};
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);

    broken = cfg;
    broken.coded = true;
    broken.info_bits = 7;
    broken.decoders = {parse_decoder_spec("soft-sb-stack:np=2")};
    CHECK_THROWS_AS(validate_config(broken), std::invalid_argument);
}

TEST_CASE("presets parse and validate") {
    auto names = preset_names();
    CHECK(names.size() >= 6);
    for (const auto& want :
         {"fig3", "fig6", "fig7", "fig8", "fig9", "fig13"}) {
        bool found = false;
        for (const auto& n : names) found = found || n == want;
        CHECK(found);
    }
    for (const auto& n : names) {
        auto cfg = preset(n);
        validate_config(cfg);
    }
    CHECK_THROWS_AS(preset("fig99"), std::invalid_argument);
}

TEST_CASE("decoder catalog lists every search kind") {
    auto lines = decoder_catalog();
    CHECK(lines.size() == 10);
    bool has_sb = false;
    for (const auto& l : lines) has_sb = has_sb || l.find("sb-stack") == 0;
    CHECK(has_sb);
}

TEST_CASE("load_config reads a file") {
    const std::string path = "/tmp/sbsim_test_config.cfg";
    {
        std::ofstream f(path);
        f << "schema_version = 1\ndecoders = ml\nsnr_db = 8\ntrials = 10\n";
    }
    auto cfg = load_config(path);
    CHECK(cfg.trials == 10);
    CHECK_THROWS(load_config("/tmp/definitely_missing_config.cfg"));
}

TEST_CASE("small run produces one row per decoder and snr") {
    auto cfg = base_config();
    cfg.decoders = {parse_decoder_spec("ml"), parse_decoder_spec("zf-dfe")};
    cfg.snr_db = {6.0, 10.0};
    auto rows = run_experiment(cfg);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        CHECK(r.trials_run == 50);
        CHECK(r.ser >= 0.0);
        CHECK(r.ser <= 1.0);
        CHECK(r.ber >= 0.0);
        CHECK(r.ber <= 1.0);
        CHECK(r.mean_mults > 0.0);
    }
    // Exhaustive search has a closed-form multiplication count: every level d
    // costs side^d * d over the 4 real dimensions of a 2x2 4-qam system.
    CHECK(find_row(rows, "ml", 6.0).mean_mults == doctest::Approx(98.0));
}

TEST_CASE("identical seeds reproduce the csv byte for byte") {
    auto cfg = base_config();
    cfg.decoders = {parse_decoder_spec("sphere"), parse_decoder_spec("sb-stack")};
    cfg.snr_db = {8.0, 12.0};
    cfg.trials = 80;
    const auto first = csv_of(run_experiment(cfg));
    const auto second = csv_of(run_experiment(cfg));
    CHECK(first == second);
    CHECK(first.find("decoder,snr_db") == 0);
}

TEST_CASE("worker count does not change the results") {
    auto cfg = base_config();
    cfg.decoders = {parse_decoder_spec("sb-stack"), parse_decoder_spec("kbest:k=4")};
    cfg.q = 16;
    cfg.snr_db = {10.0};
    cfg.trials = 60;
    cfg.workers = 1;
    const auto serial = csv_of(run_experiment(cfg));
    cfg.workers = 3;
    const auto parallel = csv_of(run_experiment(cfg));
    CHECK(serial == parallel);
}

TEST_CASE("csv header and formatting are pinned") {
    CHECK(csv_header() ==
          std::string("decoder,snr_db,trials,error_events,ser,ber,mean_mults,"
                      "mean_nodes,seed"));
    auto cfg = base_config();
    cfg.trials = 5;
    auto text = csv_of(run_experiment(cfg));
    CHECK(text.find("decoder,snr_db,trials,error_events,ser,ber,mean_mults,"
                    "mean_nodes,seed\n") == 0);
    CHECK(text.find("ml,10,5,") != std::string::npos);
}

TEST_CASE("maximum likelihood is clean at high snr") {
    auto cfg = base_config();
    cfg.snr_db = {30.0};
    cfg.trials = 1000;
    auto rows = run_experiment(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].ser == 0.0);
    CHECK(rows[0].ber == 0.0);
    CHECK(rows[0].error_events == 0);
}

TEST_CASE("ml symbol error rate decreases with snr") {
    auto cfg = base_config();
    cfg.snr_db = {4.0, 10.0};
    cfg.trials = 10000;
    auto rows = run_experiment(cfg);
    const auto& low = find_row(rows, "ml", 4.0);
    const auto& high = find_row(rows, "ml", 10.0);
    REQUIRE(low.error_events >= 50);
    REQUIRE(high.error_events >= 50);
    CHECK(high.ser < low.ser);
}

TEST_CASE("hard decoders agree with ml where they must") {
    auto cfg = base_config();
    cfg.q = 16;
    cfg.decoders = {parse_decoder_spec("ml"), parse_decoder_spec("sphere"),
                    parse_decoder_spec("sb-stack"), parse_decoder_spec("stack")};
    cfg.snr_db = {8.0};
    cfg.trials = 400;
    auto rows = run_experiment(cfg);
    const double ml_ser = find_row(rows, "ml", 8.0).ser;
    CHECK(find_row(rows, "sphere", 8.0).ser == doctest::Approx(ml_ser));
    CHECK(find_row(rows, "sb-stack", 8.0).ser == doctest::Approx(ml_ser));
    CHECK(find_row(rows, "stack", 8.0).ser == doctest::Approx(ml_ser));
}

TEST_CASE("lattice mode runs the unconstrained searches") {
    ExperimentConfig cfg;
    cfg.m = 2;
    cfg.n_rx = 2;
    cfg.q = 4;
    cfg.mode = "lattice";
    cfg.radius = "noise-fading";
    cfg.decoders = {parse_decoder_spec("sphere"), parse_decoder_spec("sb-stack"),
                    parse_decoder_spec("zf-dfe"),
                    parse_decoder_spec("neighbor-stack:t=2")};
    cfg.snr_db = {12.0};
    cfg.trials = 300;
    cfg.master_seed = 3;
    validate_config(cfg);
    auto rows = run_experiment(cfg);
    REQUIRE(rows.size() == 4);
    const double sphere_ser = find_row(rows, "sphere", 12.0).ser;
    const double sb_ser = find_row(rows, "sb-stack", 12.0).ser;
    const double zf_ser = find_row(rows, "zf-dfe", 12.0).ser;
    CHECK(sphere_ser == doctest::Approx(sb_ser));
    CHECK(sphere_ser <= zf_ser + 1e-12);
}

TEST_CASE("golden dispersion runs end to end") {
    ExperimentConfig cfg;
    cfg.scheme = "stbc";
    cfg.stbc = "golden";
    cfg.m = 2;
    cfg.n_rx = 2;
    cfg.q = 4;
    cfg.decoders = {parse_decoder_spec("sphere")};
    cfg.snr_db = {14.0};
    cfg.trials = 100;
    validate_config(cfg);
    auto rows = run_experiment(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].trials_run == 100);
    CHECK(rows[0].ser <= 0.5);
}

TEST_CASE("coded frames run and replay deterministically") {
    ExperimentConfig cfg;
    cfg.coded = true;
    cfg.info_bits = 20;
    cfg.m = 2;
    cfg.n_rx = 2;
    cfg.q = 4;
    cfg.decoders = {parse_decoder_spec("soft-sb-stack:np=4"),
                    parse_decoder_spec("lsd:np=4")};
    cfg.snr_db = {3.0};
    cfg.trials = 40;
    validate_config(cfg);
    auto rows = run_experiment(cfg);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.trials_run == 40);
        CHECK(r.ber >= 0.0);
        CHECK(r.ber <= 0.5);
    }
    CHECK(csv_of(rows) == csv_of(run_experiment(cfg)));
}

TEST_CASE("interleaving and quantization stay inside the pipeline") {
    ExperimentConfig cfg;
    cfg.coded = true;
    cfg.info_bits = 20;
    cfg.m = 2;
    cfg.n_rx = 2;
    cfg.q = 4;
    cfg.interleave = true;
    cfg.llr_bits = 3;
    cfg.decoders = {parse_decoder_spec("soft-sb-stack:np=4")};
    cfg.snr_db = {4.0};
    cfg.trials = 30;
    validate_config(cfg);
    auto rows = run_experiment(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].trials_run == 30);
    CHECK(csv_of(rows) == csv_of(run_experiment(cfg)));
}

TEST_CASE("coding helps at moderate ebn0") {
    // Coded and uncoded runs at the same 6 dB Eb/N0. For the uncoded 4-qam
    // link the per-antenna snr equals ebn0 * m * bits_per_symbol.
    ExperimentConfig coded;
    coded.coded = true;
    coded.info_bits = 200;
    coded.m = 2;
    coded.n_rx = 2;
    coded.q = 4;
    coded.decoders = {parse_decoder_spec("soft-sb-stack:np=6")};
    coded.snr_db = {6.0};
    coded.trials = 500;
    validate_config(coded);
    const double coded_ber = run_experiment(coded)[0].ber;

    ExperimentConfig uncoded = base_config();
    uncoded.snr_db = {6.0 + 10.0 * std::log10(4.0)};
    uncoded.trials = 25000;
    const double uncoded_ber = run_experiment(uncoded)[0].ber;

    CHECK(coded_ber <= uncoded_ber);
}
