#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sbstack/comm_chain.hpp"
#include "sbstack/soft_output.hpp"

namespace sbstack {

// One decoder selection, e.g. "sb-stack:bias_rel=0.5". id keeps the exact
// text so result rows stay traceable.
struct DecoderSpec {
    std::string id;
    std::string name;
    std::map<std::string, std::string> params;
};

DecoderSpec parse_decoder_spec(const std::string& text);

struct ExperimentConfig {
    int schema_version = 1;
    std::string scheme = "sm";  // sm | stbc
    int m = 2;
    int n_rx = 2;
    int q = 4;
    std::string mode = "constellation";  // constellation | lattice
    bool coded = false;
    int info_bits = 200;
    bool interleave = false;
    int llr_bits = 0;  // 0 = unquantized
    double llr_max = 25.0;
    std::string stbc = "identity";  // identity | golden
    std::vector<DecoderSpec> decoders;
    std::vector<double> snr_db;  // interpreted as Eb/N0 when coded
    long trials = 1000;
    std::uint64_t master_seed = 1;
    int workers = 1;
    std::string radius = "noise";  // noise | noise-fading | fixed:<c2>
    double growth = 2.0;
};

struct ResultRow {
    std::string decoder_id;
    double snr_db = 0.0;
    long trials_run = 0;
    std::uint64_t error_events = 0;
    double ser = 0.0;
    double ber = 0.0;
    double mean_mults = 0.0;
    double mean_nodes = 0.0;
    std::uint64_t seed = 0;
};

// Flat key = value format, '#' starts a comment. Unknown keys are rejected.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Throws std::invalid_argument describing the first problem found.
void validate_config(const ExperimentConfig& cfg);

ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

// One line per decoder name: "name - description".
std::vector<std::string> decoder_catalog();

// Runs every (decoder, snr) cell. Scheduling is deterministic: results do not
// depend on cfg.workers, and repeat runs with the same seed match byte for
// byte. Trials whose search exceeds the node budget are dropped from the
// averages and reported on stderr.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

std::string csv_header();
void write_csv(std::ostream& os, const std::vector<ResultRow>& rows);

}  // namespace sbstack
