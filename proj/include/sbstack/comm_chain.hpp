#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "sbstack/constellation.hpp"

namespace sbstack {

// Feedforward convolutional code, one output per generator. Generators are
// octal tap masks over (current bit, state); memory is the register length.
struct ConvCode {
    std::vector<int> generators;
    int memory = 0;

    double rate() const { return 1.0 / static_cast<double>(generators.size()); }
};

ConvCode make_conv_code(const std::vector<int>& generators_octal);

struct Frame {
    std::vector<int> info_bits;
    std::vector<int> coded_bits;
};

// Zero-tailed encoding: memory flush bits are appended, so the output holds
// (info + memory) * generators bits.
std::vector<int> conv_encode(const ConvCode& code, const std::vector<int>& info);

// Soft-input Viterbi over bit LLRs (positive favors bit 1), maximizing the
// sum of llr * (2c - 1) over coded bits. The trellis starts and ends in the
// zero state; metric ties pick the lower predecessor state. Returns the info
// bits without the tail.
std::vector<int> viterbi_decode_soft(const ConvCode& code,
                                     const std::vector<double>& llrs);

// Maps bits onto a real symbol vector of dimension bits.size() / bits_per_axis
// using the Gray labeling and component layout from constellation.hpp.
Eigen::VectorXi qam_map(const std::vector<int>& bits, const ConstellationSpec& spec);

std::vector<int> qam_demap_bits(const Eigen::VectorXi& point,
                                const ConstellationSpec& spec);

// Box-Muller draw, one value per call, no cached state.
double standard_normal(std::mt19937_64& rng);

// IID complex entries with unit variance (0.5 per real component).
Eigen::MatrixXcd channel_sample(std::mt19937_64& rng, int n_rx, int m_tx);

// Complex noise with variance sigma2_real in each real component.
Eigen::VectorXcd noise_sample(std::mt19937_64& rng, int n, double sigma2_real);

// Per-real-component noise variance for an uncoded run at the given
// per-receive-antenna SNR, assuming unit-energy symbols from m_tx antennas.
double snr_to_sigma2(double snr_db, int m_tx);

// Per-real-component noise variance at a given Eb/N0 for a rate `rate` code
// over a constellation carrying bits_per_symbol bits per complex symbol.
double ebn0_to_sigma2(double ebn0_db, double rate, int bits_per_symbol);

std::vector<int> random_bits(std::mt19937_64& rng, int count);

// Uniform symbol vector; side is a power of two so masking is unbiased.
Eigen::VectorXi random_point(std::mt19937_64& rng, const ConstellationSpec& spec,
                             int n);

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic per-trial stream seed.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c);

}  // namespace sbstack
