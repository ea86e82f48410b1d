#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "sbstack/comm_chain.hpp"
#include "sbstack/lattice.hpp"
#include "sbstack/soft_output.hpp"

using namespace sbstack;

namespace {

// Highest-metric codeword by explicit enumeration of every info word.
std::vector<int> exhaustive_decode(const ConvCode& code, const std::vector<double>& llrs,
                                   int info_len) {
    double best = -1e300;
    std::vector<int> best_info;
    for (int word = 0; word < (1 << info_len); ++word) {
        std::vector<int> info(info_len);
        for (int i = 0; i < info_len; ++i) info[i] = (word >> i) & 1;
        const auto coded = conv_encode(code, info);
        double m = 0.0;
        for (std::size_t i = 0; i < coded.size(); ++i)
            m += llrs[i] * (2 * coded[i] - 1);
        if (m > best) {
            best = m;
            best_info = info;
        }
    }
    return best_info;
}

double codeword_metric(const ConvCode& code, const std::vector<int>& info,
                       const std::vector<double>& llrs) {
    const auto coded = conv_encode(code, info);
    double m = 0.0;
    for (std::size_t i = 0; i < coded.size(); ++i) m += llrs[i] * (2 * coded[i] - 1);
    return m;
}

}  // namespace

TEST_CASE("the standard rate-half code") {
    auto code = make_conv_code({7, 5});
    CHECK(code.memory == 2);
    CHECK(code.rate() == doctest::Approx(0.5));
    CHECK(code.generators.size() == 2);

    CHECK_THROWS_AS(make_conv_code({}), std::invalid_argument);
    CHECK_THROWS_AS(make_conv_code({0}), std::invalid_argument);
    CHECK_THROWS_AS(make_conv_code({19}), std::invalid_argument);
}

TEST_CASE("zero-tailed encoding of a frozen frame") {
    auto code = make_conv_code({7, 5});
    const auto out = conv_encode(code, {1, 0, 0});
    const std::vector<int> expect = {1, 1, 1, 0, 1, 1, 0, 0, 0, 0};
    CHECK(out == expect);
}

TEST_CASE("encoder output length and tail termination") {
    auto code = make_conv_code({7, 5});
    std::mt19937_64 rng(81);
    for (int len : {1, 2, 5, 17, 100}) {
        auto info = random_bits(rng, len);
        auto coded = conv_encode(code, info);
        CHECK(coded.size() == std::size_t(2 * (len + 2)));
        // zero tail: the last memory transitions drive the register to zero,
        // re-encoding the same info must reproduce the block exactly.
        CHECK(conv_encode(code, info) == coded);
    }
}

TEST_CASE("the encoder is linear over gf(2)") {
    auto code = make_conv_code({7, 5});
    std::mt19937_64 rng(82);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = random_bits(rng, 24);
        auto b = random_bits(rng, 24);
        std::vector<int> ab(24);
        for (int i = 0; i < 24; ++i) ab[i] = a[i] ^ b[i];
        auto ea = conv_encode(code, a);
        auto eb = conv_encode(code, b);
        auto eab = conv_encode(code, ab);
        for (std::size_t i = 0; i < eab.size(); ++i) CHECK(eab[i] == (ea[i] ^ eb[i]));
    }
}

TEST_CASE("viterbi inverts the encoder on clean llrs") {
    auto code = make_conv_code({7, 5});
    std::mt19937_64 rng(83);
    std::uniform_real_distribution<double> mag(0.5, 2.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int len = 10 + int(rng() % 40);
        auto info = random_bits(rng, len);
        auto coded = conv_encode(code, info);
        std::vector<double> llrs(coded.size());
        for (std::size_t i = 0; i < coded.size(); ++i)
            llrs[i] = (2 * coded[i] - 1) * mag(rng);
        CHECK(viterbi_decode_soft(code, llrs) == info);
    }
}

TEST_CASE("viterbi corrects a single flipped bit") {
    auto code = make_conv_code({7, 5});
    std::mt19937_64 rng(84);
    for (int trial = 0; trial < 200; ++trial) {
        auto info = random_bits(rng, 16);
        auto coded = conv_encode(code, info);
        std::vector<double> llrs(coded.size());
        for (std::size_t i = 0; i < coded.size(); ++i) llrs[i] = 2.0 * coded[i] - 1.0;
        llrs[rng() % llrs.size()] *= -1.0;
        CHECK(viterbi_decode_soft(code, llrs) == info);
    }
}

TEST_CASE("viterbi attains the exhaustive-search metric") {
    auto code = make_conv_code({7, 5});
    std::mt19937_64 rng(85);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 50; ++trial) {
        const int len = 8;
        std::vector<double> llrs(std::size_t(2 * (len + 2)));
        for (auto& v : llrs) v = g(rng);
        const auto via = viterbi_decode_soft(code, llrs);
        const auto oracle = exhaustive_decode(code, llrs, len);
        CHECK(codeword_metric(code, via, llrs) ==
              doctest::Approx(codeword_metric(code, oracle, llrs)).epsilon(1e-12));
        CHECK(via == oracle);
    }
}

TEST_CASE("viterbi with hard llrs maximizes agreement") {
    auto code = make_conv_code({7, 5});
    std::mt19937_64 rng(86);
    for (int trial = 0; trial < 50; ++trial) {
        const int len = 8;
        std::vector<double> llrs(std::size_t(2 * (len + 2)));
        for (auto& v : llrs) v = (rng() & 1) ? 1.0 : -1.0;
        const auto via = viterbi_decode_soft(code, llrs);
        const auto oracle = exhaustive_decode(code, llrs, len);
        CHECK(codeword_metric(code, via, llrs) ==
              doctest::Approx(codeword_metric(code, oracle, llrs)).epsilon(1e-12));
    }
}

TEST_CASE("viterbi validates the llr block") {
    auto code = make_conv_code({7, 5});
    CHECK_THROWS_AS(viterbi_decode_soft(code, std::vector<double>(7)),
                    std::invalid_argument);
    CHECK_THROWS_AS(viterbi_decode_soft(code, std::vector<double>(4)),
                    std::invalid_argument);
}

TEST_CASE("gray qam mapping round trips") {
    for (int q : {4, 16, 64}) {
        auto spec = make_qam(q);
        std::mt19937_64 rng(87);
        for (int trial = 0; trial < 50; ++trial) {
            auto bits = random_bits(rng, 2 * spec.bits_per_axis() * 3);
            auto point = qam_map(bits, spec);
            CHECK(qam_demap_bits(point, spec) == bits);
        }
    }
}

TEST_CASE("frozen 4-qam and 16-qam mappings") {
    auto q4 = make_qam(4);
    auto p = qam_map({0, 0}, q4);
    CHECK(p(0) == -1);
    CHECK(p(1) == -1);
    p = qam_map({1, 0}, q4);
    CHECK(p(0) == 1);
    CHECK(p(1) == -1);

    auto q16 = make_qam(16);
    p = qam_map({0, 0, 0, 0}, q16);
    CHECK(p(0) == -3);
    CHECK(p(1) == -3);
    p = qam_map({1, 0, 0, 1}, q16);
    CHECK(p(0) == 3);
    CHECK(p(1) == -1);
    CHECK_THROWS_AS(qam_map({1, 0, 1}, q16), std::invalid_argument);
}

TEST_CASE("mapping groups one symbol's bits contiguously") {
    auto spec = make_qam(16);
    // n = 4 real components = 2 complex symbols; symbol j occupies components
    // j and j + 2, so its four bits sit at offsets 4j .. 4j+3.
    std::vector<int> bits = {1, 1, 0, 1, 0, 0, 1, 0};
    auto x = qam_map(bits, spec);
    int axis_i[8], axis_q[8];
    axis_bits_from_symbol(spec, x(0), axis_i);
    axis_bits_from_symbol(spec, x(2), axis_q);
    CHECK(axis_i[0] == 1);
    CHECK(axis_i[1] == 1);
    CHECK(axis_q[0] == 0);
    CHECK(axis_q[1] == 1);
}

TEST_CASE("box-muller samples have standard moments") {
    std::mt19937_64 rng(88);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = standard_normal(rng);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("channel entries carry half the power per real component") {
    std::mt19937_64 rng(89);
    const int draws = 1500;
    double re_sq = 0.0, im_sq = 0.0, cross = 0.0;
    int count = 0;
    for (int d = 0; d < draws; ++d) {
        auto h = channel_sample(rng, 4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                re_sq += h(i, j).real() * h(i, j).real();
                im_sq += h(i, j).imag() * h(i, j).imag();
                cross += h(i, j).real() * h(i, j).imag();
                ++count;
            }
    }
    CHECK(re_sq / count == doctest::Approx(0.5).epsilon(0.02));
    CHECK(im_sq / count == doctest::Approx(0.5).epsilon(0.02));
    CHECK(std::abs(cross / count) < 0.01);
}

TEST_CASE("noise samples scale with the requested variance") {
    std::mt19937_64 rng(90);
    const double sigma2 = 0.37;
    double acc = 0.0;
    int count = 0;
    for (int d = 0; d < 4000; ++d) {
        auto w = noise_sample(rng, 4, sigma2);
        for (int i = 0; i < 4; ++i) {
            acc += w(i).real() * w(i).real() + w(i).imag() * w(i).imag();
            count += 2;
        }
    }
    CHECK(acc / count == doctest::Approx(sigma2).epsilon(0.03));
}

TEST_CASE("snr to noise variance") {
    CHECK(snr_to_sigma2(0.0, 1) == doctest::Approx(0.5));
    CHECK(snr_to_sigma2(10.0, 2) == doctest::Approx(0.1));
    CHECK(snr_to_sigma2(20.0, 4) == doctest::Approx(0.02));
}

TEST_CASE("ebn0 to noise variance") {
    CHECK(ebn0_to_sigma2(0.0, 0.5, 2) == doctest::Approx(0.5));
    CHECK(ebn0_to_sigma2(10.0, 0.5, 2) == doctest::Approx(0.05));
    CHECK(ebn0_to_sigma2(0.0, 1.0, 4) == doctest::Approx(0.125));
}

TEST_CASE("splitmix64 known values") {
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(1) == 0x910a2dec89025cc1ULL);
}

TEST_CASE("seed mixing separates streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 4; ++a)
        for (std::uint64_t b = 0; b < 8; ++b)
            for (std::uint64_t c = 0; c < 4; ++c) seen.insert(mix_seed(7, a, b, c));
    CHECK(seen.size() == 4 * 8 * 4);
    CHECK(mix_seed(7, 1, 2, 3) == mix_seed(7, 1, 2, 3));
    CHECK(mix_seed(7, 1, 2, 3) != mix_seed(8, 1, 2, 3));
}

TEST_CASE("random draws are deterministic and in range") {
    std::mt19937_64 a(123), b(123);
    CHECK(random_bits(a, 50) == random_bits(b, 50));
    auto spec = make_qam(16);
    auto pa = random_point(a, spec, 8);
    auto pb = random_point(b, spec, 8);
    CHECK((pa - pb).norm() == 0);
    for (int i = 0; i < 8; ++i) CHECK(spec.contains_x(pa(i)));
    for (int bit : random_bits(a, 100)) CHECK((bit == 0 || bit == 1));
}

TEST_CASE("noiseless soft pipeline recovers every frame") {
    auto code = make_conv_code({7, 5});
    auto spec = make_qam(4);
    std::mt19937_64 rng(91);
    for (int trial = 0; trial < 20; ++trial) {
        auto info = random_bits(rng, 20);
        auto coded = conv_encode(code, info);  // 44 bits = 11 uses of 2x2 4-qam
        std::vector<double> llrs;

        Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(2, 2);
        for (std::size_t off = 0; off < coded.size(); off += 4) {
            std::vector<int> chunk(coded.begin() + off, coded.begin() + off + 4);
            auto x = qam_map(chunk, spec);
            Eigen::VectorXcd s(2);
            s << std::complex<double>(x(0), x(2)), std::complex<double>(x(1), x(3));
            auto sys = realify(make_channel(h), s);
            auto tri = qr_reduce(sys, 0.25);
            ListPolicy lp{ListPolicy::Kind::fixed_size, 16, 0.0};
            RadiusPolicy huge{RadiusPolicy::Kind::fixed, 1e9, 2.0};
            auto list = soft_sb_stack(tri, spec, huge, lp);
            auto l = llr_maxlog(list, spec, 0.5);
            llrs.insert(llrs.end(), l.values.begin(), l.values.end());
        }
        CHECK(viterbi_decode_soft(code, llrs) == info);
    }
}
