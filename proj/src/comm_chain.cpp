#include "sbstack/comm_chain.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace sbstack {

namespace {

int octal_to_mask(int octal) {
    int mask = 0, shift = 0;
    for (int v = octal; v > 0; v /= 10) {
        const int digit = v % 10;
        if (digit > 7) throw std::invalid_argument("generator is not octal");
        mask |= digit << shift;
        shift += 3;
    }
    return mask;
}

inline int parity(unsigned v) { return std::popcount(v) & 1; }

}  // namespace

ConvCode make_conv_code(const std::vector<int>& generators_octal) {
    if (generators_octal.empty())
        throw std::invalid_argument("code needs at least one generator");
    ConvCode code;
    int width = 0;
    for (int g : generators_octal) {
        const int mask = octal_to_mask(g);
        if (mask == 0) throw std::invalid_argument("generator must be nonzero");
        code.generators.push_back(mask);
        width = std::max(width, static_cast<int>(std::bit_width(static_cast<unsigned>(mask))));
    }
    code.memory = width - 1;
    return code;
}

std::vector<int> conv_encode(const ConvCode& code, const std::vector<int>& info) {
    std::vector<int> out;
    out.reserve((info.size() + code.memory) * code.generators.size());
    int state = 0;
    auto step = [&](int bit) {
        const int reg = (bit << code.memory) | state;
        for (int g : code.generators) out.push_back(parity(reg & g));
        state = reg >> 1;
    };
    for (int b : info) step(b & 1);
    for (int i = 0; i < code.memory; ++i) step(0);
    return out;
}

std::vector<int> viterbi_decode_soft(const ConvCode& code,
                                     const std::vector<double>& llrs) {
    const int k = static_cast<int>(code.generators.size());
    if (llrs.size() % k != 0)
        throw std::invalid_argument("llr count must be a multiple of the code outputs");
    const int steps = static_cast<int>(llrs.size()) / k;
    if (steps <= code.memory)
        throw std::invalid_argument("frame shorter than the code tail");

    const int states = 1 << code.memory;
    const double kNegInf = -1e18;

    // branch_out[p][b] packs the output bits of the transition from state p
    // on input b; next state is (b << memory - 1) | (p >> 1).
    std::vector<std::array<int, 2>> branch_out(states);
    for (int p = 0; p < states; ++p) {
        for (int b = 0; b < 2; ++b) {
            const int reg = (b << code.memory) | p;
            int packed = 0;
            for (int gi = 0; gi < k; ++gi)
                packed |= parity(reg & code.generators[gi]) << gi;
            branch_out[p][b] = packed;
        }
    }

    std::vector<double> metric(states, kNegInf), next_metric(states);
    metric[0] = 0.0;
    std::vector<std::vector<int>> prev(steps, std::vector<int>(states, -1));

    for (int t = 0; t < steps; ++t) {
        std::fill(next_metric.begin(), next_metric.end(), kNegInf);
        for (int s = 0; s < states; ++s) {
            const int b = code.memory > 0 ? s >> (code.memory - 1) : 0;
            for (int low = 0; low < 2; ++low) {
                const int p = ((s << 1) & (states - 1)) | low;
                if (metric[p] == kNegInf) continue;
                double bm = 0.0;
                const int packed = branch_out[p][b];
                for (int gi = 0; gi < k; ++gi) {
                    const int c = (packed >> gi) & 1;
                    bm += llrs[t * k + gi] * (2 * c - 1);
                }
                const double cand = metric[p] + bm;
                if (cand > next_metric[s] ||
                    (cand == next_metric[s] && p < prev[t][s])) {
                    next_metric[s] = cand;
                    prev[t][s] = p;
                }
            }
        }
        metric.swap(next_metric);
    }

    std::vector<int> bits(steps);
    int s = 0;
    for (int t = steps - 1; t >= 0; --t) {
        bits[t] = code.memory > 0 ? s >> (code.memory - 1) : 0;
        s = prev[t][s];
        if (s < 0) throw std::runtime_error("viterbi traceback broke");
    }
    bits.resize(steps - code.memory);
    return bits;
}

Eigen::VectorXi qam_map(const std::vector<int>& bits, const ConstellationSpec& spec) {
    const int nb = spec.bits_per_axis();
    if (bits.size() % (2 * nb) != 0)
        throw std::invalid_argument("bit count must fill whole complex symbols");
    const int n = static_cast<int>(bits.size()) / nb;
    Eigen::VectorXi x(n);
    for (int comp = 0; comp < n; ++comp) {
        const int off = component_bit_offset(n, nb, comp);
        x(comp) = axis_symbol_from_bits(spec, bits.data() + off);
    }
    return x;
}

std::vector<int> qam_demap_bits(const Eigen::VectorXi& point,
                                const ConstellationSpec& spec) {
    const int n = static_cast<int>(point.size());
    const int nb = spec.bits_per_axis();
    std::vector<int> bits(static_cast<std::size_t>(n) * nb);
    for (int comp = 0; comp < n; ++comp) {
        int axis[8];
        axis_bits_from_symbol(spec, point(comp), axis);
        const int off = component_bit_offset(n, nb, comp);
        for (int b = 0; b < nb; ++b) bits[off + b] = axis[b];
    }
    return bits;
}

double standard_normal(std::mt19937_64& rng) {
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Eigen::MatrixXcd channel_sample(std::mt19937_64& rng, int n_rx, int m_tx) {
    Eigen::MatrixXcd h(n_rx, m_tx);
    const double s = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < n_rx; ++i)
        for (int j = 0; j < m_tx; ++j) {
            const double re = standard_normal(rng);
            const double im = standard_normal(rng);
            h(i, j) = std::complex<double>(re * s, im * s);
        }
    return h;
}

Eigen::VectorXcd noise_sample(std::mt19937_64& rng, int n, double sigma2_real) {
    Eigen::VectorXcd w(n);
    const double s = std::sqrt(sigma2_real);
    for (int i = 0; i < n; ++i) {
        const double re = standard_normal(rng);
        const double im = standard_normal(rng);
        w(i) = std::complex<double>(re * s, im * s);
    }
    return w;
}

double snr_to_sigma2(double snr_db, int m_tx) {
    const double snr = std::pow(10.0, snr_db / 10.0);
    return static_cast<double>(m_tx) / (2.0 * snr);
}

double ebn0_to_sigma2(double ebn0_db, double rate, int bits_per_symbol) {
    const double ebn0 = std::pow(10.0, ebn0_db / 10.0);
    return 1.0 / (2.0 * rate * bits_per_symbol * ebn0);
}

std::vector<int> random_bits(std::mt19937_64& rng, int count) {
    std::vector<int> bits(count);
    for (int i = 0; i < count; ++i) bits[i] = static_cast<int>(rng() >> 63);
    return bits;
}

Eigen::VectorXi random_point(std::mt19937_64& rng, const ConstellationSpec& spec,
                             int n) {
    Eigen::VectorXi x(n);
    const std::uint64_t mask = static_cast<std::uint64_t>(spec.side) - 1;
    for (int i = 0; i < n; ++i)
        x(i) = spec.x_from_u(static_cast<int>(rng() & mask));
    return x;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) {
    std::uint64_t s = splitmix64(master ^ 0x5851f42d4c957f2dULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    s = splitmix64(s ^ c);
    return s;
}

}  // namespace sbstack
