#pragma once

#include <cmath>
#include <stdexcept>

namespace sbstack {

// Rounds half away from zero, so 0.5 -> 1 and -0.5 -> -1.
inline int round_half_away(double v) {
    return static_cast<int>(std::lround(v));
}

// Square q-QAM alphabet. Per real axis the symbols are the odd integers
// {-(side-1), ..., -1, +1, ..., side-1} where side = sqrt(q). The shifted
// coordinate u = (x + side - 1) / 2 lives in {0, ..., side-1}.
struct ConstellationSpec {
    int q = 4;
    int side = 2;

    int x_min() const { return -(side - 1); }
    int x_max() const { return side - 1; }

    // Mean energy of one complex symbol drawn uniformly from the grid.
    double avg_energy() const { return 2.0 * (q - 1) / 3.0; }

    int u_from_x(int x) const { return (x + side - 1) / 2; }
    int x_from_u(int u) const { return 2 * u - (side - 1); }

    int clamp_u(int u) const {
        if (u < 0) return 0;
        if (u > side - 1) return side - 1;
        return u;
    }

    bool contains_x(int x) const {
        return x >= x_min() && x <= x_max() && ((x - x_min()) % 2 == 0);
    }

    int bits_per_axis() const {
        int b = 0;
        for (int s = side; s > 1; s >>= 1) ++b;
        return b;
    }
};

inline int gray_encode(int i) { return i ^ (i >> 1); }

inline int gray_decode(int g) {
    int i = 0;
    for (; g; g >>= 1) i ^= g;
    return i;
}

// Reflected-Gray labeling along one real axis: position u gets label
// gray_encode(u), so neighboring amplitudes differ in one bit. Bits are
// MSB first.
inline int axis_symbol_from_bits(const ConstellationSpec& spec, const int* bits) {
    int g = 0;
    for (int b = 0; b < spec.bits_per_axis(); ++b) g = (g << 1) | (bits[b] & 1);
    return spec.x_from_u(gray_decode(g));
}

inline void axis_bits_from_symbol(const ConstellationSpec& spec, int x, int* bits) {
    const int g = gray_encode(spec.u_from_x(x));
    const int nb = spec.bits_per_axis();
    for (int b = 0; b < nb; ++b) bits[b] = (g >> (nb - 1 - b)) & 1;
}

// Bit layout of a real point of dimension n: the bits of complex symbol j
// occupy one contiguous group, in-phase axis first, and real components
// j and j + n/2 carry that symbol's two axes.
inline int component_bit_offset(int n, int bits_per_axis, int component) {
    const int half = n / 2;
    if (component < half) return component * 2 * bits_per_axis;
    return (component - half) * 2 * bits_per_axis + bits_per_axis;
}

// q must be an even power of two (4, 16, 64, ...) so the grid is square
// and each axis carries a whole number of bits.
inline ConstellationSpec make_qam(int q) {
    if (q < 4) throw std::invalid_argument("qam size must be >= 4");
    int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(q))));
    if (side * side != q) throw std::invalid_argument("qam size must be a perfect square");
    if ((side & (side - 1)) != 0) throw std::invalid_argument("qam side must be a power of two");
    return ConstellationSpec{q, side};
}

}  // namespace sbstack
