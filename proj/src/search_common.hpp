#pragma once

#include "sbstack/constellation.hpp"
#include "sbstack/lattice.hpp"

#include <cstdint>
#include <vector>

namespace sbstack::detail {

// Branch metric tariff at row `col` of an n-row system.
inline std::uint64_t child_tariff(int n, int col) {
    return static_cast<std::uint64_t>(n - col);
}
inline constexpr std::uint64_t kBoundsTariff = 2;

// Effective system a search runs on. With a constellation the coordinates are
// shifted so the alphabet becomes {0, ..., side-1}: r' = 2r and
// z' = z + (side-1) * r * 1, which keeps every path metric unchanged.
struct View {
    TriangularSystem sys;
    const ConstellationSpec* spec = nullptr;
};

inline View make_view(const TriangularSystem& in, const ConstellationSpec* spec) {
    View v;
    v.spec = spec;
    if (!spec) {
        v.sys = in;
        return v;
    }
    v.sys.n = in.n;
    v.sys.noise_var = in.noise_var;
    v.sys.r = 2.0 * in.r;
    v.sys.z = in.z + double(spec->side - 1) * (in.r * Eigen::VectorXd::Ones(in.n));
    return v;
}

// partial[j] holds the symbol assigned to row n-1-j.
inline Eigen::VectorXi map_out(const View& v, const std::vector<int>& partial) {
    const int n = v.sys.n;
    Eigen::VectorXi x(n);
    for (int j = 0; j < n; ++j) {
        const int val = partial[j];
        x(n - 1 - j) = v.spec ? v.spec->x_from_u(val) : val;
    }
    return x;
}

}  // namespace sbstack::detail
