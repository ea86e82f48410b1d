#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>

#include "sbstack/constellation.hpp"

namespace sbstack {

// Complex baseband channel, N receive rows by M transmit columns.
struct ComplexChannel {
    Eigen::MatrixXcd entries;
    int m = 0;
    int n = 0;
};

// Real-valued lattice model G*x + w with x integer (or QAM symbols).
// generator has dimension() columns; rows may exceed columns when N > M.
struct RealLatticeSystem {
    Eigen::MatrixXd generator;
    Eigen::VectorXd received;
    int dimension = 0;
};

// Linear dispersion matrix for a square space-time block code:
// vec(codeword) = phi * symbols, with phi complex (M*T) x (M*T).
struct StbcGenerator {
    Eigen::MatrixXcd phi;
    int m = 0;
    int t = 0;
};

// Upper-triangular reduced system ||z - R*x||^2 with positive diagonal.
struct TriangularSystem {
    Eigen::MatrixXd r;
    Eigen::VectorXd z;
    int n = 0;
    double noise_var = 1.0;
};

struct MlResult {
    Eigen::VectorXi point;
    double cost = 0.0;
};

ComplexChannel make_channel(const Eigen::MatrixXcd& h);

// Real expansion of y = H*s: stacks (Re, Im) of the received vector and maps
// the channel to [[Re -Im],[Im Re]], so the unknown is (Re s; Im s).
RealLatticeSystem realify(const ComplexChannel& ch, const Eigen::VectorXcd& received);

// Equivalent real system for one space-time codeword: Y = H*unvec(phi*s) + W
// observed over t channel uses, unknown s of m*t complex symbols.
RealLatticeSystem stbc_flatten(const StbcGenerator& code, const ComplexChannel& ch,
                               const Eigen::MatrixXcd& received_block);

// QR triangularization with the diagonal of R forced positive. Throws if the
// generator is rank deficient (|r_ii| <= 1e-10) or has fewer rows than columns.
TriangularSystem qr_reduce(const RealLatticeSystem& sys, double noise_var);

// Unconstrained least-squares solution R^-1 z.
Eigen::VectorXd zf_point(const TriangularSystem& sys);

// Successive rounding with decision feedback, from the last row up. With a
// constellation the per-row decision is clamped onto the grid; without one it
// rounds to the nearest integer.
Eigen::VectorXi babai_point(const TriangularSystem& sys,
                            const ConstellationSpec* spec = nullptr);

// Exhaustive minimization of ||z - R*x||^2 over the full symbol grid.
// Deterministic tie-break: lexicographically smallest point, first component
// most significant. Guarded against grids above 2^24 points.
MlResult brute_force_ml(const TriangularSystem& sys, const ConstellationSpec& spec);

double point_cost(const TriangularSystem& sys, const Eigen::VectorXi& x);

// Identity dispersion: symbols map straight onto the codeword columns.
StbcGenerator make_identity_stbc(int m, int t);

// Full-rate full-diversity 2x2 dispersion built on the golden ratio.
StbcGenerator make_golden_stbc();

}  // namespace sbstack
