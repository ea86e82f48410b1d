#pragma once

#include <vector>

#include "sbstack/tree_search.hpp"

namespace sbstack {

struct CandidateEntry {
    Eigen::VectorXi point;
    double cost = 0.0;
};

// Candidate set for soft demapping, sorted by ascending cost. truncated means
// the producing search could not reach the requested size.
struct CandidateList {
    std::vector<CandidateEntry> entries;
    bool truncated = false;
    SearchStats stats;
};

struct ListPolicy {
    enum class Kind { fixed_size, cost_ceiling };
    Kind kind = Kind::fixed_size;
    int np = 8;
    double ceiling = 0.0;
};

struct LlrVector {
    std::vector<double> values;
};

// Best-first list search: with zero bias leaves leave the stack in ascending
// cost order, so a fixed_size policy yields the np best leaves inside the
// sphere. If the sphere empties with no leaf at all the radius grows and the
// search restarts; a partial harvest is returned as truncated instead. With a
// cost_ceiling policy the sphere radius is the ceiling itself and the list
// holds every leaf under it. Entries are always sorted by raw cost.
CandidateList soft_sb_stack(const TriangularSystem& sys, const ConstellationSpec& spec,
                            const RadiusPolicy& policy, const ListPolicy& list_policy,
                            double bias = 0.0,
                            std::uint64_t max_nodes = kDefaultNodeBudget);

// Depth-first list search inside a fixed sphere of squared radius
// 2 * noise_var * zeta * np - residual. The radius never grows or shrinks;
// once the list is full the worst entry is replaced by any cheaper leaf.
// zeta <= 0 selects the default tail rule (see default_list_zeta). residual
// accounts for the received energy outside the lattice span and is zero for
// square systems.
CandidateList list_sphere_decode(const TriangularSystem& sys,
                                 const ConstellationSpec& spec, int np,
                                 double zeta = 0.0, double residual = 0.0,
                                 std::uint64_t max_nodes = kDefaultNodeBudget);

// 0.99 tail quantile of chi-square with 2*np degrees of freedom, normalized
// by its mean. Always above 1.
double default_list_zeta(int np);

// Linear radius C of the ball expected to hold np lattice points:
// vol(ball_n(C)) = np * |det R|. expansion multiplies the squared radius.
double shifted_list_radius(const TriangularSystem& sys, int np,
                           double expansion = 1.0);

// Max-log bit LLRs from a candidate list. sigma2_channel is the complex noise
// variance (twice the per-real-component variance). Bit 1 corresponds to the
// positive antipodal symbol, so a positive LLR favors bit 1. Bits with an
// empty hypothesis set saturate at +-llr_max, as does any larger magnitude.
LlrVector llr_maxlog(const CandidateList& list, const ConstellationSpec& spec,
                     double sigma2_channel, double llr_max = 25.0);

// Exact posterior LLRs over the candidate list via log-sum-exp.
LlrVector llr_exact(const CandidateList& list, const ConstellationSpec& spec,
                    double sigma2_channel, double llr_max = 25.0);

// Symmetric midtread quantizer with 2^bits - 1 levels spanning [-llr_max,
// llr_max]. bits must be at least 2, otherwise no level remains beside zero.
LlrVector llr_quantize(const LlrVector& llrs, int bits, double llr_max = 25.0);

}  // namespace sbstack
