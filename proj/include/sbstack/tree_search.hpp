#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "sbstack/constellation.hpp"
#include "sbstack/lattice.hpp"

namespace sbstack {

// Counters for one decode. real_mults follows a fixed convention so decoders
// can be compared: evaluating a branch metric at row i (0-based) costs n - i
// multiplies, computing the enumeration interval of a level costs 2, and
// preprocessing shared by every decoder (QR, coordinate shifts) is free.
struct SearchStats {
    std::uint64_t nodes_visited = 0;
    std::uint64_t nodes_generated = 0;
    std::uint64_t real_mults = 0;
    int restarts = 0;
    double final_radius_sq = 0.0;
};

// One partial path through the detection tree. Levels run from n+1 (root,
// nothing assigned) down to 1 (leaf, all n symbols assigned). partial[0]
// holds the symbol of the last row, i.e. assignment order follows the rows
// of R from the bottom up. partial_sums[i] caches the inner product of row i
// of R with the symbols assigned so far, for every row still undecided plus
// the row about to be decided (indices 0 .. level-2).
struct SearchNode {
    int level = 0;
    std::vector<int> partial;
    double raw_cost = 0.0;
    double cost = 0.0;
    std::vector<double> partial_sums;
    std::uint64_t seq = 0;

    int depth(int n) const { return n - level + 1; }
};

SearchNode make_root(const TriangularSystem& sys);

// Biased cost of the child of `parent` that assigns `symbol` to the next row.
// The bias rewards depth: cost = raw - bias * depth(child).
double node_cost(const SearchNode& parent, int symbol, const TriangularSystem& sys,
                 double bias);

SearchNode make_child(const SearchNode& parent, int symbol, const TriangularSystem& sys,
                      double bias, std::uint64_t seq);

struct Bounds {
    int lo = 0;
    int hi = -1;
    bool empty() const { return lo > hi; }
};

// Interval of symbols at the node's next row that keep the raw path cost
// within radius_sq. Empty when the remaining budget is already negative.
Bounds level_bounds(const SearchNode& node, const TriangularSystem& sys,
                    double radius_sq);

// Intersection with the shifted alphabet {0, ..., side-1}.
Bounds clamp_bounds(const Bounds& b, const ConstellationSpec& spec);

struct RadiusPolicy {
    enum class Kind { fixed, noise_scaled, noise_and_fading };
    Kind kind = Kind::noise_scaled;
    double c2 = 0.0;      // used by Kind::fixed
    double growth = 2.0;  // applied when a search exhausts the sphere
};

// Initial squared radius. noise_scaled gives 2*n*noise_var; noise_and_fading
// additionally caps it by the smallest squared column norm of the generator.
double initial_radius(const RadiusPolicy& policy, const TriangularSystem& sys);

// Per-component half-widths of the search region around the Babai point.
struct SearchRegionSpec {
    std::vector<int> t;
};

// Candidate container ordered by (cost, seq): equal costs pop in insertion
// order. A nonzero capacity turns it into a best-K container, enforced by
// prune_to_capacity().
class NodeStack {
  public:
    explicit NodeStack(std::size_t capacity = 0) : capacity_(capacity) {}

    void push(SearchNode n) { nodes_.insert(std::move(n)); }

    SearchNode pop_best() {
        auto it = nodes_.begin();
        SearchNode n = std::move(nodes_.extract(it).value());
        return n;
    }

    void prune_to_capacity() {
        if (capacity_ == 0) return;
        while (nodes_.size() > capacity_) nodes_.erase(std::prev(nodes_.end()));
    }

    const SearchNode& best() const { return *nodes_.begin(); }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    void clear() { nodes_.clear(); }

  private:
    struct ByCostSeq {
        bool operator()(const SearchNode& a, const SearchNode& b) const {
            if (a.cost != b.cost) return a.cost < b.cost;
            return a.seq < b.seq;
        }
    };
    std::set<SearchNode, ByCostSeq> nodes_;
    std::size_t capacity_;
};

struct DecodeResult {
    Eigen::VectorXi point;
    double cost = 0.0;
    SearchStats stats;
};

struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(const char* what = "node budget exceeded")
        : std::runtime_error(what) {}
};

inline constexpr std::uint64_t kDefaultNodeBudget = 100'000'000;
inline constexpr std::size_t kDefaultStackCap = 1'000'000;

// Depth-first search inside a sphere, enumerating each level's interval in
// ascending order and shrinking the radius to every leaf found. An empty
// sphere grows the radius by policy.growth and restarts. With a constellation
// the intervals are clamped onto the grid.
DecodeResult sphere_decode(const TriangularSystem& sys, const ConstellationSpec* spec,
                           const RadiusPolicy& policy,
                           std::uint64_t max_nodes = kDefaultNodeBudget);

// Best-first search with the same sphere constraint: nodes leave a stack in
// cost order, children outside the radius are never generated, and the first
// leaf popped is returned. bias subtracts bias*depth from the stored cost to
// favor deep nodes while bounds still use the raw cost.
DecodeResult sb_stack_decode(const TriangularSystem& sys, const ConstellationSpec* spec,
                             const RadiusPolicy& policy, double bias = 0.0,
                             std::uint64_t max_nodes = kDefaultNodeBudget,
                             std::size_t max_stack = kDefaultStackCap);

// Classical stack decoder over the full symbol tree: every pop generates all
// side children, no sphere constraint. capacity > 0 keeps only the best
// capacity nodes after each expansion (capacity 1 reproduces the Babai walk).
DecodeResult stack_decode(const TriangularSystem& sys, const ConstellationSpec& spec,
                          double bias = 0.0, std::size_t capacity = 0,
                          std::uint64_t max_nodes = kDefaultNodeBudget,
                          std::size_t max_stack = kDefaultStackCap);

// Best-first search restricted to the box around the Babai point whose
// half-width at row i is region.t[i]. Runs on the unconstrained integer
// lattice.
DecodeResult neighbor_stack_decode(const TriangularSystem& sys,
                                   const SearchRegionSpec& region, double bias = 0.0,
                                   std::uint64_t max_nodes = kDefaultNodeBudget);

}  // namespace sbstack
