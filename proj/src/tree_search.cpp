#include "sbstack/tree_search.hpp"

#include <cmath>
#include <limits>

#include "search_common.hpp"

namespace sbstack {

using detail::child_tariff;
using detail::kBoundsTariff;
using detail::make_view;
using detail::map_out;
using detail::View;

SearchNode make_root(const TriangularSystem& sys) {
    SearchNode root;
    root.level = sys.n + 1;
    root.partial_sums.assign(sys.n, 0.0);
    return root;
}

double node_cost(const SearchNode& parent, int symbol, const TriangularSystem& sys,
                 double bias) {
    const int col = parent.level - 2;
    const double d = sys.z(col) - parent.partial_sums[col] - sys.r(col, col) * symbol;
    const int child_depth = sys.n - col;
    return parent.raw_cost + d * d - bias * child_depth;
}

SearchNode make_child(const SearchNode& parent, int symbol, const TriangularSystem& sys,
                      double bias, std::uint64_t seq) {
    const int col = parent.level - 2;
    const double d = sys.z(col) - parent.partial_sums[col] - sys.r(col, col) * symbol;

    SearchNode child;
    child.level = parent.level - 1;
    child.partial = parent.partial;
    child.partial.push_back(symbol);
    child.raw_cost = parent.raw_cost + d * d;
    child.cost = child.raw_cost - bias * (sys.n - col);
    child.partial_sums.resize(col);
    for (int i = 0; i < col; ++i)
        child.partial_sums[i] = parent.partial_sums[i] + sys.r(i, col) * symbol;
    child.seq = seq;
    return child;
}

Bounds level_bounds(const SearchNode& node, const TriangularSystem& sys,
                    double radius_sq) {
    const int col = node.level - 2;
    const double t = radius_sq - node.raw_cost;
    if (t < 0) return Bounds{0, -1};
    const double rii = sys.r(col, col);
    const double center = (sys.z(col) - node.partial_sums[col]) / rii;
    const double delta = std::sqrt(t) / rii;
    Bounds b;
    b.lo = static_cast<int>(std::ceil(center - delta));
    b.hi = static_cast<int>(std::floor(center + delta));
    return b;
}

Bounds clamp_bounds(const Bounds& b, const ConstellationSpec& spec) {
    Bounds out;
    out.lo = b.lo < 0 ? 0 : b.lo;
    out.hi = b.hi > spec.side - 1 ? spec.side - 1 : b.hi;
    return out;
}

double initial_radius(const RadiusPolicy& policy, const TriangularSystem& sys) {
    switch (policy.kind) {
        case RadiusPolicy::Kind::fixed:
            if (policy.c2 <= 0.0)
                throw std::invalid_argument("fixed radius must be positive");
            return policy.c2;
        case RadiusPolicy::Kind::noise_scaled:
            return 2.0 * sys.n * sys.noise_var;
        case RadiusPolicy::Kind::noise_and_fading: {
            double min_col = std::numeric_limits<double>::infinity();
            for (int j = 0; j < sys.n; ++j) {
                double s = 0.0;
                for (int i = 0; i <= j; ++i) s += sys.r(i, j) * sys.r(i, j);
                if (s < min_col) min_col = s;
            }
            const double noise = 2.0 * sys.n * sys.noise_var;
            return noise < min_col ? noise : min_col;
        }
    }
    throw std::logic_error("unknown radius policy");
}

DecodeResult sphere_decode(const TriangularSystem& sys, const ConstellationSpec* spec,
                           const RadiusPolicy& policy, std::uint64_t max_nodes) {
    const View v = make_view(sys, spec);
    const TriangularSystem& S = v.sys;
    const int n = S.n;

    SearchStats st;
    double c2 = initial_radius(policy, sys);

    std::vector<double> acc_above(n, 0.0), rowsum(n, 0.0), center(n, 0.0);
    std::vector<int> lo(n, 0), hi(n, -1), cur(n, 0), x(n, 0);
    std::vector<int> best(n, 0);
    double best_cost = std::numeric_limits<double>::infinity();
    bool have = false;

    auto enter = [&](int c) {
        double s = 0.0;
        for (int j = c + 1; j < n; ++j) s += S.r(c, j) * x[j];
        rowsum[c] = s;
        center[c] = (S.z(c) - s) / S.r(c, c);
        const double t = c2 - acc_above[c];
        const double delta = std::sqrt(t) / S.r(c, c);
        lo[c] = static_cast<int>(std::ceil(center[c] - delta));
        hi[c] = static_cast<int>(std::floor(center[c] + delta));
        if (v.spec) {
            if (lo[c] < 0) lo[c] = 0;
            if (hi[c] > v.spec->side - 1) hi[c] = v.spec->side - 1;
        }
        cur[c] = lo[c];
        ++st.nodes_visited;
        st.real_mults += kBoundsTariff;
    };

    for (;;) {
        st.final_radius_sq = c2;
        int c = n - 1;
        acc_above[c] = 0.0;
        enter(c);
        while (true) {
            if (cur[c] > hi[c]) {
                if (c == n - 1) break;
                ++c;
                continue;
            }
            x[c] = cur[c]++;
            const double d = S.z(c) - rowsum[c] - S.r(c, c) * x[c];
            const double tot = acc_above[c] + d * d;
            ++st.nodes_generated;
            st.real_mults += child_tariff(n, c);
            if (st.nodes_generated + st.nodes_visited > max_nodes) throw BudgetExceeded{};
            if (tot > c2) {
                if (double(x[c]) > center[c]) cur[c] = hi[c] + 1;
                continue;
            }
            if (c == 0) {
                if (tot < best_cost) {
                    best_cost = tot;
                    best = x;
                    have = true;
                    c2 = tot;
                }
                continue;
            }
            acc_above[c - 1] = tot;
            --c;
            enter(c);
        }
        if (have) break;
        c2 *= policy.growth;
        ++st.restarts;
    }

    st.final_radius_sq = c2;
    DecodeResult res;
    res.point = map_out(v, std::vector<int>(best.rbegin(), best.rend()));
    res.cost = point_cost(sys, res.point);
    res.stats = st;
    return res;
}

DecodeResult sb_stack_decode(const TriangularSystem& sys, const ConstellationSpec* spec,
                             const RadiusPolicy& policy, double bias,
                             std::uint64_t max_nodes, std::size_t max_stack) {
    const View v = make_view(sys, spec);
    const TriangularSystem& S = v.sys;
    const int n = S.n;

    SearchStats st;
    double c2 = initial_radius(policy, sys);

    for (;;) {
        st.final_radius_sq = c2;
        NodeStack stack;
        std::uint64_t seq = 0;
        stack.push(make_root(S));
        while (!stack.empty()) {
            SearchNode node = stack.pop_best();
            if (node.level == 1) {
                DecodeResult res;
                res.point = map_out(v, node.partial);
                res.cost = point_cost(sys, res.point);
                res.stats = st;
                return res;
            }
            ++st.nodes_visited;
            Bounds b = level_bounds(node, S, c2);
            st.real_mults += kBoundsTariff;
            if (v.spec) b = clamp_bounds(b, *v.spec);
            const int col = node.level - 2;
            for (int s = b.lo; s <= b.hi; ++s) {
                stack.push(make_child(node, s, S, bias, ++seq));
                ++st.nodes_generated;
                st.real_mults += child_tariff(n, col);
                if (st.nodes_generated + st.nodes_visited > max_nodes)
                    throw BudgetExceeded{};
            }
            if (stack.size() > max_stack) throw BudgetExceeded{"stack capacity exceeded"};
        }
        c2 *= policy.growth;
        ++st.restarts;
    }
}

DecodeResult stack_decode(const TriangularSystem& sys, const ConstellationSpec& spec,
                          double bias, std::size_t capacity, std::uint64_t max_nodes,
                          std::size_t max_stack) {
    const View v = make_view(sys, &spec);
    const TriangularSystem& S = v.sys;
    const int n = S.n;

    SearchStats st;
    NodeStack stack(capacity);
    std::uint64_t seq = 0;
    stack.push(make_root(S));
    while (!stack.empty()) {
        SearchNode node = stack.pop_best();
        if (node.level == 1) {
            DecodeResult res;
            res.point = map_out(v, node.partial);
            res.cost = point_cost(sys, res.point);
            res.stats = st;
            return res;
        }
        ++st.nodes_visited;
        const int col = node.level - 2;
        for (int s = 0; s < spec.side; ++s) {
            stack.push(make_child(node, s, S, bias, ++seq));
            ++st.nodes_generated;
            st.real_mults += child_tariff(n, col);
            if (st.nodes_generated + st.nodes_visited > max_nodes) throw BudgetExceeded{};
        }
        stack.prune_to_capacity();
        if (stack.size() > max_stack) throw BudgetExceeded{"stack capacity exceeded"};
    }
    throw std::logic_error("stack drained without reaching a leaf");
}

DecodeResult neighbor_stack_decode(const TriangularSystem& sys,
                                   const SearchRegionSpec& region, double bias,
                                   std::uint64_t max_nodes) {
    const int n = sys.n;
    if (static_cast<int>(region.t.size()) != n)
        throw std::invalid_argument("region widths must match the system dimension");
    for (int t : region.t)
        if (t < 0) throw std::invalid_argument("region widths must be non-negative");

    SearchStats st;
    const Eigen::VectorXi anchor = babai_point(sys, nullptr);
    st.real_mults += std::uint64_t(n) * (n + 1) / 2;

    NodeStack stack;
    std::uint64_t seq = 0;
    stack.push(make_root(sys));
    while (!stack.empty()) {
        SearchNode node = stack.pop_best();
        if (node.level == 1) {
            DecodeResult res;
            res.point = Eigen::VectorXi(n);
            for (int j = 0; j < n; ++j) res.point(n - 1 - j) = node.partial[j];
            res.cost = point_cost(sys, res.point);
            res.stats = st;
            return res;
        }
        ++st.nodes_visited;
        const int col = node.level - 2;
        const int width = region.t[col];
        for (int s = anchor(col) - width; s <= anchor(col) + width; ++s) {
            stack.push(make_child(node, s, sys, bias, ++seq));
            ++st.nodes_generated;
            st.real_mults += child_tariff(n, col);
            if (st.nodes_generated + st.nodes_visited > max_nodes) throw BudgetExceeded{};
        }
    }
    throw std::logic_error("stack drained without reaching a leaf");
}

}  // namespace sbstack
