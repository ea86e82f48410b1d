#include "sbstack/soft_output.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>

#include "search_common.hpp"

namespace sbstack {

using detail::child_tariff;
using detail::kBoundsTariff;
using detail::make_view;
using detail::map_out;
using detail::View;

CandidateList soft_sb_stack(const TriangularSystem& sys, const ConstellationSpec& spec,
                            const RadiusPolicy& policy, const ListPolicy& list_policy,
                            double bias, std::uint64_t max_nodes) {
    const View v = make_view(sys, &spec);
    const TriangularSystem& S = v.sys;
    const int n = S.n;

    const bool fixed_size = list_policy.kind == ListPolicy::Kind::fixed_size;
    if (fixed_size && list_policy.np < 1)
        throw std::invalid_argument("list size must be at least 1");
    if (!fixed_size && list_policy.ceiling <= 0.0)
        throw std::invalid_argument("cost ceiling must be positive");

    CandidateList out;
    double c2 = fixed_size ? initial_radius(policy, sys) : list_policy.ceiling;

    for (;;) {
        out.stats.final_radius_sq = c2;
        out.entries.clear();
        NodeStack stack;
        std::uint64_t seq = 0;
        stack.push(make_root(S));
        while (!stack.empty()) {
            SearchNode node = stack.pop_best();
            if (node.level == 1) {
                CandidateEntry e;
                e.point = map_out(v, node.partial);
                e.cost = point_cost(sys, e.point);
                out.entries.push_back(std::move(e));
                if (fixed_size && static_cast<int>(out.entries.size()) == list_policy.np) {
                    out.truncated = false;
                    out.stats.final_radius_sq = c2;
                    std::stable_sort(out.entries.begin(), out.entries.end(),
                                     [](const CandidateEntry& a, const CandidateEntry& b) {
                                         return a.cost < b.cost;
                                     });
                    return out;
                }
                continue;
            }
            ++out.stats.nodes_visited;
            Bounds b = level_bounds(node, S, c2);
            out.stats.real_mults += kBoundsTariff;
            b = clamp_bounds(b, spec);
            const int col = node.level - 2;
            for (int s = b.lo; s <= b.hi; ++s) {
                stack.push(make_child(node, s, S, bias, ++seq));
                ++out.stats.nodes_generated;
                out.stats.real_mults += child_tariff(n, col);
                if (out.stats.nodes_generated + out.stats.nodes_visited > max_nodes)
                    throw BudgetExceeded{};
            }
        }
        if (!out.entries.empty() || !fixed_size) {
            out.truncated = fixed_size;
            std::stable_sort(out.entries.begin(), out.entries.end(),
                             [](const CandidateEntry& a, const CandidateEntry& b) {
                                 return a.cost < b.cost;
                             });
            return out;
        }
        c2 *= policy.growth;
        ++out.stats.restarts;
    }
}

double default_list_zeta(int np) {
    boost::math::chi_squared dist(2.0 * np);
    return boost::math::quantile(dist, 0.99) / (2.0 * np);
}

CandidateList list_sphere_decode(const TriangularSystem& sys,
                                 const ConstellationSpec& spec, int np, double zeta,
                                 double residual, std::uint64_t max_nodes) {
    if (np < 1) throw std::invalid_argument("list size must be at least 1");
    if (zeta <= 0.0) zeta = default_list_zeta(np);
    const double c2 = 2.0 * sys.noise_var * zeta * np - residual;
    if (c2 <= 0.0) throw std::invalid_argument("list sphere radius is not positive");

    const View v = make_view(sys, &spec);
    const TriangularSystem& S = v.sys;
    const int n = S.n;

    CandidateList out;
    out.stats.final_radius_sq = c2;

    std::vector<double> acc_above(n, 0.0), rowsum(n, 0.0), center(n, 0.0);
    std::vector<int> lo(n, 0), hi(n, -1), cur(n, 0), x(n, 0);

    auto enter = [&](int c) {
        double s = 0.0;
        for (int j = c + 1; j < n; ++j) s += S.r(c, j) * x[j];
        rowsum[c] = s;
        center[c] = (S.z(c) - s) / S.r(c, c);
        const double t = c2 - acc_above[c];
        const double delta = std::sqrt(t) / S.r(c, c);
        lo[c] = std::max(0, static_cast<int>(std::ceil(center[c] - delta)));
        hi[c] = std::min(spec.side - 1, static_cast<int>(std::floor(center[c] + delta)));
        cur[c] = lo[c];
        ++out.stats.nodes_visited;
        out.stats.real_mults += kBoundsTariff;
    };

    std::size_t worst = 0;
    auto refresh_worst = [&] {
        worst = 0;
        for (std::size_t i = 1; i < out.entries.size(); ++i)
            if (out.entries[i].cost > out.entries[worst].cost) worst = i;
    };

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
        ++out.stats.nodes_generated;
        out.stats.real_mults += child_tariff(n, c);
        if (out.stats.nodes_generated + out.stats.nodes_visited > max_nodes)
            throw BudgetExceeded{};
        if (tot > c2) {
            if (double(x[c]) > center[c]) cur[c] = hi[c] + 1;
            continue;
        }
        if (c == 0) {
            CandidateEntry e;
            e.point = Eigen::VectorXi(n);
            for (int k = 0; k < n; ++k) e.point(k) = spec.x_from_u(x[k]);
            e.cost = tot;
            if (static_cast<int>(out.entries.size()) < np) {
                out.entries.push_back(std::move(e));
                if (static_cast<int>(out.entries.size()) == np) refresh_worst();
            } else if (tot < out.entries[worst].cost) {
                out.entries[worst] = std::move(e);
                refresh_worst();
            }
            continue;
        }
        acc_above[c - 1] = tot;
        --c;
        enter(c);
    }

    out.truncated = static_cast<int>(out.entries.size()) < np;
    std::stable_sort(out.entries.begin(), out.entries.end(),
                     [](const CandidateEntry& a, const CandidateEntry& b) {
                         return a.cost < b.cost;
                     });
    for (auto& e : out.entries) e.cost = point_cost(sys, e.point);
    return out;
}

double shifted_list_radius(const TriangularSystem& sys, int np, double expansion) {
    if (np < 1) throw std::invalid_argument("list size must be at least 1");
    if (expansion <= 0.0) throw std::invalid_argument("expansion must be positive");
    double vol = 1.0;
    for (int i = 0; i < sys.n; ++i) vol *= sys.r(i, i);
    const double half = sys.n / 2.0;
    const double ball = std::pow(M_PI, half) / std::tgamma(half + 1.0);
    return std::sqrt(expansion) * std::pow(np * vol / ball, 1.0 / sys.n);
}

namespace {

// Transmission-order bit labels of every candidate point.
std::vector<std::vector<int>> candidate_bits(const CandidateList& list,
                                             const ConstellationSpec& spec) {
    std::vector<std::vector<int>> bits(list.entries.size());
    if (list.entries.empty()) return bits;
    const int n = static_cast<int>(list.entries.front().point.size());
    const int nb = spec.bits_per_axis();
    for (std::size_t e = 0; e < list.entries.size(); ++e) {
        bits[e].assign(static_cast<std::size_t>(n) * nb, 0);
        for (int k = 0; k < n; ++k) {
            int axis[8];
            axis_bits_from_symbol(spec, list.entries[e].point(k), axis);
            const int off = component_bit_offset(n, nb, k);
            for (int b = 0; b < nb; ++b) bits[e][off + b] = axis[b];
        }
    }
    return bits;
}

double clamp_llr(double v, double llr_max) {
    if (v > llr_max) return llr_max;
    if (v < -llr_max) return -llr_max;
    return v;
}

}  // namespace

LlrVector llr_maxlog(const CandidateList& list, const ConstellationSpec& spec,
                     double sigma2_channel, double llr_max) {
    LlrVector out;
    if (list.entries.empty()) return out;
    const auto bits = candidate_bits(list, spec);
    const std::size_t nbits = bits.front().size();
    const double inf = std::numeric_limits<double>::infinity();
    out.values.assign(nbits, 0.0);
    for (std::size_t j = 0; j < nbits; ++j) {
        double m0 = inf, m1 = inf;
        for (std::size_t e = 0; e < list.entries.size(); ++e) {
            double& m = bits[e][j] ? m1 : m0;
            if (list.entries[e].cost < m) m = list.entries[e].cost;
        }
        double v;
        if (m0 == inf && m1 == inf)
            v = 0.0;
        else if (m1 == inf)
            v = -llr_max;
        else if (m0 == inf)
            v = llr_max;
        else
            v = (m0 - m1) / sigma2_channel;
        out.values[j] = clamp_llr(v, llr_max);
    }
    return out;
}

LlrVector llr_exact(const CandidateList& list, const ConstellationSpec& spec,
                    double sigma2_channel, double llr_max) {
    LlrVector out;
    if (list.entries.empty()) return out;
    const auto bits = candidate_bits(list, spec);
    const std::size_t nbits = bits.front().size();
    const double inf = std::numeric_limits<double>::infinity();
    out.values.assign(nbits, 0.0);
    for (std::size_t j = 0; j < nbits; ++j) {
        double m[2] = {inf, inf};
        for (std::size_t e = 0; e < list.entries.size(); ++e) {
            const int b = bits[e][j];
            if (list.entries[e].cost < m[b]) m[b] = list.entries[e].cost;
        }
        double v;
        if (m[0] == inf && m[1] == inf) {
            v = 0.0;
        } else if (m[1] == inf) {
            v = -llr_max;
        } else if (m[0] == inf) {
            v = llr_max;
        } else {
            double s[2] = {0.0, 0.0};
            for (std::size_t e = 0; e < list.entries.size(); ++e) {
                const int b = bits[e][j];
                s[b] += std::exp(-(list.entries[e].cost - m[b]) / sigma2_channel);
            }
            v = (m[0] - m[1]) / sigma2_channel + std::log(s[1]) - std::log(s[0]);
        }
        out.values[j] = clamp_llr(v, llr_max);
    }
    return out;
}

LlrVector llr_quantize(const LlrVector& llrs, int bits, double llr_max) {
    if (bits < 2)
        throw std::invalid_argument("quantizer needs at least 2 bits for a nonzero level");
    if (llr_max <= 0.0) throw std::invalid_argument("llr_max must be positive");
    const int k = (1 << (bits - 1)) - 1;
    const double step = llr_max / k;
    LlrVector out;
    out.values.reserve(llrs.values.size());
    for (double v : llrs.values) {
        int q = round_half_away(v / step);
        if (q > k) q = k;
        if (q < -k) q = -k;
        out.values.push_back(q * step);
    }
    return out;
}

}  // namespace sbstack
