#include "sbstack/sim.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include "sbstack/lattice.hpp"
#include "sbstack/tree_search.hpp"
#include "search_common.hpp"

namespace sbstack {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

double parse_double(const std::string& v, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("bad number for " + what + ": '" + v + "'");
    }
}

long parse_long(const std::string& v, const std::string& what) {
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("bad integer for " + what + ": '" + v + "'");
    }
}

bool parse_bool(const std::string& v, const std::string& what) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw std::invalid_argument("bad flag for " + what + ": '" + v + "'");
}

enum class DecoderKind {
    ml,
    zf,
    zf_dfe,
    sphere,
    sb_stack,
    stack,
    kbest,
    neighbor_stack,
    soft_sb,
    lsd,
};

struct KindInfo {
    const char* name;
    DecoderKind kind;
    const char* params;
    const char* blurb;
};

constexpr KindInfo kKinds[] = {
    {"ml", DecoderKind::ml, "", "exhaustive search over the full grid"},
    {"zf", DecoderKind::zf, "", "zero-forcing with per-component slicing"},
    {"zf-dfe", DecoderKind::zf_dfe, "", "successive slicing with decision feedback"},
    {"sphere", DecoderKind::sphere, "radius", "depth-first search with shrinking radius"},
    {"sb-stack", DecoderKind::sb_stack, "radius,bias,bias_rel",
     "best-first search bounded by a sphere"},
    {"stack", DecoderKind::stack, "bias,bias_rel",
     "best-first search over the full tree"},
    {"kbest", DecoderKind::kbest, "k,bias,bias_rel",
     "stack search keeping only the best k nodes"},
    {"neighbor-stack", DecoderKind::neighbor_stack, "t,bias,bias_rel",
     "best-first search in a box around the dfe point (lattice mode)"},
    {"soft-sb-stack", DecoderKind::soft_sb, "np,radius,ceiling",
     "best-first candidate list for soft output (coded runs)"},
    {"lsd", DecoderKind::lsd, "np,zeta",
     "depth-first candidate list inside a fixed sphere (coded runs)"},
};

const KindInfo* find_kind(const std::string& name) {
    for (const auto& k : kKinds)
        if (name == k.name) return &k;
    return nullptr;
}

bool param_allowed(const KindInfo& info, const std::string& key) {
    for (const auto& p : split(info.params, ','))
        if (p == key) return true;
    return false;
}

RadiusPolicy parse_radius(const std::string& text, double growth) {
    RadiusPolicy p;
    p.growth = growth;
    if (text == "noise") {
        p.kind = RadiusPolicy::Kind::noise_scaled;
    } else if (text == "noise-fading") {
        p.kind = RadiusPolicy::Kind::noise_and_fading;
    } else if (text.rfind("fixed:", 0) == 0) {
        p.kind = RadiusPolicy::Kind::fixed;
        p.c2 = parse_double(text.substr(6), "radius");
        if (p.c2 <= 0.0) throw std::invalid_argument("fixed radius must be positive");
    } else {
        throw std::invalid_argument("unknown radius rule '" + text + "'");
    }
    return p;
}

struct ResolvedDecoder {
    DecoderKind kind = DecoderKind::ml;
    std::string id;
    bool has_radius = false;
    RadiusPolicy policy;
    double bias = 0.0;
    double bias_rel = 0.0;
    int k = 1;
    int t = 1;
    int np = 8;
    double zeta = 0.0;
    double ceiling = 0.0;
};

ResolvedDecoder resolve_decoder(const DecoderSpec& spec, const ExperimentConfig& cfg) {
    const KindInfo* info = find_kind(spec.name);
    if (!info) throw std::invalid_argument("unknown decoder '" + spec.name + "'");
    ResolvedDecoder d;
    d.kind = info->kind;
    d.id = spec.id;
    for (const auto& [key, val] : spec.params) {
        if (!param_allowed(*info, key))
            throw std::invalid_argument("decoder '" + spec.name +
                                        "' does not take parameter '" + key + "'");
        if (key == "radius") {
            d.policy = parse_radius(val, cfg.growth);
            d.has_radius = true;
        } else if (key == "bias") {
            d.bias = parse_double(val, "bias");
        } else if (key == "bias_rel") {
            d.bias_rel = parse_double(val, "bias_rel");
        } else if (key == "k") {
            d.k = static_cast<int>(parse_long(val, "k"));
            if (d.k < 1) throw std::invalid_argument("k must be at least 1");
        } else if (key == "t") {
            d.t = static_cast<int>(parse_long(val, "t"));
            if (d.t < 0) throw std::invalid_argument("t must be non-negative");
        } else if (key == "np") {
            d.np = static_cast<int>(parse_long(val, "np"));
            if (d.np < 1) throw std::invalid_argument("np must be at least 1");
        } else if (key == "zeta") {
            d.zeta = parse_double(val, "zeta");
            if (d.zeta != 0.0 && d.zeta <= 1.0)
                throw std::invalid_argument("zeta must exceed 1 (or 0 for the default)");
        } else if (key == "ceiling") {
            d.ceiling = parse_double(val, "ceiling");
            if (d.ceiling <= 0.0) throw std::invalid_argument("ceiling must be positive");
        }
    }
    if (!d.has_radius) d.policy = parse_radius(cfg.radius, cfg.growth);
    return d;
}

bool is_soft(DecoderKind k) {
    return k == DecoderKind::soft_sb || k == DecoderKind::lsd;
}

bool needs_alphabet(DecoderKind k) {
    return k == DecoderKind::ml || k == DecoderKind::stack || k == DecoderKind::kbest;
}

}  // namespace

DecoderSpec parse_decoder_spec(const std::string& text) {
    DecoderSpec spec;
    spec.id = trim(text);
    const auto parts = split(spec.id, ':');
    if (parts.empty() || parts[0].empty())
        throw std::invalid_argument("empty decoder entry");
    spec.name = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("decoder parameter '" + parts[i] +
                                        "' is not key=value");
        const std::string key = trim(parts[i].substr(0, eq));
        const std::string val = trim(parts[i].substr(eq + 1));
        if (key.empty() || val.empty())
            throw std::invalid_argument("decoder parameter '" + parts[i] +
                                        "' is not key=value");
        if (!spec.params.emplace(key, val).second)
            throw std::invalid_argument("duplicate decoder parameter '" + key + "'");
    }
    return spec;
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    cfg.decoders.clear();
    cfg.snr_db.clear();
    bool have_schema = false;
    double snr_min = 0, snr_max = 0, snr_step = 0;
    bool have_min = false, have_max = false, have_step = false;

    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw std::invalid_argument("line " + std::to_string(lineno) +
                                        ": expected key = value");

        if (key == "schema_version") {
            cfg.schema_version = static_cast<int>(parse_long(val, key));
            have_schema = true;
        } else if (key == "scheme") {
            cfg.scheme = val;
        } else if (key == "m") {
            cfg.m = static_cast<int>(parse_long(val, key));
        } else if (key == "n") {
            cfg.n_rx = static_cast<int>(parse_long(val, key));
        } else if (key == "q") {
            cfg.q = static_cast<int>(parse_long(val, key));
        } else if (key == "mode") {
            cfg.mode = val;
        } else if (key == "coded") {
            cfg.coded = parse_bool(val, key);
        } else if (key == "info_bits") {
            cfg.info_bits = static_cast<int>(parse_long(val, key));
        } else if (key == "interleave") {
            cfg.interleave = parse_bool(val, key);
        } else if (key == "llr_bits") {
            cfg.llr_bits = static_cast<int>(parse_long(val, key));
        } else if (key == "llr_max") {
            cfg.llr_max = parse_double(val, key);
        } else if (key == "stbc") {
            cfg.stbc = val;
        } else if (key == "decoders") {
            for (const auto& entry : split(val, ','))
                cfg.decoders.push_back(parse_decoder_spec(entry));
        } else if (key == "snr_db") {
            for (const auto& entry : split(val, ','))
                cfg.snr_db.push_back(parse_double(entry, key));
        } else if (key == "snr_min") {
            snr_min = parse_double(val, key);
            have_min = true;
        } else if (key == "snr_max") {
            snr_max = parse_double(val, key);
            have_max = true;
        } else if (key == "snr_step") {
            snr_step = parse_double(val, key);
            have_step = true;
        } else if (key == "trials") {
            cfg.trials = parse_long(val, key);
        } else if (key == "master_seed") {
            cfg.master_seed = static_cast<std::uint64_t>(parse_long(val, key));
        } else if (key == "workers") {
            cfg.workers = static_cast<int>(parse_long(val, key));
        } else if (key == "radius") {
            cfg.radius = val;
        } else if (key == "growth") {
            cfg.growth = parse_double(val, key);
        } else {
            throw std::invalid_argument("line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
        }
    }

    if (!have_schema) throw std::invalid_argument("missing schema_version");
    if (cfg.snr_db.empty()) {
        if (!(have_min && have_max && have_step))
            throw std::invalid_argument(
                "need snr_db or the snr_min/snr_max/snr_step trio");
        if (snr_step <= 0.0) throw std::invalid_argument("snr_step must be positive");
        for (double s = snr_min; s <= snr_max + 1e-9; s += snr_step)
            cfg.snr_db.push_back(s);
    } else if (have_min || have_max || have_step) {
        throw std::invalid_argument("give either snr_db or a min/max/step grid");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.schema_version != 1)
        throw std::invalid_argument("unsupported schema_version");
    if (cfg.scheme != "sm" && cfg.scheme != "stbc")
        throw std::invalid_argument("scheme must be sm or stbc");
    make_qam(cfg.q);
    if (cfg.m < 1) throw std::invalid_argument("m must be at least 1");
    if (cfg.n_rx < cfg.m)
        throw std::invalid_argument("n must be at least m for the lattice to be full rank");
    if (cfg.mode != "constellation" && cfg.mode != "lattice")
        throw std::invalid_argument("mode must be constellation or lattice");
    if (cfg.stbc != "identity" && cfg.stbc != "golden")
        throw std::invalid_argument("stbc must be identity or golden");
    if (cfg.scheme == "stbc" && cfg.stbc == "golden" && cfg.m != 2)
        throw std::invalid_argument("golden dispersion needs m = 2");
    if (cfg.decoders.empty()) throw std::invalid_argument("no decoders selected");
    if (cfg.snr_db.empty()) throw std::invalid_argument("empty snr grid");
    if (cfg.snr_db.size() > 10000) throw std::invalid_argument("snr grid too large");
    for (std::size_t i = 1; i < cfg.snr_db.size(); ++i)
        if (cfg.snr_db[i] <= cfg.snr_db[i - 1])
            throw std::invalid_argument("snr grid must be strictly increasing");
    if (cfg.trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (cfg.workers < 1 || cfg.workers > 256)
        throw std::invalid_argument("workers must be in [1, 256]");
    if (cfg.growth <= 1.0) throw std::invalid_argument("growth must exceed 1");
    if (cfg.llr_bits != 0 && cfg.llr_bits < 2)
        throw std::invalid_argument("llr_bits must be 0 or at least 2");
    if (cfg.llr_max <= 0.0) throw std::invalid_argument("llr_max must be positive");
    parse_radius(cfg.radius, cfg.growth);

    for (const auto& spec : cfg.decoders) {
        const ResolvedDecoder d = resolve_decoder(spec, cfg);
        if (cfg.coded && !is_soft(d.kind))
            throw std::invalid_argument("decoder '" + spec.name +
                                        "' has no soft output; coded runs need one");
        if (!cfg.coded && is_soft(d.kind))
            throw std::invalid_argument("decoder '" + spec.name +
                                        "' produces soft output; set coded = true");
        if (cfg.mode == "lattice" && needs_alphabet(d.kind))
            throw std::invalid_argument("decoder '" + spec.name +
                                        "' needs a finite alphabet; use constellation mode");
        if (d.kind == DecoderKind::neighbor_stack && cfg.mode != "lattice")
            throw std::invalid_argument("neighbor-stack runs in lattice mode");
        if (is_soft(d.kind) && cfg.mode != "constellation")
            throw std::invalid_argument("soft decoders run in constellation mode");
    }

    if (cfg.coded) {
        if (cfg.scheme != "sm")
            throw std::invalid_argument("coded runs use the sm scheme");
        if (cfg.info_bits < 1) throw std::invalid_argument("info_bits must be positive");
        const ConvCode code = make_conv_code({7, 5});
        const ConstellationSpec spec = make_qam(cfg.q);
        const long coded_bits =
            static_cast<long>(cfg.info_bits + code.memory) * 2;
        const long per_use = 2L * spec.bits_per_axis() * cfg.m;
        if (coded_bits % per_use != 0)
            throw std::invalid_argument(
                "coded frame of " + std::to_string(coded_bits) +
                " bits does not fill whole channel uses of " +
                std::to_string(per_use) + " bits");
    }
}

std::vector<std::string> decoder_catalog() {
    std::vector<std::string> out;
    for (const auto& k : kKinds) {
        std::string line = k.name;
        if (*k.params) line += " [" + std::string(k.params) + "]";
        line += " - ";
        line += k.blurb;
        out.push_back(line);
    }
    return out;
}

std::vector<std::string> preset_names() {
    return {"fig3", "fig6", "fig6-2x2", "fig7", "fig7-64qam", "fig8", "fig9", "fig13"};
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig cfg;
    cfg.decoders.clear();
    cfg.snr_db.clear();
    auto dec = [&](const std::string& s) { cfg.decoders.push_back(parse_decoder_spec(s)); };
    auto grid = [&](double lo, double hi, double step) {
        for (double s = lo; s <= hi + 1e-9; s += step) cfg.snr_db.push_back(s);
    };

    if (name == "fig3") {
        cfg.scheme = "sm";
        cfg.m = cfg.n_rx = 4;
        cfg.q = 4;
        cfg.mode = "lattice";
        dec("zf-dfe");
        dec("neighbor-stack:t=1");
        dec("neighbor-stack:t=2");
        dec("neighbor-stack:t=3");
        dec("neighbor-stack:t=4");
        dec("sphere");
        grid(6, 16, 2);
        cfg.trials = 20000;
    } else if (name == "fig6" || name == "fig6-2x2") {
        cfg.scheme = "sm";
        cfg.m = cfg.n_rx = (name == "fig6" ? 4 : 2);
        cfg.q = 4;
        cfg.mode = "lattice";
        cfg.radius = "noise-fading";
        dec("sphere");
        dec("sb-stack");
        grid(4, 16, 2);
        cfg.trials = 10000;
    } else if (name == "fig7" || name == "fig7-64qam") {
        cfg.scheme = "sm";
        cfg.m = cfg.n_rx = 4;
        cfg.q = (name == "fig7" ? 16 : 64);
        cfg.mode = "constellation";
        dec("stack");
        dec("sb-stack");
        dec("sphere");
        if (name == "fig7") {
            grid(12, 24, 2);
            cfg.trials = 5000;
        } else {
            grid(18, 30, 2);
            cfg.trials = 2000;
        }
    } else if (name == "fig8") {
        cfg.scheme = "sm";
        cfg.m = cfg.n_rx = 4;
        cfg.q = 16;
        cfg.mode = "constellation";
        dec("sphere");
        dec("sb-stack");
        grid(12, 24, 2);
        cfg.trials = 10000;
    } else if (name == "fig9") {
        cfg.scheme = "sm";
        cfg.m = cfg.n_rx = 2;
        cfg.q = 16;
        cfg.mode = "constellation";
        dec("sphere");
        dec("sb-stack:bias_rel=0");
        dec("sb-stack:bias_rel=0.1");
        dec("sb-stack:bias_rel=0.5");
        dec("sb-stack:bias_rel=1");
        dec("zf-dfe");
        grid(6, 20, 2);
        cfg.trials = 20000;
    } else if (name == "fig13") {
        cfg.scheme = "sm";
        cfg.m = cfg.n_rx = 2;
        cfg.q = 4;
        cfg.mode = "constellation";
        cfg.coded = true;
        cfg.info_bits = 200;
        dec("soft-sb-stack:np=2");
        dec("soft-sb-stack:np=6");
        dec("lsd:np=2");
        dec("lsd:np=6");
        grid(0, 8, 2);
        cfg.trials = 1000;
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    validate_config(cfg);
    return cfg;
}

namespace {

struct Tally {
    std::uint64_t sym_err = 0;
    std::uint64_t bit_err = 0;
    std::uint64_t mults = 0;
    std::uint64_t nodes = 0;
    long run = 0;
    long skipped = 0;

    void add(const Tally& o) {
        sym_err += o.sym_err;
        bit_err += o.bit_err;
        mults += o.mults;
        nodes += o.nodes;
        run += o.run;
        skipped += o.skipped;
    }
};

Eigen::VectorXi clamp_to_grid(const Eigen::VectorXi& x, const ConstellationSpec& spec) {
    Eigen::VectorXi out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const int u = spec.clamp_u(
            round_half_away((static_cast<double>(x(i)) + spec.side - 1) / 2.0));
        out(i) = spec.x_from_u(u);
    }
    return out;
}

TriangularSystem shift_to_unit_lattice(const TriangularSystem& in,
                                       const ConstellationSpec& spec) {
    return detail::make_view(in, &spec).sys;
}

Eigen::VectorXi unit_lattice_to_symbols(const Eigen::VectorXi& u,
                                        const ConstellationSpec& spec) {
    Eigen::VectorXi x(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) x(i) = spec.x_from_u(u(i));
    return x;
}

// Analytic tariff of a full-grid enumeration with cached row sums.
SearchStats exhaustive_stats(int n, int side) {
    SearchStats st;
    double nodes = 1;
    for (int depth = 1; depth <= n; ++depth) {
        st.nodes_visited += static_cast<std::uint64_t>(nodes);  // parents at depth-1
        nodes *= side;
        st.nodes_generated += static_cast<std::uint64_t>(nodes);
        st.real_mults += static_cast<std::uint64_t>(nodes) * depth;
    }
    return st;
}

std::uint64_t linear_tariff(int n) {
    return static_cast<std::uint64_t>(n) * (n + 1) / 2;
}

struct TrialOutput {
    Eigen::VectorXi point;
    SearchStats stats;
};

TrialOutput decode_hard(const ResolvedDecoder& dec, const TriangularSystem& tri,
                        const ConstellationSpec& spec, bool lattice_mode,
                        double sigma2) {
    const double bias = dec.bias + dec.bias_rel * sigma2;
    TrialOutput out;

    RadiusPolicy policy = dec.policy;
    TriangularSystem tri_u;
    const TriangularSystem* search_sys = &tri;
    const ConstellationSpec* search_spec = &spec;
    if (lattice_mode) {
        // Resolve the radius against the original system, then search the
        // unit-spaced lattice without the box constraint.
        if (dec.kind == DecoderKind::sphere || dec.kind == DecoderKind::sb_stack) {
            policy.c2 = initial_radius(dec.policy, tri);
            policy.kind = RadiusPolicy::Kind::fixed;
        }
        tri_u = shift_to_unit_lattice(tri, spec);
        search_sys = &tri_u;
        search_spec = nullptr;
    }

    switch (dec.kind) {
        case DecoderKind::ml: {
            const MlResult r = brute_force_ml(tri, spec);
            out.point = r.point;
            out.stats = exhaustive_stats(tri.n, spec.side);
            return out;
        }
        case DecoderKind::zf: {
            const Eigen::VectorXd rho = zf_point(*search_sys);
            out.point = Eigen::VectorXi(tri.n);
            for (int i = 0; i < tri.n; ++i) {
                if (lattice_mode) {
                    out.point(i) = spec.x_from_u(round_half_away(rho(i)));
                } else {
                    const int u = spec.clamp_u(
                        round_half_away((rho(i) + spec.side - 1) / 2.0));
                    out.point(i) = spec.x_from_u(u);
                }
            }
            out.stats.real_mults = linear_tariff(tri.n);
            return out;
        }
        case DecoderKind::zf_dfe: {
            const Eigen::VectorXi p = babai_point(*search_sys,
                                                  lattice_mode ? nullptr : &spec);
            out.point = lattice_mode ? unit_lattice_to_symbols(p, spec) : p;
            out.stats.real_mults = linear_tariff(tri.n);
            return out;
        }
        case DecoderKind::sphere: {
            DecodeResult r = sphere_decode(*search_sys, search_spec, policy);
            out.point = lattice_mode ? unit_lattice_to_symbols(r.point, spec) : r.point;
            out.stats = r.stats;
            return out;
        }
        case DecoderKind::sb_stack: {
            DecodeResult r = sb_stack_decode(*search_sys, search_spec, policy, bias);
            out.point = lattice_mode ? unit_lattice_to_symbols(r.point, spec) : r.point;
            out.stats = r.stats;
            return out;
        }
        case DecoderKind::stack: {
            DecodeResult r = stack_decode(tri, spec, bias, 0);
            out.point = r.point;
            out.stats = r.stats;
            return out;
        }
        case DecoderKind::kbest: {
            DecodeResult r = stack_decode(tri, spec, bias,
                                          static_cast<std::size_t>(dec.k));
            out.point = r.point;
            out.stats = r.stats;
            return out;
        }
        case DecoderKind::neighbor_stack: {
            SearchRegionSpec region;
            region.t.assign(tri.n, dec.t);
            DecodeResult r = neighbor_stack_decode(*search_sys, region, bias);
            out.point = unit_lattice_to_symbols(r.point, spec);
            out.stats = r.stats;
            return out;
        }
        default:
            throw std::logic_error("soft decoder in hard path");
    }
}

void accumulate_stats(Tally& tally, const SearchStats& st) {
    tally.mults += st.real_mults;
    tally.nodes += st.nodes_visited;
}

void run_uncoded_trial(const ExperimentConfig& cfg, const ResolvedDecoder& dec,
                       std::size_t snr_idx, double snr_db, long trial, Tally& tally) {
    const ConstellationSpec spec = make_qam(cfg.q);
    const double sigma2 = snr_to_sigma2(snr_db, cfg.m);
    const double scale = 1.0 / std::sqrt(spec.avg_energy());

    std::mt19937_64 rng_ch(mix_seed(cfg.master_seed, snr_idx, trial, 0));
    std::mt19937_64 rng_sym(mix_seed(cfg.master_seed, snr_idx, trial, 1));
    std::mt19937_64 rng_noise(mix_seed(cfg.master_seed, snr_idx, trial, 2));

    TriangularSystem tri;
    Eigen::VectorXi x;
    if (cfg.scheme == "sm") {
        const Eigen::MatrixXcd h = scale * channel_sample(rng_ch, cfg.n_rx, cfg.m);
        const ComplexChannel ch = make_channel(h);
        x = random_point(rng_sym, spec, 2 * cfg.m);
        Eigen::VectorXcd s(cfg.m);
        for (int j = 0; j < cfg.m; ++j)
            s(j) = std::complex<double>(x(j), x(j + cfg.m));
        const Eigen::VectorXcd y =
            ch.entries * s + noise_sample(rng_noise, cfg.n_rx, sigma2);
        tri = qr_reduce(realify(ch, y), sigma2);
    } else {
        const StbcGenerator code =
            cfg.stbc == "golden" ? make_golden_stbc() : make_identity_stbc(cfg.m, cfg.m);
        const int t = code.t;
        const int mt = cfg.m * t;
        const Eigen::MatrixXcd h = scale * channel_sample(rng_ch, cfg.n_rx, cfg.m);
        const ComplexChannel ch = make_channel(h);
        x = random_point(rng_sym, spec, 2 * mt);
        Eigen::VectorXcd s(mt);
        for (int j = 0; j < mt; ++j)
            s(j) = std::complex<double>(x(j), x(j + mt));
        const Eigen::VectorXcd vec_x = code.phi * s;
        Eigen::MatrixXcd yb(cfg.n_rx, t);
        for (int k = 0; k < t; ++k) {
            yb.col(k) = ch.entries * vec_x.segment(static_cast<Eigen::Index>(k) * cfg.m,
                                                   cfg.m) +
                        noise_sample(rng_noise, cfg.n_rx, sigma2);
        }
        tri = qr_reduce(stbc_flatten(code, ch, yb), sigma2);
    }

    TrialOutput res;
    try {
        res = decode_hard(dec, tri, spec, cfg.mode == "lattice", sigma2);
    } catch (const BudgetExceeded&) {
        ++tally.skipped;
        return;
    }

    const int half = tri.n / 2;
    for (int j = 0; j < half; ++j)
        if (res.point(j) != x(j) || res.point(j + half) != x(j + half)) ++tally.sym_err;
    const auto tx_bits = qam_demap_bits(x, spec);
    const auto rx_bits = qam_demap_bits(clamp_to_grid(res.point, spec), spec);
    for (std::size_t i = 0; i < tx_bits.size(); ++i)
        if (tx_bits[i] != rx_bits[i]) ++tally.bit_err;

    accumulate_stats(tally, res.stats);
    ++tally.run;
}

CandidateList soft_list_with_growth(const TriangularSystem& tri,
                                    const ConstellationSpec& spec,
                                    const RadiusPolicy& policy, int np,
                                    double ceiling) {
    ListPolicy lp;
    if (ceiling > 0.0) {
        lp.kind = ListPolicy::Kind::cost_ceiling;
        lp.ceiling = ceiling;
        return soft_sb_stack(tri, spec, policy, lp);
    }
    lp.kind = ListPolicy::Kind::fixed_size;
    lp.np = np;
    CandidateList res = soft_sb_stack(tri, spec, policy, lp);
    for (int attempt = 0; res.truncated && attempt < 6; ++attempt) {
        RadiusPolicy wider;
        wider.kind = RadiusPolicy::Kind::fixed;
        wider.c2 = res.stats.final_radius_sq * policy.growth;
        wider.growth = policy.growth;
        CandidateList next = soft_sb_stack(tri, spec, wider, lp);
        next.stats.nodes_visited += res.stats.nodes_visited;
        next.stats.nodes_generated += res.stats.nodes_generated;
        next.stats.real_mults += res.stats.real_mults;
        next.stats.restarts += res.stats.restarts + 1;
        res = std::move(next);
    }
    return res;
}

void run_coded_trial(const ExperimentConfig& cfg, const ResolvedDecoder& dec,
                     std::size_t snr_idx, double ebn0_db, long trial, Tally& tally) {
    const ConstellationSpec spec = make_qam(cfg.q);
    const ConvCode code = make_conv_code({7, 5});
    const int bpa = spec.bits_per_axis();
    const int bits_per_use = 2 * bpa * cfg.m;
    const double sigma2 = ebn0_to_sigma2(ebn0_db, code.rate(), 2 * bpa);
    const double scale = 1.0 / std::sqrt(spec.avg_energy());

    std::mt19937_64 rng_ch(mix_seed(cfg.master_seed, snr_idx, trial, 0));
    std::mt19937_64 rng_bits(mix_seed(cfg.master_seed, snr_idx, trial, 1));
    std::mt19937_64 rng_noise(mix_seed(cfg.master_seed, snr_idx, trial, 2));

    Frame frame;
    frame.info_bits = random_bits(rng_bits, cfg.info_bits);
    frame.coded_bits = conv_encode(code, frame.info_bits);
    const int coded_len = static_cast<int>(frame.coded_bits.size());
    const int uses = coded_len / bits_per_use;

    std::vector<int> perm(coded_len);
    std::iota(perm.begin(), perm.end(), 0);
    if (cfg.interleave) {
        std::mt19937_64 rng_perm(mix_seed(cfg.master_seed, 0x17eaf, coded_len, 3));
        for (int i = coded_len - 1; i > 0; --i) {
            const int j = static_cast<int>(rng_perm() % (i + 1));
            std::swap(perm[i], perm[j]);
        }
    }
    std::vector<int> tx_bits(coded_len);
    for (int i = 0; i < coded_len; ++i) tx_bits[i] = frame.coded_bits[perm[i]];

    std::vector<double> llrs(coded_len, 0.0);
    SearchStats frame_stats;
    std::uint64_t sym_err = 0;

    for (int u = 0; u < uses; ++u) {
        const std::vector<int> slice(tx_bits.begin() + u * bits_per_use,
                                     tx_bits.begin() + (u + 1) * bits_per_use);
        const Eigen::VectorXi x = qam_map(slice, spec);
        const Eigen::MatrixXcd h = scale * channel_sample(rng_ch, cfg.n_rx, cfg.m);
        const ComplexChannel ch = make_channel(h);
        Eigen::VectorXcd s(cfg.m);
        for (int j = 0; j < cfg.m; ++j)
            s(j) = std::complex<double>(x(j), x(j + cfg.m));
        const Eigen::VectorXcd y =
            ch.entries * s + noise_sample(rng_noise, cfg.n_rx, sigma2);
        const TriangularSystem tri = qr_reduce(realify(ch, y), sigma2);

        CandidateList list;
        try {
            if (dec.kind == DecoderKind::soft_sb) {
                list = soft_list_with_growth(tri, spec, dec.policy, dec.np, dec.ceiling);
            } else {
                list = list_sphere_decode(tri, spec, dec.np, dec.zeta);
            }
        } catch (const BudgetExceeded&) {
            ++tally.skipped;
            return;
        }

        frame_stats.nodes_visited += list.stats.nodes_visited;
        frame_stats.real_mults += list.stats.real_mults;

        if (!list.entries.empty()) {
            const Eigen::VectorXi& best = list.entries.front().point;
            for (int j = 0; j < cfg.m; ++j)
                if (best(j) != x(j) || best(j + cfg.m) != x(j + cfg.m)) ++sym_err;
        } else {
            sym_err += cfg.m;
        }

        const LlrVector l = llr_maxlog(list, spec, 2.0 * sigma2, cfg.llr_max);
        if (!l.values.empty())
            for (int b = 0; b < bits_per_use; ++b) llrs[u * bits_per_use + b] = l.values[b];
    }

    std::vector<double> deint(coded_len);
    for (int i = 0; i < coded_len; ++i) deint[perm[i]] = llrs[i];

    if (cfg.llr_bits > 0) {
        LlrVector v;
        v.values = std::move(deint);
        deint = llr_quantize(v, cfg.llr_bits, cfg.llr_max).values;
    }

    const std::vector<int> decoded = viterbi_decode_soft(code, deint);
    for (std::size_t i = 0; i < frame.info_bits.size(); ++i)
        if (decoded[i] != frame.info_bits[i]) ++tally.bit_err;

    tally.sym_err += sym_err;
    accumulate_stats(tally, frame_stats);
    ++tally.run;
}

Tally run_cell(const ExperimentConfig& cfg, const ResolvedDecoder& dec,
               std::size_t snr_idx, double snr_db) {
    const int workers = std::max(1, cfg.workers);
    const long chunk = (cfg.trials + workers - 1) / workers;
    std::vector<Tally> parts(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        const long lo = w * chunk;
        const long hi = std::min(cfg.trials, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, w, lo, hi] {
            for (long t = lo; t < hi; ++t) {
                if (cfg.coded)
                    run_coded_trial(cfg, dec, snr_idx, snr_db, t, parts[w]);
                else
                    run_uncoded_trial(cfg, dec, snr_idx, snr_db, t, parts[w]);
            }
        });
    }
    for (auto& th : pool) th.join();
    Tally total;
    for (const auto& p : parts) total.add(p);
    return total;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const ConstellationSpec spec = make_qam(cfg.q);

    long syms_per_trial;
    long bits_per_trial;
    if (cfg.coded) {
        const ConvCode code = make_conv_code({7, 5});
        const long coded_len = 2L * (cfg.info_bits + code.memory);
        syms_per_trial = coded_len / (2 * spec.bits_per_axis());
        bits_per_trial = cfg.info_bits;
    } else {
        const int t = cfg.scheme == "stbc" ? cfg.m : 1;
        syms_per_trial = static_cast<long>(cfg.m) * t;
        bits_per_trial = syms_per_trial * 2 * spec.bits_per_axis();
    }

    std::vector<ResultRow> rows;
    for (const auto& dspec : cfg.decoders) {
        const ResolvedDecoder dec = resolve_decoder(dspec, cfg);
        for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
            const double snr = cfg.snr_db[si];
            const Tally t = run_cell(cfg, dec, si, snr);
            if (t.skipped > 0)
                std::cerr << "note: " << dspec.id << " @ " << snr << " dB dropped "
                          << t.skipped << " trial(s) over the node budget\n";
            ResultRow row;
            row.decoder_id = dspec.id;
            row.snr_db = snr;
            row.trials_run = t.run;
            row.error_events = cfg.coded ? t.bit_err : t.sym_err;
            if (t.run > 0) {
                row.ser = static_cast<double>(t.sym_err) /
                          (static_cast<double>(t.run) * syms_per_trial);
                row.ber = static_cast<double>(t.bit_err) /
                          (static_cast<double>(t.run) * bits_per_trial);
                row.mean_mults = static_cast<double>(t.mults) / t.run;
                row.mean_nodes = static_cast<double>(t.nodes) / t.run;
            }
            row.seed = cfg.master_seed;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string csv_header() {
    return "decoder,snr_db,trials,error_events,ser,ber,mean_mults,mean_nodes,seed";
}

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << csv_header() << '\n';
    char buf[320];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%g,%ld,%llu,%.10g,%.10g,%.10g,%.10g,%llu",
                      r.decoder_id.c_str(), r.snr_db, r.trials_run,
                      static_cast<unsigned long long>(r.error_events), r.ser, r.ber,
                      r.mean_mults, r.mean_nodes,
                      static_cast<unsigned long long>(r.seed));
        os << buf << '\n';
    }
}

}  // namespace sbstack
