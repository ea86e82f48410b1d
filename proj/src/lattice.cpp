#include "sbstack/lattice.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sbstack {

ComplexChannel make_channel(const Eigen::MatrixXcd& h) {
    ComplexChannel ch;
    ch.entries = h;
    ch.n = static_cast<int>(h.rows());
    ch.m = static_cast<int>(h.cols());
    if (ch.m < 1 || ch.n < ch.m)
        throw std::invalid_argument("channel needs at least as many rows as columns");
    return ch;
}

static Eigen::MatrixXd realify_matrix(const Eigen::MatrixXcd& h) {
    const auto rows = h.rows();
    const auto cols = h.cols();
    Eigen::MatrixXd g(2 * rows, 2 * cols);
    g.topLeftCorner(rows, cols) = h.real();
    g.topRightCorner(rows, cols) = -h.imag();
    g.bottomLeftCorner(rows, cols) = h.imag();
    g.bottomRightCorner(rows, cols) = h.real();
    return g;
}

static Eigen::VectorXd realify_vector(const Eigen::VectorXcd& v) {
    Eigen::VectorXd r(2 * v.size());
    r.head(v.size()) = v.real();
    r.tail(v.size()) = v.imag();
    return r;
}

RealLatticeSystem realify(const ComplexChannel& ch, const Eigen::VectorXcd& received) {
    if (received.size() != ch.n)
        throw std::invalid_argument("received length must match channel rows");
    RealLatticeSystem sys;
    sys.generator = realify_matrix(ch.entries);
    sys.received = realify_vector(received);
    sys.dimension = 2 * ch.m;
    return sys;
}

RealLatticeSystem stbc_flatten(const StbcGenerator& code, const ComplexChannel& ch,
                               const Eigen::MatrixXcd& received_block) {
    const int m = code.m;
    const int t = code.t;
    if (ch.m != m) throw std::invalid_argument("channel columns must match code m");
    if (received_block.rows() != ch.n || received_block.cols() != t)
        throw std::invalid_argument("received block must be N x T");

    // vec(Y) = (I_T kron H) * vec(X) and vec(X) = phi * s.
    const int mt = m * t;
    Eigen::MatrixXcd kron = Eigen::MatrixXcd::Zero(ch.n * t, mt);
    for (int k = 0; k < t; ++k)
        kron.block(k * ch.n, k * m, ch.n, m) = ch.entries;
    const Eigen::MatrixXcd eq = kron * code.phi;

    Eigen::VectorXcd y(ch.n * t);
    for (int k = 0; k < t; ++k) y.segment(k * ch.n, ch.n) = received_block.col(k);

    RealLatticeSystem sys;
    sys.generator = realify_matrix(eq);
    sys.received = realify_vector(y);
    sys.dimension = 2 * mt;
    return sys;
}

TriangularSystem qr_reduce(const RealLatticeSystem& sys, double noise_var) {
    const int n = sys.dimension;
    if (sys.generator.cols() != n || sys.generator.rows() < n)
        throw std::invalid_argument("generator must have n columns and at least n rows");

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(sys.generator);
    Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    Eigen::VectorXd z = (qr.householderQ().transpose() * sys.received).head(n);

    for (int i = 0; i < n; ++i) {
        if (std::abs(r(i, i)) <= 1e-10)
            throw std::runtime_error("generator is rank deficient");
        if (r(i, i) < 0) {
            r.row(i).tail(n - i) *= -1.0;
            z(i) *= -1.0;
        }
    }

    TriangularSystem out;
    out.r = std::move(r);
    out.z = std::move(z);
    out.n = n;
    out.noise_var = noise_var;
    return out;
}

Eigen::VectorXd zf_point(const TriangularSystem& sys) {
    return sys.r.triangularView<Eigen::Upper>().solve(sys.z);
}

Eigen::VectorXi babai_point(const TriangularSystem& sys, const ConstellationSpec* spec) {
    const int n = sys.n;
    Eigen::VectorXi x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = 0.0;
        for (int j = i + 1; j < n; ++j) s += sys.r(i, j) * x(j);
        const double c = (sys.z(i) - s) / sys.r(i, i);
        if (spec) {
            const int u = spec->clamp_u(round_half_away((c + spec->side - 1) / 2.0));
            x(i) = spec->x_from_u(u);
        } else {
            x(i) = round_half_away(c);
        }
    }
    return x;
}

double point_cost(const TriangularSystem& sys, const Eigen::VectorXi& x) {
    double total = 0.0;
    for (int i = 0; i < sys.n; ++i) {
        double s = 0.0;
        for (int j = i; j < sys.n; ++j) s += sys.r(i, j) * x(j);
        const double d = sys.z(i) - s;
        total += d * d;
    }
    return total;
}

namespace {

struct BruteState {
    const TriangularSystem* sys;
    const ConstellationSpec* spec;
    Eigen::VectorXi x;
    Eigen::VectorXi best;
    double best_cost;
    bool have_best;

    bool lex_smaller(const Eigen::VectorXi& a, const Eigen::VectorXi& b) const {
        for (int i = 0; i < a.size(); ++i) {
            if (a(i) != b(i)) return a(i) < b(i);
        }
        return false;
    }

    void recurse(int i, double acc) {
        for (int u = 0; u < spec->side; ++u) {
            x(i) = spec->x_from_u(u);
            double s = 0.0;
            for (int j = i; j < sys->n; ++j) s += sys->r(i, j) * x(j);
            const double d = sys->z(i) - s;
            const double cost = acc + d * d;
            if (i == 0) {
                if (!have_best || cost < best_cost ||
                    (cost == best_cost && lex_smaller(x, best))) {
                    best = x;
                    best_cost = cost;
                    have_best = true;
                }
            } else {
                recurse(i - 1, cost);
            }
        }
    }
};

}  // namespace

MlResult brute_force_ml(const TriangularSystem& sys, const ConstellationSpec& spec) {
    const double points = std::pow(static_cast<double>(spec.side), sys.n);
    if (points > double(1 << 24))
        throw std::invalid_argument("grid too large for exhaustive search");

    BruteState st{&sys, &spec, Eigen::VectorXi::Zero(sys.n), Eigen::VectorXi::Zero(sys.n),
                  0.0, false};
    st.recurse(sys.n - 1, 0.0);
    return MlResult{st.best, st.best_cost};
}

StbcGenerator make_identity_stbc(int m, int t) {
    StbcGenerator g;
    g.m = m;
    g.t = t;
    g.phi = Eigen::MatrixXcd::Identity(m * t, m * t);
    return g;
}

StbcGenerator make_golden_stbc() {
    using cd = std::complex<double>;
    const double theta = (1.0 + std::sqrt(5.0)) / 2.0;
    const double theta_bar = 1.0 - theta;
    const cd i(0.0, 1.0);
    const cd alpha = cd(1.0, 0.0) + i * (1.0 - theta);
    const cd alpha_bar = cd(1.0, 0.0) + i * (1.0 - theta_bar);
    const double s = 1.0 / std::sqrt(5.0);

    // Codeword columns in vec order (x11, x21, x12, x22) against (s1..s4).
    Eigen::MatrixXcd phi(4, 4);
    phi.row(0) << alpha, alpha * theta, cd(0), cd(0);
    phi.row(1) << cd(0), cd(0), i * alpha_bar, i * alpha_bar * theta_bar;
    phi.row(2) << cd(0), cd(0), alpha, alpha * theta;
    phi.row(3) << alpha_bar, alpha_bar * theta_bar, cd(0), cd(0);
    phi *= s;

    StbcGenerator g;
    g.m = 2;
    g.t = 2;
    g.phi = phi;
    return g;
}

}  // namespace sbstack
