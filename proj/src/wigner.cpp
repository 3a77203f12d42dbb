#include "phaselattice/wigner.hpp"

#include "phaselattice/fft.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace phaselattice {

template <class T>
bool PhaseGrid<T>::same_layout(const PhaseGrid& o) const
{
    auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max({1.0, std::abs(x), std::abs(y)}); };
    return np == o.np && nq == o.nq && close(dp, o.dp) && close(dq, o.dq) && close(p_origin, o.p_origin) &&
           close(q_origin, o.q_origin) && close(hbar, o.hbar);
}

template struct PhaseGrid<double>;
template struct PhaseGrid<cplx>;

WignerGrid wigner_layout(const GridSpec& grid, double hbar)
{
    grid.validate();
    WignerGrid w;
    w.np = grid.points;
    w.nq = 2 * grid.points;
    w.dq = 0.5 * grid.dx();
    w.dp = pi * hbar / grid.box_length;
    w.q_origin = grid.x(0);
    w.p_origin = -0.5 * grid.points * w.dp;
    w.hbar = hbar;
    w.values.assign(static_cast<std::size_t>(w.np) * w.nq, 0.0);
    return w;
}

GridSpec position_grid(const WignerGrid& w)
{
    GridSpec g;
    g.points = w.np;
    g.box_length = 2.0 * w.dq * w.np;
    g.origin = w.q_origin + 0.5 * g.box_length;
    if (w.nq != 2 * w.np)
        throw std::domain_error("grid is not a discrete-transform layout");
    return g;
}

double normalization(const WignerGrid& w)
{
    double s = 0.0;
    for (double v : w.values)
        s += v;
    return s * w.dp * w.dq;
}

double purity(const WignerGrid& w)
{
    double s = 0.0;
    for (double v : w.values)
        s += v * v;
    return 2.0 * pi * w.hbar * s * w.dp * w.dq;
}

namespace {

// Phase factor attached to row J: 1 on even rows, i exp(-i pi k / D) on odd rows.
cplx row_factor(int J, int k, int D)
{
    if (J % 2 == 0)
        return 1.0;
    return cplx(0.0, 1.0) * std::polar(1.0, -pi * k / D);
}

// Visits the matrix pairs (u, v) with u + v = J together with their offset s.
template <class F>
void for_pairs(int J, int D, F&& f)
{
    const int ulo = std::max(0, J - (D - 1));
    const int uhi = std::min(D - 1, J);
    for (int u = ulo; u <= uhi; ++u) {
        const int v = J - u;
        const int s = (J % 2 == 0) ? u - J / 2 : u - J / 2 - 1;
        f(u, v, s);
    }
}

ComplexWigner transform_impl(const Eigen::MatrixXcd& op, const GridSpec& grid, double hbar)
{
    grid.validate();
    const int D = grid.points;
    if (op.rows() != D || op.cols() != D)
        throw std::domain_error("operator size does not match the grid");
    const WignerGrid layout = wigner_layout(grid, hbar);
    ComplexWigner out;
    out.np = layout.np;
    out.nq = layout.nq;
    out.dp = layout.dp;
    out.dq = layout.dq;
    out.p_origin = layout.p_origin;
    out.q_origin = layout.q_origin;
    out.hbar = hbar;
    out.values.assign(layout.values.size(), 0.0);
    std::vector<cplx> row(D);
    for (int J = 0; J < 2 * D; ++J) {
        std::fill(row.begin(), row.end(), 0.0);
        for_pairs(J, D, [&](int u, int v, int s) {
            const int idx = ((s % D) + D) % D;
            row[idx] = ((s % 2 == 0) ? 1.0 : -1.0) * op(u, v);
        });
        fft_inplace(row);
        for (int k = 0; k < D; ++k)
            out.at(k, J) = row_factor(J, k, D) * row[k] / (pi * hbar);
    }
    return out;
}

}  // namespace

WignerGrid wigner_transform(const Eigen::MatrixXcd& rho, const GridSpec& grid, double hbar)
{
    const double scale = std::max(1e-300, rho.cwiseAbs().maxCoeff());
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::domain_error("density matrix is not Hermitian");
    const ComplexWigner c = transform_impl(rho, grid, hbar);
    WignerGrid w = wigner_layout(grid, hbar);
    for (std::size_t i = 0; i < c.values.size(); ++i)
        w.values[i] = c.values[i].real();
    return w;
}

ComplexWigner wigner_transform_complex(const Eigen::MatrixXcd& op, const GridSpec& grid, double hbar)
{
    return transform_impl(op, grid, hbar);
}

Eigen::MatrixXcd inverse_wigner(const WignerGrid& w)
{
    ComplexWigner c;
    c.np = w.np;
    c.nq = w.nq;
    c.dp = w.dp;
    c.dq = w.dq;
    c.p_origin = w.p_origin;
    c.q_origin = w.q_origin;
    c.hbar = w.hbar;
    c.values.assign(w.values.begin(), w.values.end());
    return inverse_wigner(c);
}

Eigen::MatrixXcd inverse_wigner(const ComplexWigner& w)
{
    WignerGrid shape;
    shape.np = w.np;
    shape.nq = w.nq;
    shape.dq = w.dq;
    shape.q_origin = w.q_origin;
    const GridSpec grid = position_grid(shape);
    const int D = grid.points;
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(D, D);
    std::vector<cplx> row(D);
    for (int J = 0; J < 2 * D; ++J) {
        for (int k = 0; k < D; ++k)
            row[k] = w.at(k, J) * pi * w.hbar / row_factor(J, k, D);
        fft_inplace(row, true);
        for_pairs(J, D, [&](int u, int v, int s) {
            const int idx = ((s % D) + D) % D;
            op(u, v) = ((s % 2 == 0) ? 1.0 : -1.0) * row[idx] / static_cast<double>(D);
        });
    }
    return op;
}

double trace_pair(const WignerGrid& A, const WignerGrid& B)
{
    if (!A.same_layout(B))
        throw std::domain_error("trace_pair: grid mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < A.values.size(); ++i)
        s += A.values[i] * B.values[i];
    return 2.0 * pi * A.hbar * s * A.dp * A.dq;
}

WignerGrid sample_wigner(const GaussianState& g, const WignerGrid& layout)
{
    WignerGrid w = layout;
    for (int i = 0; i < w.np; ++i)
        for (int j = 0; j < w.nq; ++j)
            w.at(i, j) = g.wigner(w.q(j), w.p(i));
    return w;
}

WignerMoments wigner_moments(const WignerGrid& w)
{
    double s0 = 0, sq = 0, sp = 0, sqq = 0, spp = 0, sqp = 0;
    for (int i = 0; i < w.np; ++i)
        for (int j = 0; j < w.nq; ++j) {
            const double v = w.at(i, j), q = w.q(j), p = w.p(i);
            s0 += v;
            sq += v * q;
            sp += v * p;
            sqq += v * q * q;
            spp += v * p * p;
            sqp += v * q * p;
        }
    WignerMoments r;
    r.norm = s0 * w.dp * w.dq;
    auto& m = r.moments;
    m.mean_x = sq / s0;
    m.mean_p = sp / s0;
    m.var_x = sqq / s0 - m.mean_x * m.mean_x;
    m.var_p = spp / s0 - m.mean_p * m.mean_p;
    m.cov_xp = sqp / s0 - m.mean_x * m.mean_p;
    return r;
}

Eigen::MatrixXcd position_operator(const GridSpec& grid)
{
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(grid.points, grid.points);
    for (int j = 0; j < grid.points; ++j)
        x(j, j) = grid.x(j);
    return x;
}

Eigen::MatrixXcd momentum_operator(const GridSpec& grid, double hbar)
{
    const int D = grid.points;
    Eigen::MatrixXcd p(D, D);
    for (int j = 0; j < D; ++j)
        for (int l = 0; l < D; ++l) {
            cplx s = 0.0;
            for (int k = -D / 2; k < D / 2; ++k)
                s += (2.0 * pi * hbar * k / grid.box_length) * std::polar(1.0, 2.0 * pi * k * (j - l) / D);
            p(j, l) = s / static_cast<double>(D);
        }
    return p;
}

AnticommutatorReport anticommutator_check(const Eigen::MatrixXcd& rho, const GridSpec& grid, double hbar)
{
    grid.validate();
    if (rho.rows() != grid.points || rho.cols() != grid.points)
        throw std::domain_error("anticommutator_check: grid mismatch");
    const Eigen::MatrixXcd x = position_operator(grid);
    const Eigen::MatrixXcd p = momentum_operator(grid, hbar);
    auto Ax = [&](const Eigen::MatrixXcd& r) -> Eigen::MatrixXcd { return 0.5 * (x * r + r * x); };
    auto Ap = [&](const Eigen::MatrixXcd& r) -> Eigen::MatrixXcd { return 0.5 * (p * r + r * p); };

    const WignerGrid W = wigner_transform(rho, grid, hbar);
    const WignerGrid Wx = wigner_transform(Ax(rho), grid, hbar);
    const WignerGrid Wp = wigner_transform(Ap(rho), grid, hbar);
    AnticommutatorReport r;
    double pw_max = 0.0;
    for (int i = 0; i < W.np; ++i)
        for (int j = 0; j < W.nq; ++j) {
            const double q = W.q(j), pm = W.p(i), v = W.at(i, j);
            r.q_defect = std::max(r.q_defect, std::abs(Wx.at(i, j) - q * v));
            r.p_defect = std::max(r.p_defect, std::abs(Wp.at(i, j) - pm * v));
            pw_max = std::max(pw_max, std::abs(pm * v));
            r.wigner_commute_defect = std::max(r.wigner_commute_defect, std::abs(q * (pm * v) - pm * (q * v)));
        }
    if (pw_max > 0.0)
        r.p_defect /= pw_max;
    r.operator_commute_defect = (Ax(Ap(rho)) - Ap(Ax(rho))).cwiseAbs().maxCoeff();
    // Even rows alone carry exactly half of any trace.
    double even = 0.0;
    for (int i = 0; i < Wx.np; ++i)
        for (int j = 0; j < Wx.nq; j += 2)
            even += Wx.at(i, j);
    r.mean_q_wigner = 2.0 * even * W.dp * W.dq;
    r.mean_q_operator = (x * rho).trace().real();
    return r;
}

void write_wigner_csv(const WignerGrid& w, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << std::setprecision(17);
    out << "# np,nq,dp,dq,p_origin,q_origin,hbar\n";
    out << "# " << w.np << ',' << w.nq << ',' << w.dp << ',' << w.dq << ',' << w.p_origin << ',' << w.q_origin << ','
        << w.hbar << '\n';
    for (int i = 0; i < w.np; ++i) {
        for (int j = 0; j < w.nq; ++j)
            out << (j ? "," : "") << w.at(i, j);
        out << '\n';
    }
}

WignerGrid read_wigner_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    if (line.size() < 2 || line[0] != '#')
        throw std::runtime_error("malformed Wigner CSV header in " + path);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream hs(line.substr(1));
    WignerGrid w;
    if (!(hs >> w.np >> w.nq >> w.dp >> w.dq >> w.p_origin >> w.q_origin >> w.hbar) || w.np <= 0 || w.nq <= 0)
        throw std::runtime_error("malformed Wigner CSV header in " + path);
    w.values.reserve(static_cast<std::size_t>(w.np) * w.nq);
    for (int i = 0; i < w.np; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error("truncated Wigner CSV " + path);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        for (int j = 0; j < w.nq; ++j) {
            double v;
            if (!(ls >> v))
                throw std::runtime_error("short row in Wigner CSV " + path);
            w.values.push_back(v);
        }
    }
    return w;
}

std::string wigner_metadata_json(const WignerGrid& w)
{
    nlohmann::ordered_json j;
    j["np"] = w.np;
    j["nq"] = w.nq;
    j["dp"] = w.dp;
    j["dq"] = w.dq;
    j["p_origin"] = w.p_origin;
    j["q_origin"] = w.q_origin;
    j["hbar"] = w.hbar;
    j["normalization"] = normalization(w);
    j["purity"] = purity(w);
    return j.dump(2);
}

}  // namespace phaselattice
