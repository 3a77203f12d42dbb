#include "phaselattice/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phaselattice {

BalianLowAudit balian_low_audit(const SpectralFamily& family)
{
    if (family.cells.empty())
        throw std::domain_error("audit needs at least one retained block");
    const LatticeParams& p = family.params;
    const int d = p.block_size();
    Eigen::VectorXcd chi(d);
    for (int j = 0; j < d; ++j)
        chi[j] = (j % 2 == 0 ? 1.0 : -1.0) * std::pow(2.0, -0.5 * p.N);
    const Eigen::MatrixXcd chi_proj = chi * chi.adjoint();

    LatticeOperator sum(p);
    for (const auto& c : family.cells)
        sum = sum + c.projector;
    const LatticeOperator I = LatticeOperator::identity(p);
    const LatticeOperator defect = I - sum;

    BalianLowAudit r;
    r.blocks = static_cast<int>(family.cells.size());
    r.defect_trace = defect.trace().real();
    r.family_trace = sum.trace().real();
    r.identity_trace = I.trace().real();
    for (const auto& [k, blk] : defect.blocks())
        r.defect_vs_chi = std::max(r.defect_vs_chi, (blk - chi_proj).cwiseAbs().maxCoeff());
    r.defect_idempotency = defect.idempotency_defect();
    r.exclusivity_defect = family.exclusivity_defect();
    return r;
}

std::vector<DispersionPoint> remainder_dispersion(const LatticeParams& p, StateKind kind, int K,
                                                  const std::vector<double>& cutoffs)
{
    p.validate();
    if (kind != StateKind::psi && kind != StateKind::chi)
        throw std::domain_error("dispersion audit takes psi or chi states");
    if (K < 1 || K > p.N)
        throw std::domain_error("halving level K must satisfy 1 <= K <= N");
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
        if (!(cutoffs[i] > 0.0))
            throw std::domain_error("cutoffs must be positive");
        if (i > 0 && !(cutoffs[i] > cutoffs[i - 1]))
            throw std::domain_error("cutoffs must be strictly increasing");
    }
    const int len = 1 << K;
    std::vector<double> c(len);
    if (kind == StateKind::psi) {
        c = halving_coefficients(K, p.N);
    } else {
        for (int j = 0; j < len; ++j)
            c[j] = (j % 2 == 0 ? 1.0 : -1.0) * std::pow(2.0, -0.5 * K);
    }
    CoeffState s;
    s.label = {kind, K, 0, 0};
    for (int j = 0; j < len; ++j)
        s.coeffs[{0, j}] = c[j];

    // Main lobe of the state: centre of its Low momenta plus a block width.
    const double lobe = (0.5 * len + std::abs(p.momentum_shift) + len) * p.b();
    std::vector<DispersionPoint> out;
    for (double L : cutoffs) {
        if (L < lobe)
            throw std::domain_error("cutoff lies inside the main lobe of the state");
        const RegularisedMoments m = momentum_moments(p, s, -L, L);
        out.push_back({L, m.m1, m.m2 - m.m1 * m.m1});
    }
    return out;
}

namespace {

struct TorusGrid {
    int D;
    double L, dx, x0;
};

// Unit vector of the periodised coherent state at (q, p) with width sigma.
Eigen::VectorXcd coherent_vector(const TorusGrid& g, double q, double pm, double sigma, double hbar)
{
    Eigen::VectorXcd v(g.D);
    for (int j = 0; j < g.D; ++j) {
        const double x = g.x0 + j * g.dx;
        cplx s = 0.0;
        for (int w = -3; w <= 3; ++w) {
            const double u = x - q - w * g.L;
            s += std::exp(-u * u / (4.0 * sigma * sigma)) * std::polar(1.0, pm * u / hbar);
        }
        v[j] = s;
    }
    return v / v.norm();
}

struct Sampling {
    std::vector<double> q, p;
    double weight = 0.0;
};

Sampling midpoints(double q_lo, double q_hi, double dq, double p_lo, double p_hi, double dp, double hbar)
{
    Sampling s;
    const int nq = std::max(1, static_cast<int>(std::ceil((q_hi - q_lo) / dq - 1e-9)));
    const int np = std::max(1, static_cast<int>(std::ceil((p_hi - p_lo) / dp - 1e-9)));
    const double hq = (q_hi - q_lo) / nq, hp = (p_hi - p_lo) / np;
    for (int i = 0; i < nq; ++i)
        s.q.push_back(q_lo + (i + 0.5) * hq);
    for (int i = 0; i < np; ++i)
        s.p.push_back(p_lo + (i + 0.5) * hp);
    s.weight = hq * hp / (2.0 * pi * hbar);
    return s;
}

Eigen::MatrixXcd quasi_projector(const TorusGrid& g, const Sampling& s, double sigma, double hbar)
{
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(g.D, g.D);
    for (double q : s.q)
        for (double pm : s.p) {
            const Eigen::VectorXcd v = coherent_vector(g, q, pm, sigma, hbar);
            P.noalias() += v * v.adjoint();
        }
    return P * s.weight;
}

TorusGrid torus_for(const LatticeParams& p, const GridSpec& grid, double sigma)
{
    grid.validate();
    TorusGrid g{grid.points, grid.box_length, grid.dx(), grid.x(0)};
    const double dp_c = p.hbar / (2.0 * sigma);
    if (sigma < 2.0 * g.dx)
        throw std::domain_error("grid too coarse for coherent-state sampling in position");
    if (dp_c < 2.0 * 2.0 * pi * p.hbar / g.L)
        throw std::domain_error("box too short for coherent-state sampling in momentum");
    return g;
}

}  // namespace

QuasiProjectorReport quasi_projector_compare(const LatticeParams& p, const PhaseRectangle& region, const GridSpec& grid)
{
    p.validate();
    if (!(region.q_hi > region.q_lo) || !(region.p_hi > region.p_lo))
        throw std::domain_error("empty phase-space rectangle");
    if (region.area() < 2.0 * pi * p.hbar)
        throw std::domain_error("rectangle must be large compared with 2 pi hbar");
    const double sigma = p.a / std::sqrt(4.0 * pi);
    const TorusGrid g = torus_for(p, grid, sigma);
    const double dp_c = p.hbar / (2.0 * sigma);
    const Sampling s = midpoints(region.q_lo, region.q_hi, 0.5 * sigma, region.p_lo, region.p_hi, 0.5 * dp_c, p.hbar);
    const Eigen::MatrixXcd P = quasi_projector(g, s, sigma, p.hbar);

    QuasiProjectorReport r;
    r.coherent_states = static_cast<int>(s.q.size() * s.p.size());
    r.sigma_q = sigma;
    r.quasi_trace = P.trace().real();
    r.quasi_defect = (P * P - P).norm() / P.norm();

    const SpectralFamily fam = build_family(p, true);
    LatticeOperator E(fam.params);
    for (const auto& c : fam.cells)
        if (c.X >= region.q_lo && c.X <= region.q_hi && c.P >= region.p_lo && c.P <= region.p_hi) {
            E = E + c.projector;
            ++r.exact_cells;
        }
    r.exact_defect = E.idempotency_defect();
    r.exact_trace = E.trace().real();
    return r;
}

double quasi_projector_identity_defect(const LatticeParams& p, const GridSpec& grid)
{
    const double sigma = p.a / std::sqrt(4.0 * pi);
    const TorusGrid g = torus_for(p, grid, sigma);
    const double dp_c = p.hbar / (2.0 * sigma);
    const double band = pi * p.hbar / g.dx;
    const Sampling s = midpoints(g.x0, g.x0 + g.L, 0.5 * sigma, -band, band, 0.5 * dp_c, p.hbar);
    const Eigen::MatrixXcd P = quasi_projector(g, s, sigma, p.hbar);
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(g.D, g.D);
    return (P - I).norm() / I.norm();
}

}  // namespace phaselattice
