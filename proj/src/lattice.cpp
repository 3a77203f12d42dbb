#include "phaselattice/lattice.hpp"

#include "phaselattice/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace phaselattice {

namespace {

// Fourier-space window: sin(u/2)/(u/2), series near the removable point.
double window_sinc(double u)
{
    if (std::abs(u) < 1e-6)
        return 1.0 - u * u / 24.0;
    return std::sin(0.5 * u) / (0.5 * u);
}

bool on_edge(double x, double centre, double a)
{
    return std::abs(std::abs(x - centre) - 0.5 * a) <= 1e-12 * a;
}

CoeffState make_combination(int K, int n, int m, const std::vector<double>& c, StateKind kind)
{
    CoeffState s;
    s.label = {kind, K, n, m};
    const int base = (1 << K) * m;
    for (std::size_t j = 0; j < c.size(); ++j)
        s.coeffs[{n, base + static_cast<int>(j)}] = c[j];
    return s;
}

std::vector<double> alternating(int K)
{
    std::vector<double> c(1u << K);
    const double s = std::pow(2.0, -0.5 * K);
    for (std::size_t j = 0; j < c.size(); ++j)
        c[j] = (j % 2 == 0) ? s : -s;
    return c;
}

void check_indices(const LatticeParams& p, const CoeffState& s)
{
    for (const auto& [idx, v] : s.coeffs)
        if (!in_truncation(p, idx))
            throw std::domain_error("state index outside truncation");
}

}  // namespace

double LatticeParams::effective_cutoff() const
{
    if (momentum_cutoff > 0.0)
        return momentum_cutoff;
    return std::max(min_cutoff(), 512.0 * b());
}

void LatticeParams::validate() const
{
    if (!(a > 0.0) || !std::isfinite(a))
        throw std::domain_error("lattice constant a must be positive");
    if (!(hbar > 0.0) || !std::isfinite(hbar))
        throw std::domain_error("hbar must be positive");
    if (N < 1 || N > 24)
        throw std::domain_error("halving depth N must lie in [1, 24]");
    if (m_blocks < 1)
        throw std::domain_error("m_blocks must be at least 1");
    if (n_min > n_max)
        throw std::domain_error("n_min must not exceed n_max");
    if (!std::isfinite(momentum_shift))
        throw std::domain_error("momentum_shift must be finite");
    if (momentum_cutoff != 0.0 && momentum_cutoff < min_cutoff() * (1.0 - 1e-12))
        throw std::domain_error("momentum_cutoff must enclose all retained lattice momenta");
}

bool LatticeParams::same_basis(const LatticeParams& o) const
{
    return a == o.a && hbar == o.hbar && N == o.N && n_min == o.n_min && n_max == o.n_max &&
           m_blocks == o.m_blocks && first_block == o.first_block && momentum_shift == o.momentum_shift;
}

bool in_truncation(const LatticeParams& p, LowIndex idx)
{
    return idx.n >= p.n_min && idx.n <= p.n_max && idx.m >= p.m_lo() && idx.m < p.m_hi();
}

int flat_index(const LatticeParams& p, LowIndex idx)
{
    if (!in_truncation(p, idx))
        throw std::domain_error("index outside truncation");
    return (idx.n - p.n_min) * p.momentum_count() + (idx.m - p.m_lo());
}

double CoeffState::norm2() const
{
    double s = 0.0;
    for (const auto& [idx, v] : coeffs)
        s += std::norm(v);
    return s;
}

void GridSpec::validate() const
{
    if (!(box_length > 0.0) || !std::isfinite(box_length))
        throw std::domain_error("grid box_length must be positive");
    if (points < 2 || (points & (points - 1)) != 0)
        throw std::domain_error("grid points must be a power of two");
    if (!std::isfinite(origin))
        throw std::domain_error("grid origin must be finite");
}

void GridSpec::validate_for(const LatticeParams& p) const
{
    validate();
    if (box_length < p.cells() * p.a * (1.0 - 1e-12))
        throw std::domain_error("grid does not cover the truncated lattice");
    const double r = box_length / p.a;
    if (std::abs(r - std::round(r)) > 1e-9 * r)
        throw std::domain_error("box_length must be an integer multiple of a");
}

cplx low_state(const LatticeParams& p, LowIndex idx, Rep rep, double point)
{
    if (!std::isfinite(point))
        throw std::domain_error("evaluation point must be finite");
    if (!in_truncation(p, idx))
        throw std::domain_error("Low index outside truncation");
    const double k = idx.m + p.momentum_shift;
    if (rep == Rep::position) {
        const double c = idx.n * p.a;
        if (std::abs(point - c) > 0.5 * p.a * (1.0 + 1e-15))
            return 0.0;
        return std::polar(1.0 / std::sqrt(p.a), 2.0 * pi * k * point / p.a);
    }
    const double u = point * p.a / p.hbar - 2.0 * pi * k;
    return std::sqrt(p.a / (2.0 * pi * p.hbar)) * window_sinc(u) * std::polar(1.0, -u * idx.n);
}

std::vector<double> halving_coefficients(int K, int N)
{
    if (K < 1 || K > N)
        throw std::domain_error("halving level K must satisfy 1 <= K <= N");
    const int len = 1 << K;
    const int half = len / 2;
    const double s = std::pow(2.0, -0.5 * K);
    std::vector<double> c(len);
    for (int j = 0; j < len; ++j) {
        const double alt = (j % 2 == 0) ? 1.0 : -1.0;
        c[j] = (j < half ? alt : -alt) * s;
    }
    return c;
}

CoeffState build_state(const LatticeParams& p, StateKind kind, int K, int n, int m)
{
    CoeffState s;
    switch (kind) {
    case StateKind::psi: s = make_combination(K, n, m, halving_coefficients(K, p.N), kind); break;
    case StateKind::chi:
        if (K < 1 || K > p.N)
            throw std::domain_error("halving level K must satisfy 1 <= K <= N");
        s = make_combination(K, n, m, alternating(K), kind);
        break;
    case StateKind::low: return low_basis_state(p, n, m);
    case StateKind::custom: throw std::domain_error("custom states are built from coefficients directly");
    }
    check_indices(p, s);
    return s;
}

CoeffState low_basis_state(const LatticeParams& p, int n, int m)
{
    CoeffState s;
    s.label = {StateKind::low, 0, n, m};
    s.coeffs[{n, m}] = 1.0;
    check_indices(p, s);
    return s;
}

cplx evaluate(const LatticeParams& p, const CoeffState& s, Rep rep, double point)
{
    cplx v = 0.0;
    for (const auto& [idx, c] : s.coeffs)
        v += c * low_state(p, idx, rep, point);
    return v;
}

cplx chi_closed_form(const LatticeParams& p, int K, int n, int m, double x)
{
    if (K < 1 || K > p.N)
        throw std::domain_error("halving level K must satisfy 1 <= K <= N");
    const cplx base = low_state(p, {n, (1 << K) * m}, Rep::position, x);
    if (base == 0.0)
        return 0.0;
    const cplx z = std::polar(1.0, 2.0 * pi * x / p.a);
    const cplx den = 1.0 + z;
    cplx ratio;
    if (std::abs(den) < 1e-12)
        ratio = static_cast<double>(1 << K);
    else
        ratio = (1.0 - std::polar(1.0, std::ldexp(2.0 * pi * x / p.a, K))) / den;
    return std::pow(2.0, -0.5 * K) * ratio * base;
}

std::vector<cplx> sample_position(const LatticeParams& p, const CoeffState& s, const GridSpec& g)
{
    g.validate();
    std::vector<cplx> out(g.points, 0.0);
    for (int j = 0; j < g.points; ++j) {
        const double x = g.x(j);
        cplx v = 0.0;
        for (const auto& [idx, c] : s.coeffs) {
            const cplx f = low_state(p, idx, Rep::position, x);
            v += (on_edge(x, idx.n * p.a, p.a) ? 0.5 : 1.0) * c * f;
        }
        out[j] = v;
    }
    return out;
}

cplx inner_product(const LatticeParams& p, const CoeffState& s1, const CoeffState& s2, InnerMethod method,
                   const GridSpec* grid)
{
    check_indices(p, s1);
    check_indices(p, s2);
    if (method == InnerMethod::coefficient) {
        cplx v = 0.0;
        for (const auto& [idx, c] : s1.coeffs) {
            auto it = s2.coeffs.find(idx);
            if (it != s2.coeffs.end())
                v += std::conj(c) * it->second;
        }
        return v;
    }
    if (grid == nullptr)
        throw std::domain_error("grid inner product needs a GridSpec");
    grid->validate_for(p);
    const double dx = grid->dx();
    const double per_cell = p.a / dx;
    const double off = (grid->x(0) + 0.5 * p.a) / dx;
    if (std::abs(per_cell - std::round(per_cell)) > 1e-9 || std::abs(off - std::round(off)) > 1e-6)
        throw std::domain_error("grid points must include the cell edges");

    // Trapezoid per cell with one-sided limits at the cell edges.
    std::map<int, std::vector<std::pair<int, cplx>>> by_cell1, by_cell2;
    for (const auto& [idx, c] : s1.coeffs)
        by_cell1[idx.n].push_back({idx.m, c});
    for (const auto& [idx, c] : s2.coeffs)
        by_cell2[idx.n].push_back({idx.m, c});
    cplx total = 0.0;
    for (const auto& [n, list1] : by_cell1) {
        auto it = by_cell2.find(n);
        if (it == by_cell2.end())
            continue;
        const auto& list2 = it->second;
        const double c = n * p.a;
        for (int j = 0; j < grid->points; ++j) {
            const double x = grid->x(j);
            if (std::abs(x - c) > 0.5 * p.a * (1.0 + 1e-12))
                continue;
            cplx f1 = 0.0, f2 = 0.0;
            for (const auto& [m, v] : list1)
                f1 += v * std::polar(1.0, 2.0 * pi * (m + p.momentum_shift) * x / p.a);
            for (const auto& [m, v] : list2)
                f2 += v * std::polar(1.0, 2.0 * pi * (m + p.momentum_shift) * x / p.a);
            const double w = on_edge(x, c, p.a) ? 0.5 : 1.0;
            total += w * std::conj(f1) * f2 / p.a;
        }
    }
    return total * dx;
}

RegularisedMoments momentum_moments(const LatticeParams& p, const CoeffState& s, double lo, double hi)
{
    RegularisedMoments r;
    Nodes nodes;
    append_composite(nodes, lo, hi, 0.5 * p.b(), 16);
    std::vector<std::pair<LowIndex, cplx>> list(s.coeffs.begin(), s.coeffs.end());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double q = nodes.x[i];
        cplx v = 0.0;
        for (const auto& [idx, c] : list) {
            const double u = q * p.a / p.hbar - 2.0 * pi * (idx.m + p.momentum_shift);
            v += c * window_sinc(u) * std::polar(1.0, -u * idx.n);
        }
        const double d = std::norm(v) * p.a / (2.0 * pi * p.hbar) * nodes.w[i];
        r.m0 += d;
        r.m1 += d * q;
        r.m2 += d * q * q;
    }
    return r;
}

// Exact cell quadrature of |psi|^2 moments and Re <psi| x p |psi>.
PositionMoments position_moments(const LatticeParams& p, const CoeffState& s)
{
    std::map<int, std::vector<std::pair<int, cplx>>> by_cell;
    int maxm = 1;
    for (const auto& [idx, c] : s.coeffs) {
        by_cell[idx.n].push_back({idx.m, c});
        maxm = std::max(maxm, std::abs(idx.m) + 2);
    }
    PositionMoments r;
    for (const auto& [n, list] : by_cell) {
        int mlo = list.front().first, mhi = list.front().first;
        for (const auto& [m, v] : list) {
            mlo = std::min(mlo, m);
            mhi = std::max(mhi, m);
        }
        const double c = n * p.a;
        const int panels = std::max(4, mhi - mlo + 2);
        Nodes nodes;
        append_composite(nodes, c - 0.5 * p.a, c + 0.5 * p.a, p.a / panels, 24);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double x = nodes.x[i];
            cplx f = 0.0, df = 0.0;
            for (const auto& [m, v] : list) {
                const double k = 2.0 * pi * (m + p.momentum_shift) / p.a;
                const cplx e = v * std::polar(1.0, k * x) / std::sqrt(p.a);
                f += e;
                df += cplx(0.0, k) * e;
            }
            const double d = std::norm(f) * nodes.w[i];
            r.m0 += d;
            r.m1 += d * x;
            r.m2 += d * x * x;
            r.xp += (std::conj(f) * x * cplx(0.0, -p.hbar) * df).real() * nodes.w[i];
        }
    }
    return r;
}

MomentReport state_moments(const LatticeParams& p, const CoeffState& s, double cutoff)
{
    if (s.coeffs.empty())
        throw std::domain_error("empty state");
    double centre = 0.0, w = 0.0;
    for (const auto& [idx, c] : s.coeffs) {
        centre += std::norm(c) * (idx.m + p.momentum_shift) * p.b();
        w += std::norm(c);
    }
    centre /= w;
    const PositionMoments pm = position_moments(p, s);
    const RegularisedMoments full = momentum_moments(p, s, centre - cutoff, centre + cutoff);
    const RegularisedMoments half = momentum_moments(p, s, centre - 0.5 * cutoff, centre + 0.5 * cutoff);
    MomentReport r;
    r.cutoff = cutoff;
    r.moments.mean_x = pm.m1 / pm.m0;
    r.moments.var_x = pm.m2 / pm.m0 - r.moments.mean_x * r.moments.mean_x;
    r.moments.mean_p = full.m1;
    r.moments.var_p = full.m2 - full.m1 * full.m1;
    r.moments.cov_xp = pm.xp - r.moments.mean_x * r.moments.mean_p;
    const double var_half = half.m2 - half.m1 * half.m1;
    r.tail_estimate = std::abs(r.moments.var_p - var_half);
    return r;
}

MomentReport fiducial_moments(const LatticeParams& p, int K, Method method, double rel_tol)
{
    p.validate();
    if (K < 1 || K > p.N)
        throw std::domain_error("halving level K must satisfy 1 <= K <= N");
    const double b = p.b();
    MomentReport r;
    if (method == Method::closed_form) {
        r.moments.mean_p = b * (std::ldexp(1.0, K - 1) - 0.5 + p.momentum_shift);
        r.moments.var_p = b * b * (std::ldexp(1.0, 2 * K) - 1.0) / 12.0;
        r.moments.mean_x = 0.0;
        r.moments.var_x = p.a * p.a / 12.0;
        r.moments.cov_xp = 0.0;
        return r;
    }
    const CoeffState s = make_combination(K, 0, 0, halving_coefficients(K, p.N), StateKind::psi);
    const double cutoff = p.effective_cutoff();
    const double centre = b * (std::ldexp(1.0, K - 1) - 0.5 + p.momentum_shift);
    if (cutoff < std::abs(centre) + std::ldexp(1.0, K) * b)
        throw std::domain_error("momentum cutoff lies inside the main lobe of the fiducial state");
    const PositionMoments pm = position_moments(p, s);
    const RegularisedMoments full = momentum_moments(p, s, -cutoff, cutoff);
    const RegularisedMoments half = momentum_moments(p, s, -0.5 * cutoff, 0.5 * cutoff);
    r.cutoff = cutoff;
    r.moments.mean_x = pm.m1 / pm.m0;
    r.moments.var_x = pm.m2 / pm.m0 - r.moments.mean_x * r.moments.mean_x;
    r.moments.mean_p = full.m1;
    r.moments.var_p = full.m2 - full.m1 * full.m1;
    r.moments.cov_xp = pm.xp - r.moments.mean_x * r.moments.mean_p;
    r.tail_estimate = std::abs(r.moments.var_p - (half.m2 - half.m1 * half.m1));
    if (r.tail_estimate > rel_tol * r.moments.var_p) {
        std::ostringstream os;
        os << "momentum cutoff too small: tail estimate " << r.tail_estimate << " exceeds tolerance "
           << rel_tol * r.moments.var_p;
        throw std::domain_error(os.str());
    }
    return r;
}

CompletenessResidual completeness_decomposition(const LatticeParams& p)
{
    p.validate();
    const int d = p.block_size();
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(d, d);
    for (int K = 1; K <= p.N; ++K) {
        const auto c = halving_coefficients(K, p.N);
        const int len = 1 << K;
        for (int m = 0; m < d / len; ++m) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
            for (int j = 0; j < len; ++j)
                v[m * len + j] = c[j];
            E += v * v.transpose();
        }
    }
    const auto alt = alternating(p.N);
    Eigen::VectorXd chi = Eigen::Map<const Eigen::VectorXd>(alt.data(), d);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    CompletenessResidual r;
    r.residual_with_chi = (E + chi * chi.transpose() - I).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd D = I - E;
    r.defect_trace = D.trace();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
    r.defect_rank = static_cast<int>((es.eigenvalues().array() > 0.5).count());
    r.defect_idempotency = (D * D - D).cwiseAbs().maxCoeff();
    r.defect_vs_chi = (D - chi * chi.transpose()).cwiseAbs().maxCoeff();
    return r;
}

std::string to_string(StateKind k)
{
    switch (k) {
    case StateKind::low: return "low";
    case StateKind::psi: return "psi";
    case StateKind::chi: return "chi";
    case StateKind::custom: return "custom";
    }
    return "custom";
}

}  // namespace phaselattice
