#include "phaselattice/closeness.hpp"

#include "phaselattice/quadrature.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace phaselattice {

namespace {

constexpr double support_sigmas = 12.0;
// Coherence terms with Gaussian damping below exp(-40) are dropped.
constexpr double coherence_exponent = 40.0;

LatticeParams centered(const LatticeParams& p)
{
    LatticeParams q = p;
    q.momentum_shift -= centering_offset(p.N);
    return q;
}

double block_step(const LatticeParams& p)
{
    return p.block_size() * p.b();
}

}  // namespace

double truncation_spill(const GaussianState& rho, const LatticeParams& p, double max_spill)
{
    p.validate();
    rho.validate(p.hbar);
    const double x_lo = (p.n_min - 0.5) * p.a, x_hi = (p.n_max + 0.5) * p.a;
    const double centre = p.momentum_shift * p.b();
    const double p_lo = p.first_block * block_step(p) + centre - 0.5 * block_step(p);
    const double p_hi = (p.first_block + p.m_blocks - 1) * block_step(p) + centre + 0.5 * block_step(p);
    const double spill = (1.0 - rho.probability_x(x_lo, x_hi)) + (1.0 - rho.probability_p(p_lo, p_hi));
    if (spill > max_spill) {
        std::ostringstream os;
        os << "state escapes the truncation: spill estimate " << spill << " exceeds " << max_spill;
        throw std::domain_error(os.str());
    }
    return spill;
}

GaussianTraces::GaussianTraces(const GaussianState& rho, const LatticeParams& p)
    : rho_(rho), p_(centered(p)), kernel_(p_)
{
    rho_.validate(p.hbar);
    const double hbar = p.hbar;
    const double vpx = rho_.var_p_given_x(), vxp = rho_.var_x_given_p();
    const double xi_step = p.a / p.block_size();
    row_l_ = static_cast<int>(std::floor(std::sqrt(2.0 * coherence_exponent) * hbar / (std::sqrt(vpx) * xi_step)));
    col_l_ = static_cast<int>(std::floor(std::sqrt(2.0 * coherence_exponent) * hbar / (std::sqrt(vxp) * p.b())));

    const double sx = rho_.sigma_x(), sp = rho_.sigma_p();
    n_lo_ = std::max(p.n_min, static_cast<int>(std::floor((rho_.q0 - support_sigmas * sx) / p.a)));
    n_hi_ = std::min(p.n_max, static_cast<int>(std::ceil((rho_.q0 + support_sigmas * sx) / p.a)));
    const double step = block_step(p);
    const double lobe = kernel_.lobe_centre();
    // Blocks whose main lobe lies within the state's momentum support, plus a margin for the kernel tails.
    const int margin = 64;
    b_lo_ = std::max(p.first_block, static_cast<int>(std::floor((rho_.p0 - support_sigmas * sp - lobe) / step)) - margin);
    b_hi_ = std::min(p.first_block + p.m_blocks - 1,
                     static_cast<int>(std::ceil((rho_.p0 + support_sigmas * sp - lobe) / step)) + margin);
    support_ = {rho_.p0 - support_sigmas * sp, rho_.p0 + support_sigmas * sp, sp};
}

cplx GaussianTraces::row(int n, const KernelFn& A) const
{
    return kernel_.row_sum(n, A, row_l_);
}

cplx GaussianTraces::column(int b, const KernelFn& A) const
{
    return kernel_.column_sum(b, A, col_l_, support_);
}

cplx GaussianTraces::row(int n) const
{
    const double hbar = p_.hbar;
    return row(n, [&](double x1, double x2) { return rho_.density(x1, x2, hbar); });
}

cplx GaussianTraces::column(int b) const
{
    const double hbar = p_.hbar;
    return column(b, [&](double p1, double p2) { return rho_.momentum_density(p1, p2, hbar); });
}

CompletenessResult completeness_sum(const GaussianState& rho, const LatticeParams& p)
{
    CompletenessResult r;
    r.spill = truncation_spill(rho, p);
    const GaussianTraces T(rho, p);
    double s = 0.0;
    for (int n = T.n_lo(); n <= T.n_hi(); ++n)
        s += T.row(n).real();
    r.value = s;
    r.expected = 1.0 - std::ldexp(1.0, -p.N);
    r.breadth = rho.sigma_x() * rho.sigma_p() / (2.0 * pi * p.hbar * p.block_size());
    if (r.breadth < 10.0 || rho.sigma_x() < 0.5 * p.a || rho.sigma_p() < 0.5 * block_step(p)) {
        r.slow_variation = false;
        r.flag = "slow-variation precondition violated";
    }
    return r;
}

double completeness_sum(const WignerGrid& W, const LatticeParams& p)
{
    p.validate();
    const FamilyKernel K(centered(p));
    double s = 0.0;
    for (int j = 0; j < W.nq; ++j) {
        const double q = W.q(j);
        for (int i = 0; i < W.np; ++i) {
            const double v = W.at(i, j);
            if (v != 0.0)
                s += K.periodised_wigner(W.p(i), q) * v;
        }
    }
    return 2.0 * pi * p.hbar * s * W.dp * W.dq;
}

double cell_probability(const GaussianState& rho, int n, int m, const LatticeParams& p)
{
    truncation_spill(rho, p);
    if (n < p.n_min || n > p.n_max || m < p.first_block || m >= p.first_block + p.m_blocks)
        throw std::domain_error("cell outside truncation");
    const LatticeParams pc = centered(p);
    const FamilyKernel K(pc);
    const double a = p.a, hbar = p.hbar;
    const int d = p.block_size();
    const double B = static_cast<double>(m) * d;
    const double ell = hbar / std::sqrt(rho.var_p_given_x());
    const double Pb = m * block_step(p);
    const double freq = (std::abs(Pb - rho.p0) + 2.0 * block_step(p) + 6.0 * rho.sigma_p()) / hbar;
    const double xi_width = std::min({0.5 * ell, a / (4.0 * d), pi / freq});

    Nodes xs = composite({-0.5 * a, 0.0, 0.5 * a}, a / (4.0 * d), 16);
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double Xc = xs.x[i];
        const double X = n * a + Xc;
        if (std::abs(X - rho.q0) > support_sigmas * rho.sigma_x() + a)
            continue;
        const double w = std::min(a - 2.0 * std::abs(Xc), support_sigmas * ell);
        if (w <= 0.0)
            continue;
        Nodes xi;
        append_composite(xi, -w, w, xi_width, 16);
        cplx inner = 0.0;
        for (std::size_t k = 0; k < xi.size(); ++k) {
            const double z = xi.x[k];
            const cplx e = std::polar(1.0, 2.0 * pi * B * z / a) * K.cell_kernel(Xc + 0.5 * z, Xc - 0.5 * z);
            inner += xi.w[k] * e * rho.density(X - 0.5 * z, X + 0.5 * z, hbar);
        }
        total += xs.w[i] * inner.real();
    }
    return total;
}

double closeness_constant(int N)
{
    return std::pow(2.0, 0.5 * N) * pi / (3.0 * std::sqrt(2.0));
}

ClosenessReport distance_norms(const GaussianState& rho, const LatticeParams& p)
{
    ClosenessReport r;
    r.N = p.N;
    truncation_spill(rho, p);
    const GaussianTraces T(rho, p);
    const double hbar = p.hbar;
    const GaussianState& g = T.state();

    // Position side: row sums of rho, x rho, rho x and x^2 rho.
    double XX = 0.0, x2 = 0.0, comp = 0.0;
    cplx Xx = 0.0, Xrx = 0.0;
    for (int n = T.n_lo(); n <= T.n_hi(); ++n) {
        const double Xn = n * p.a;
        const cplx r0 = T.row(n);
        const cplx r1 = T.row(n, [&](double a1, double a2) { return a1 * g.density(a1, a2, hbar); });
        const cplx r2 = T.row(n, [&](double a1, double a2) { return g.density(a1, a2, hbar) * a2; });
        const cplx r3 = T.row(n, [&](double a1, double a2) { return a1 * a1 * g.density(a1, a2, hbar); });
        comp += r0.real();
        XX += Xn * Xn * r0.real();
        Xx += Xn * r1;
        Xrx += Xn * r2;
        x2 += r3.real();
    }
    const double x2_full = g.vx + g.q0 * g.q0;
    const double full_x = XX - (Xx + Xrx).real() + x2_full;
    r.retained_X = XX - 2.0 * Xx.real() + x2;
    r.d_x_squared = x2_full - x2;
    r.commutator_term_x = std::abs(Xx - Xrx);

    // Momentum side: column sums of rho, p rho, rho p and p^2 rho.
    double PP = 0.0, p2 = 0.0;
    cplx Pp = 0.0, Prp = 0.0;
    const double step = block_step(p);
    for (int b = T.b_lo(); b <= T.b_hi(); ++b) {
        const double Pb = b * step;
        const cplx c0 = T.column(b);
        const cplx c1 = T.column(b, [&](double a1, double a2) { return a1 * g.momentum_density(a1, a2, hbar); });
        const cplx c2 = T.column(b, [&](double a1, double a2) { return g.momentum_density(a1, a2, hbar) * a2; });
        const cplx c3 = T.column(b, [&](double a1, double a2) { return a1 * a1 * g.momentum_density(a1, a2, hbar); });
        PP += Pb * Pb * c0.real();
        Pp += Pb * c1;
        Prp += Pb * c2;
        p2 += c3.real();
    }
    const double p2_full = g.vp + g.p0 * g.p0;
    const double full_p = PP - (Pp + Prp).real() + p2_full;
    r.retained_P = PP - 2.0 * Pp.real() + p2;
    r.d_p_squared = p2_full - p2;
    r.commutator_term = std::abs(Pp - Prp);

    r.completeness_sum = comp;
    r.expected_completeness = 1.0 - std::ldexp(1.0, -p.N);
    r.dist_X = std::sqrt(std::max(full_x, 0.0));
    r.dist_P = std::sqrt(std::max(full_p, 0.0));
    r.product_over_hbar = r.dist_X * r.dist_P / hbar;
    r.retained_product_over_hbar = std::sqrt(std::max(r.retained_X, 0.0) * std::max(r.retained_P, 0.0)) / hbar;
    r.C_predicted = closeness_constant(p.N);

    const double breadth = g.sigma_x() * g.sigma_p() / (2.0 * pi * hbar * p.block_size());
    if (breadth < 10.0 || g.sigma_p() < 0.5 * step)
        r.warnings.push_back("slow-variation precondition violated");
    if (r.d_p_squared > 0.01 * r.retained_P)
        r.warnings.push_back("d_p^2 exceeds 1% of the retained momentum term");
    if (r.commutator_term > 0.01 * r.retained_P)
        r.warnings.push_back("commutator term exceeds 1% of the retained momentum term");
    return r;
}

double per_state_closeness(const CommutingPair& pair, const CoeffState& state)
{
    if (state.label.kind != StateKind::psi || state.coeffs.empty())
        throw std::domain_error("state is not an eigenstate of the family");
    const LatticeParams& pc = pair.family.params;
    const int d = pc.block_size();
    const LowIndex first = state.coeffs.begin()->first;
    const int n = first.n;
    const int block = static_cast<int>(std::floor(static_cast<double>(first.m) / d));
    for (const auto& [idx, c] : state.coeffs)
        if (idx.n != n || static_cast<int>(std::floor(static_cast<double>(idx.m) / d)) != block || !in_truncation(pc, idx))
            throw std::domain_error("state is not an eigenstate of the family");
    const double X = n * pc.a;
    const double P = block * d * pc.b();

    const PositionMoments pm = position_moments(pc, state);
    const double dx2 = pm.m2 - 2.0 * X * pm.m1 + X * X * pm.m0;
    double centre = 0.0;
    for (const auto& [idx, c] : state.coeffs)
        centre += std::norm(c) * (idx.m + pc.momentum_shift) * pc.b();
    centre /= state.norm2();
    const double L = pc.effective_cutoff();
    const RegularisedMoments mm = momentum_moments(pc, state, centre - L, centre + L);
    const double dp2 = mm.m2 - 2.0 * P * mm.m1 + P * P * mm.m0;
    return dx2 * dp2 / (pc.hbar * pc.hbar);
}

ProbabilityReport probability_intervals(const GaussianState& rho, int n1, int n2, int b1, int b2,
                                        const LatticeParams& p, const ProbabilityThresholds& th)
{
    if (n1 > n2 || b1 > b2)
        throw std::domain_error("empty interval");
    if (n1 < p.n_min || n2 > p.n_max || b1 < p.first_block || b2 >= p.first_block + p.m_blocks)
        throw std::domain_error("interval outside truncation");
    truncation_spill(rho, p);
    const GaussianTraces T(rho, p);
    ProbabilityReport r;
    for (int n = std::max(n1, T.n_lo()); n <= std::min(n2, T.n_hi()); ++n)
        r.p_X += T.row(n).real();
    for (int b = std::max(b1, T.b_lo()); b <= std::min(b2, T.b_hi()); ++b)
        r.p_P += T.column(b).real();
    const double step = block_step(p);
    r.ref_X = rho.probability_x(n1 * p.a, n2 * p.a);
    r.ref_P = rho.probability_p(b1 * step, b2 * step);
    r.err_X = std::abs(r.p_X - r.ref_X);
    r.err_P = std::abs(r.p_P - r.ref_P);

    const double DX = (n2 - n1) * p.a, DP = (b2 - b1) * step;
    r.cond_i = std::ldexp(1.0, -p.N) < th.tolerance;
    r.cond_ii = rho.sigma_x() >= th.min_sigma_cells * p.a && rho.sigma_p() >= th.min_sigma_cells * step;
    r.cond_iii = DX * DX >= th.min_interval_ratio * p.a * p.a / 12.0 &&
                 DP * DP >= th.min_interval_ratio * step * step / 12.0 &&
                 DX * DP >= th.min_interval_ratio * p.block_size() * 2.0 * pi * p.hbar;
    r.agree = r.err_X <= th.tolerance && r.err_P <= th.tolerance;
    return r;
}

std::string closeness_json(const ClosenessReport& r)
{
    nlohmann::ordered_json j;
    j["N"] = r.N;
    j["completeness_sum"] = r.completeness_sum;
    j["expected_completeness"] = r.expected_completeness;
    j["dist_X"] = r.dist_X;
    j["dist_P"] = r.dist_P;
    j["product_over_hbar"] = r.product_over_hbar;
    j["retained_product_over_hbar"] = r.retained_product_over_hbar;
    j["C_predicted"] = r.C_predicted;
    j["retained_X"] = r.retained_X;
    j["retained_P"] = r.retained_P;
    j["d_x_squared"] = r.d_x_squared;
    j["d_p_squared"] = r.d_p_squared;
    j["commutator_term_x"] = r.commutator_term_x;
    j["commutator_term"] = r.commutator_term;
    j["warnings"] = r.warnings;
    return j.dump(2);
}

std::string closeness_csv_header()
{
    return "state,N,completeness_sum,expected_completeness,dist_X,dist_P,product_over_hbar,"
           "retained_product_over_hbar,C_predicted,d_p_squared,commutator_term";
}

std::string closeness_csv_row(const std::string& state, const ClosenessReport& r)
{
    std::ostringstream os;
    os << std::setprecision(12) << state << ',' << r.N << ',' << r.completeness_sum << ',' << r.expected_completeness
       << ',' << r.dist_X << ',' << r.dist_P << ',' << r.product_over_hbar << ',' << r.retained_product_over_hbar << ','
       << r.C_predicted << ',' << r.d_p_squared << ',' << r.commutator_term;
    return os.str();
}

}  // namespace phaselattice
