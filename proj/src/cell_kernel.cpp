#include "phaselattice/cell_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phaselattice {

namespace {

constexpr int column_lmax = 4;

double sinc_half(double t)
{
    if (std::abs(t) < 1e-6)
        return 1.0 - t * t / 24.0;
    return std::sin(0.5 * t) / (0.5 * t);
}

/// sum_{j<d} e^(i j theta).
cplx dirichlet(int d, double theta)
{
    const double k = std::round(theta / (2.0 * pi));
    const double t = theta - 2.0 * pi * k;
    double ratio;
    if (std::abs(t) * d < 1e-4)
        ratio = d * (1.0 - (static_cast<double>(d) * d - 1.0) * t * t / 24.0);
    else
        ratio = std::sin(0.5 * d * t) / std::sin(0.5 * t);
    // d is even, so the sign picked up by the reduction is (-1)^k.
    if (std::fmod(std::abs(k), 2.0) == 1.0)
        ratio = -ratio;
    return std::polar(ratio, 0.5 * (d - 1) * theta);
}

}  // namespace

FamilyKernel::FamilyKernel(const LatticeParams& basis) : p_(basis), d_(basis.block_size())
{
    p_.validate();
    const double b = p_.b();
    centre_ = (0.5 * (d_ - 1) + p_.momentum_shift) * b;
    // Cut points sit where sin^2 of the lobe phase vanishes, so the averaged envelope joins without a boundary term.
    lobe_radius_ = (0.5 * d_ + 16.0) * b;

    rows_.resize(2 * d_ - 1);
    for (int l = -(d_ - 1); l <= d_ - 1; ++l) {
        const double xi = l * p_.a / d_;
        const double lo = std::max(-0.5 * p_.a, -0.5 * p_.a - xi);
        const double hi = std::min(0.5 * p_.a, 0.5 * p_.a - xi);
        RowRule& r = rows_[l + d_ - 1];
        Nodes nodes;
        append_composite(nodes, lo, hi, p_.a / (2.0 * d_), 16);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            r.y.push_back(nodes.x[i]);
            r.w.push_back(nodes.w[i] * (p_.a / d_) * cell_kernel(nodes.x[i] + xi, nodes.x[i]));
        }
    }

    columns_.resize(2 * column_lmax + 1);
    for (int l = -column_lmax; l <= column_lmax; ++l) {
        ColumnRule& c = columns_[l + column_lmax];
        Nodes nodes;
        append_composite(nodes, centre_ - lobe_radius_, centre_ + lobe_radius_, 0.5 * b, 16);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            c.u.push_back(nodes.x[i]);
            c.w.push_back(nodes.w[i] * column_kernel(l, nodes.x[i]));
        }
    }
}

cplx FamilyKernel::cell_kernel(double x1, double x2) const
{
    const double a = p_.a;
    if (std::abs(x1) > 0.5 * a * (1.0 + 1e-14) || std::abs(x2) > 0.5 * a * (1.0 + 1e-14))
        return 0.0;
    const cplx diag = dirichlet(d_, 2.0 * pi * (x1 - x2) / a);
    const cplx s1 = dirichlet(d_, 2.0 * pi * x1 / a + pi);
    const cplx s2 = dirichlet(d_, -2.0 * pi * x2 / a + pi);
    const cplx body = diag - s1 * s2 / static_cast<double>(d_);
    return std::polar(1.0 / a, 2.0 * pi * p_.momentum_shift * (x1 - x2) / a) * body;
}

void FamilyKernel::sinc_vector(double u, std::vector<double>& s) const
{
    s.resize(d_);
    const double U = u * p_.a / p_.hbar;
    for (int j = 0; j < d_; ++j)
        s[j] = sinc_half(U - 2.0 * pi * (j + p_.momentum_shift));
}

double FamilyKernel::column_kernel(int l, double u) const
{
    std::vector<double> s0, s1;
    sinc_vector(u, s0);
    sinc_vector(u + l * p_.b(), s1);
    double dot = 0.0, c0 = 0.0, c1 = 0.0;
    for (int j = 0; j < d_; ++j) {
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        dot += s1[j] * s0[j];
        c0 += sign * s0[j];
        c1 += sign * s1[j];
    }
    return dot - c1 * c0 / d_;
}

double FamilyKernel::column_envelope(int l, double u) const
{
    // e_l = 4 sin^2(U/2 - pi shift) (-1)^l 2^N cov_j(1/theta'_j, 1/theta_j).
    const double U = u * p_.a / p_.hbar;
    double m0 = 0.0, m1 = 0.0;
    std::vector<double> t0(d_), t1(d_);
    for (int j = 0; j < d_; ++j) {
        t0[j] = 1.0 / (U - 2.0 * pi * (j + p_.momentum_shift));
        t1[j] = 1.0 / (U + 2.0 * pi * l - 2.0 * pi * (j + p_.momentum_shift));
        m0 += t0[j];
        m1 += t1[j];
    }
    m0 /= d_;
    m1 /= d_;
    double cov = 0.0;
    for (int j = 0; j < d_; ++j)
        cov += (t0[j] - m0) * (t1[j] - m1);
    const double sign = (l % 2 == 0) ? 1.0 : -1.0;
    return 2.0 * sign * cov;
}

const FamilyKernel::RowRule& FamilyKernel::row_rule(int l) const
{
    return rows_.at(l + d_ - 1);
}

const FamilyKernel::ColumnRule& FamilyKernel::column_rule(int l) const
{
    if (std::abs(l) > column_lmax)
        throw std::domain_error("column coherence offset out of range");
    return columns_[l + column_lmax];
}

cplx FamilyKernel::row_sum(int n, const KernelFn& A, int lmax) const
{
    const int L = std::min(lmax, d_ - 1);
    cplx acc = 0.0;
    const double shift = n * p_.a;
    for (int l = -L; l <= L; ++l) {
        const RowRule& r = row_rule(l);
        const double xi = l * p_.a / d_;
        for (std::size_t i = 0; i < r.y.size(); ++i) {
            const double x = shift + r.y[i];
            acc += r.w[i] * A(x, x + xi);
        }
    }
    return acc;
}

void FamilyKernel::accumulate_outer(cplx& acc, int l, double lo, double hi, double Pb, const KernelFn& A,
                                    const MomentumSupport& support) const
{
    if (!(hi > lo))
        return;
    const double b = p_.b();
    const bool averaged = support.scale >= 2.0 * b;
    const double width = averaged ? std::min(0.25 * support.scale, 0.5 * lobe_radius_) : 0.5 * b;
    Nodes nodes;
    append_composite(nodes, lo, hi, width, 16);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double u = nodes.x[i];
        const double e = averaged ? column_envelope(l, u) : column_kernel(l, u);
        acc += nodes.w[i] * e * A(Pb + u, Pb + u + l * b);
    }
}

cplx FamilyKernel::column_sum(int block, const KernelFn& A, int lmax, const MomentumSupport& support) const
{
    const int L = std::min(lmax, column_lmax);
    const double b = p_.b();
    const double Pb = block * d_ * b;
    const double rlo = support.lo - Pb, rhi = support.hi - Pb;
    const double clo = centre_ - lobe_radius_, chi = centre_ + lobe_radius_;
    cplx acc = 0.0;
    for (int l = -L; l <= L; ++l) {
        if (rhi > clo && rlo < chi) {
            const ColumnRule& c = column_rule(l);
            for (std::size_t i = 0; i < c.u.size(); ++i)
                acc += c.w[i] * A(Pb + c.u[i], Pb + c.u[i] + l * b);
        }
        accumulate_outer(acc, l, std::max(rlo, chi), rhi, Pb, A, support);
        accumulate_outer(acc, l, rlo, std::min(rhi, clo), Pb, A, support);
    }
    return acc;
}

double FamilyKernel::periodised_wigner(double pm, double q) const
{
    const double a = p_.a;
    const double qc = q - a * std::round(q / a);
    const double w = a - 2.0 * std::abs(qc);
    cplx s = 0.0;
    for (int l = -(d_ - 1); l <= d_ - 1; ++l) {
        const double xi = l * a / d_;
        if (std::abs(xi) > w * (1.0 + 1e-12) + 1e-15 * a)
            continue;
        double weight = 1.0;
        if (std::abs(std::abs(xi) - w) <= 1e-12 * a && w > 1e-12 * a)
            weight = 0.5;
        s += weight * cell_kernel(qc + 0.5 * xi, qc - 0.5 * xi) * std::polar(1.0, -pm * xi / p_.hbar);
    }
    return (s * (a / (2.0 * d_ * pi * p_.hbar))).real();
}

}  // namespace phaselattice
