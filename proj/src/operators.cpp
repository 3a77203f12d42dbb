#include "phaselattice/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace phaselattice {

void LatticeOperator::check_key(BlockKey key) const
{
    const int lo = params_.first_block;
    if (key.n < params_.n_min || key.n > params_.n_max || key.block < lo || key.block >= lo + params_.m_blocks)
        throw std::domain_error("block outside truncation");
}

void LatticeOperator::check_compatible(const LatticeOperator& o) const
{
    if (!params_.same_basis(o.params_))
        throw std::domain_error("operators live on different lattice bases");
}

void LatticeOperator::set_block(BlockKey key, Eigen::MatrixXcd m)
{
    check_key(key);
    const int d = params_.block_size();
    if (m.rows() != d || m.cols() != d)
        throw std::invalid_argument("block has wrong size");
    blocks_[key] = std::move(m);
}

Eigen::MatrixXcd LatticeOperator::block(BlockKey key) const
{
    auto it = blocks_.find(key);
    if (it != blocks_.end())
        return it->second;
    const int d = params_.block_size();
    return Eigen::MatrixXcd::Zero(d, d);
}

LatticeOperator LatticeOperator::identity(const LatticeParams& p)
{
    LatticeOperator I(p);
    const int d = p.block_size();
    for (int n = p.n_min; n <= p.n_max; ++n)
        for (int b = p.first_block; b < p.first_block + p.m_blocks; ++b)
            I.blocks_[{n, b}] = Eigen::MatrixXcd::Identity(d, d);
    return I;
}

LatticeOperator LatticeOperator::operator+(const LatticeOperator& o) const
{
    check_compatible(o);
    LatticeOperator r = *this;
    for (const auto& [k, m] : o.blocks_) {
        auto it = r.blocks_.find(k);
        if (it == r.blocks_.end())
            r.blocks_[k] = m;
        else
            it->second += m;
    }
    return r;
}

LatticeOperator LatticeOperator::operator-(const LatticeOperator& o) const
{
    return *this + o.scaled(-1.0);
}

LatticeOperator LatticeOperator::operator*(const LatticeOperator& o) const
{
    check_compatible(o);
    LatticeOperator r(params_);
    for (const auto& [k, m] : blocks_) {
        auto it = o.blocks_.find(k);
        if (it != o.blocks_.end())
            r.blocks_[k] = m * it->second;
    }
    return r;
}

LatticeOperator LatticeOperator::scaled(cplx s) const
{
    LatticeOperator r = *this;
    for (auto& [k, m] : r.blocks_)
        m *= s;
    return r;
}

LatticeOperator LatticeOperator::adjoint() const
{
    LatticeOperator r = *this;
    for (auto& [k, m] : r.blocks_)
        m = m.adjoint().eval();
    return r;
}

cplx LatticeOperator::trace() const
{
    cplx t = 0.0;
    for (const auto& [k, m] : blocks_)
        t += m.trace();
    return t;
}

double LatticeOperator::max_abs() const
{
    double v = 0.0;
    for (const auto& [k, m] : blocks_)
        v = std::max(v, m.cwiseAbs().maxCoeff());
    return v;
}

double LatticeOperator::hermiticity_defect() const
{
    double v = 0.0;
    for (const auto& [k, m] : blocks_)
        v = std::max(v, (m - m.adjoint()).cwiseAbs().maxCoeff());
    return v;
}

double LatticeOperator::idempotency_defect() const
{
    double v = 0.0;
    for (const auto& [k, m] : blocks_)
        v = std::max(v, (m * m - m).cwiseAbs().maxCoeff());
    return v;
}

Eigen::MatrixXcd LatticeOperator::to_dense() const
{
    const int D = params_.dim();
    const int d = params_.block_size();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(D, D);
    for (const auto& [k, m] : blocks_) {
        const int off = flat_index(params_, {k.n, k.block * d});
        out.block(off, off, d, d) = m;
    }
    return out;
}

Eigen::MatrixXd projector_block(int N)
{
    const int d = 1 << N;
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(d, d);
    // Sign products times 2^-K keep every entry dyadic, so the trace is exact.
    for (int K = 1; K <= N; ++K) {
        const auto c = halving_coefficients(K, N);
        const int len = 1 << K;
        const double w = std::ldexp(1.0, -K);
        for (int m = 0; m < d / len; ++m)
            for (int i = 0; i < len; ++i)
                for (int j = 0; j < len; ++j)
                    E(m * len + i, m * len + j) += ((c[i] > 0) == (c[j] > 0) ? w : -w);
    }
    return E;
}

LatticeOperator build_projector(const LatticeParams& p)
{
    p.validate();
    if (p.n_min > 0 || p.n_max < 0 || p.first_block > 0 || p.first_block + p.m_blocks <= 0)
        throw std::domain_error("truncation must contain cell n = 0 and momentum block 0");
    LatticeOperator E(p);
    E.set_block({0, 0}, projector_block(p.N).cast<cplx>());
    return E;
}

LatticeOperator shift_projector(const LatticeOperator& E, int n, int m)
{
    LatticeOperator r(E.params());
    for (const auto& [k, blk] : E.blocks())
        r.set_block({k.n + n, k.block + m}, blk);
    return r;
}

double centering_offset(int N)
{
    return std::ldexp(1.0, N - 1) - 0.5;
}

LatticeOperator center_momentum(const LatticeOperator& E)
{
    LatticeParams q = E.params();
    q.momentum_shift -= centering_offset(q.N);
    LatticeOperator r(q);
    for (const auto& [k, blk] : E.blocks())
        r.set_block(k, blk);
    return r;
}

MomentReport operator_moments(const LatticeOperator& A, double cutoff)
{
    const LatticeParams& p = A.params();
    const int d = p.block_size();
    const double tr = A.trace().real();
    if (!(tr > 0.0))
        throw std::domain_error("operator must have positive trace");
    double x1 = 0, x2 = 0, xp = 0, p1 = 0, p2 = 0, h1 = 0, h2 = 0;
    for (const auto& [k, blk] : A.blocks()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(blk);
        const double centre = (k.block * d + 0.5 * d + p.momentum_shift) * p.b();
        for (int e = 0; e < d; ++e) {
            const double lam = es.eigenvalues()[e];
            if (std::abs(lam) < 1e-13)
                continue;
            CoeffState s;
            for (int j = 0; j < d; ++j)
                if (es.eigenvectors()(j, e) != 0.0)
                    s.coeffs[{k.n, k.block * d + j}] = es.eigenvectors()(j, e);
            const PositionMoments pm = position_moments(p, s);
            const RegularisedMoments full = momentum_moments(p, s, centre - cutoff, centre + cutoff);
            const RegularisedMoments half = momentum_moments(p, s, centre - 0.5 * cutoff, centre + 0.5 * cutoff);
            x1 += lam * pm.m1;
            x2 += lam * pm.m2;
            xp += lam * pm.xp;
            p1 += lam * full.m1;
            p2 += lam * full.m2;
            h1 += lam * half.m1;
            h2 += lam * half.m2;
        }
    }
    MomentReport r;
    r.cutoff = cutoff;
    auto& mv = r.moments;
    mv.mean_x = x1 / tr;
    mv.var_x = x2 / tr - mv.mean_x * mv.mean_x;
    mv.mean_p = p1 / tr;
    mv.var_p = p2 / tr - mv.mean_p * mv.mean_p;
    mv.cov_xp = xp / tr - mv.mean_x * mv.mean_p;
    const double hm = h1 / tr;
    r.tail_estimate = std::abs(mv.var_p - (h2 / tr - hm * hm));
    return r;
}

MomentReport projector_moments(const LatticeOperator& E, Method method, double rel_tol)
{
    const LatticeParams& p = E.params();
    if (method == Method::closed_form) {
        MomentReport r;
        r.moments.mean_p = p.b() * (centering_offset(p.N) + p.momentum_shift);
        r.moments.var_p = std::ldexp(1.0, p.N + 1) * pi * pi * p.hbar * p.hbar / (3.0 * p.a * p.a);
        r.moments.var_x = p.a * p.a / 12.0;
        return r;
    }
    MomentReport r = operator_moments(E, p.effective_cutoff());
    if (r.tail_estimate > rel_tol * r.moments.var_p) {
        std::ostringstream os;
        os << "momentum cutoff too small: tail estimate " << r.tail_estimate << " exceeds tolerance "
           << rel_tol * r.moments.var_p;
        throw std::domain_error(os.str());
    }
    return r;
}

const FamilyCell& SpectralFamily::cell(int n, int m) const
{
    for (const auto& c : cells)
        if (c.n == n && c.m == m)
            return c;
    throw std::domain_error("cell not in family");
}

double SpectralFamily::exclusivity_defect() const
{
    double v = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i)
        for (std::size_t j = 0; j < cells.size(); ++j) {
            LatticeOperator prod = cells[i].projector * cells[j].projector;
            if (i == j)
                prod = prod - cells[i].projector;
            v = std::max(v, prod.max_abs());
        }
    return v;
}

SpectralFamily build_family(const LatticeParams& p, bool centered)
{
    p.validate();
    SpectralFamily f;
    f.centered = centered;
    f.params = p;
    if (centered)
        f.params.momentum_shift -= centering_offset(p.N);
    const Eigen::MatrixXcd blk = projector_block(p.N).cast<cplx>();
    for (int n = p.n_min; n <= p.n_max; ++n)
        for (int m = p.first_block; m < p.first_block + p.m_blocks; ++m) {
            FamilyCell c;
            c.n = n;
            c.m = m;
            c.X = n * p.a;
            c.P = m * p.block_size() * p.b();
            c.projector = LatticeOperator(f.params);
            c.projector.set_block({n, m}, blk);
            f.cells.push_back(std::move(c));
        }
    return f;
}

CommutingPair build_commuting_pair(const LatticeParams& p)
{
    CommutingPair pair;
    pair.family = build_family(p, true);
    pair.X_op = LatticeOperator(pair.family.params);
    pair.P_op = LatticeOperator(pair.family.params);
    for (const auto& c : pair.family.cells) {
        pair.X_op = pair.X_op + c.projector.scaled(c.X);
        pair.P_op = pair.P_op + c.projector.scaled(c.P);
    }
    if (pair.family.exclusivity_defect() > 1e-10)
        throw std::logic_error("spectral family cells overlap");
    return pair;
}

double commutator_norm(const LatticeOperator& A, const LatticeOperator& B)
{
    return (A * B - B * A).max_abs();
}

RegionProjector region_projector(const SpectralFamily& family, const std::vector<std::pair<int, int>>& region)
{
    std::set<std::pair<int, int>> seen;
    RegionProjector r;
    r.inside = LatticeOperator(family.params);
    for (const auto& nm : region) {
        if (!seen.insert(nm).second)
            throw std::domain_error("duplicate cell in region");
        r.inside = r.inside + family.cell(nm.first, nm.second).projector;
    }
    r.complement = LatticeOperator::identity(family.params) - r.inside;
    return r;
}

}  // namespace phaselattice
