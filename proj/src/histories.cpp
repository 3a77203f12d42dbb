#include "phaselattice/histories.hpp"

#include "phaselattice/fft.hpp"
#include "phaselattice/gaussian.hpp"
#include "phaselattice/parallel.hpp"
#include "phaselattice/wigner.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace phaselattice {

void HistorySpec::validate(double tol) const
{
    if (times.empty())
        throw std::domain_error("history needs at least one time");
    if (alternatives.size() != times.size())
        throw std::domain_error("one projector family per time is required");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0) || (i > 0 && !(times[i] > times[i - 1])))
            throw std::domain_error("times must be nonnegative and strictly increasing");
    }
    const Eigen::Index dim = alternatives.front().empty() ? 0 : alternatives.front().front().rows();
    for (const auto& fam : alternatives) {
        if (fam.empty())
            throw std::domain_error("empty projector family");
        Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(dim, dim);
        for (const auto& P : fam) {
            if (P.rows() != dim || P.cols() != dim)
                throw std::domain_error("projector dimensions differ");
            if ((P - P.adjoint()).cwiseAbs().maxCoeff() > tol)
                throw std::domain_error("projector is not Hermitian");
            sum += P;
        }
        if ((sum - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff() > tol)
            throw std::domain_error("projector family does not sum to the identity");
    }
    if (propagator.kind != PropagatorKind::identity) {
        propagator.grid.validate();
        if (propagator.grid.points != dim)
            throw std::domain_error("propagator grid does not match the projector dimension");
        propagator.env.validate();
    }
}

int HistorySpec::history_count() const
{
    int h = 1;
    for (const auto& f : alternatives)
        h *= static_cast<int>(f.size());
    return h;
}

std::vector<int> DecoherenceMatrix::history(int index) const
{
    std::vector<int> out;
    for (int r : alternatives_per_time) {
        out.push_back(index % r);
        index /= r;
    }
    return out;
}

double DecoherenceMatrix::max_offdiagonal() const
{
    double m = 0.0;
    for (Eigen::Index i = 0; i < entries.rows(); ++i)
        for (Eigen::Index j = 0; j < entries.cols(); ++j)
            if (i != j)
                m = std::max(m, std::abs(entries(i, j)));
    return m;
}

double DecoherenceMatrix::max_offdiagonal_real() const
{
    double m = 0.0;
    for (Eigen::Index i = 0; i < entries.rows(); ++i)
        for (Eigen::Index j = 0; j < entries.cols(); ++j)
            if (i != j)
                m = std::max(m, std::abs(entries(i, j).real()));
    return m;
}

double DecoherenceMatrix::diagonal_sum() const
{
    return entries.diagonal().real().sum();
}

cplx DecoherenceMatrix::total_sum() const
{
    return entries.sum();
}

double DecoherenceMatrix::hermiticity_defect() const
{
    return (entries - entries.adjoint()).cwiseAbs().maxCoeff();
}

double DecoherenceMatrix::min_diagonal() const
{
    return entries.diagonal().real().minCoeff();
}

double DecoherenceMatrix::additivity_defect() const
{
    double m = 0.0;
    for (Eigen::Index i = 0; i < entries.rows(); ++i)
        for (Eigen::Index j = i + 1; j < entries.cols(); ++j) {
            const double merged = (entries(i, i) + entries(j, j) + entries(i, j) + entries(j, i)).real();
            m = std::max(m, std::abs(merged - entries(i, i).real() - entries(j, j).real()));
        }
    return m;
}

namespace {

Eigen::MatrixXcd free_propagator(const GridSpec& g, double hbar, double mass, double t)
{
    const int D = g.points;
    const double L = g.box_length;
    std::vector<cplx> phase(D);
    for (int j = 0; j < D; ++j) {
        const int k = (j <= D / 2) ? j : j - D;
        const double p = 2.0 * pi * hbar * k / L;
        phase[j] = std::polar(1.0, -p * p * t / (2.0 * mass * hbar));
    }
    Eigen::MatrixXcd U(D, D);
    std::vector<cplx> col(D);
    for (int c = 0; c < D; ++c) {
        std::fill(col.begin(), col.end(), cplx(0.0));
        col[c] = 1.0;
        fft_inplace(col, false);
        for (int j = 0; j < D; ++j)
            col[j] *= phase[j];
        fft_inplace(col, true);
        for (int j = 0; j < D; ++j)
            U(j, c) = col[j] / static_cast<double>(D);
    }
    return U;
}

/// Gaussian smoothing of covariance S written as shear(tau) . smooth_q . smooth_p . shear(-tau),
/// so every factor acts exactly on grid operators.
struct OpenStep {
    Eigen::MatrixXcd pre;
    Eigen::MatrixXcd post;
    Eigen::MatrixXd mask_x;
    Eigen::MatrixXd mask_p;
    Eigen::MatrixXcd dft;
};

OpenStep open_step(const Propagator& pr, double dt)
{
    const GridSpec& g = pr.grid;
    const int D = g.points;
    const double hbar = pr.hbar, m = pr.env.mass;
    EvolutionParams e = pr.env;
    e.time = dt;
    const KernelCovariance S = diffusion_kernel(e);
    const double tau = S.qp / S.pp;
    const double var_p = S.pp, var_q = S.qq - S.qp * tau;
    OpenStep o;
    o.pre = free_propagator(g, hbar, m, dt - tau * m);
    o.post = free_propagator(g, hbar, m, tau * m);
    o.mask_x.resize(D, D);
    o.mask_p.resize(D, D);
    o.dft.resize(D, D);
    const double dk = 2.0 * pi * hbar / g.box_length;
    auto wrapped = [D](int j) { return j <= D / 2 ? j : j - D; };
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) {
            const double xi = (i - j) * g.dx() / hbar;
            const double eta = (wrapped(i) - wrapped(j)) * dk / hbar;
            o.mask_x(i, j) = std::exp(-0.5 * var_p * xi * xi);
            o.mask_p(i, j) = std::exp(-0.5 * var_q * eta * eta);
            o.dft(i, j) = std::polar(1.0 / std::sqrt(static_cast<double>(D)), -2.0 * pi * i * j / D);
        }
    return o;
}

class Chain {
public:
    Chain(const HistorySpec& spec) : spec_(spec)
    {
        const auto& pr = spec.propagator;
        double prev = 0.0;
        for (double t : spec.times) {
            const double dt = t - prev;
            prev = t;
            steps_.push_back(dt);
            if (pr.kind == PropagatorKind::unitary_free || (pr.kind == PropagatorKind::open_system && pr.env.diffusion == 0.0))
                unitaries_.push_back(free_propagator(pr.grid, pr.hbar, pr.env.mass, dt));
            else if (pr.kind == PropagatorKind::open_system && dt > 0.0)
                open_.push_back(open_step(pr, dt));
            else
                open_.emplace_back();
        }
        stride_.assign(spec.times.size(), 1);
        for (std::size_t i = 1; i < spec.times.size(); ++i)
            stride_[i] = stride_[i - 1] * static_cast<int>(spec.alternatives[i - 1].size());
    }

    Eigen::MatrixXcd evolve(const Eigen::MatrixXcd& R, std::size_t level) const
    {
        const auto& pr = spec_.propagator;
        const double dt = steps_[level];
        if (dt == 0.0)
            return R;
        switch (pr.kind) {
        case PropagatorKind::identity:
            return R;
        case PropagatorKind::unitary_free:
            return unitaries_[level] * R * unitaries_[level].adjoint();
        case PropagatorKind::open_system: {
            if (pr.env.diffusion == 0.0)
                return unitaries_[level] * R * unitaries_[level].adjoint();
            // Green function: free shear over dt, then the Gaussian kernel in factored form.
            const OpenStep& o = open_[level];
            Eigen::MatrixXcd A = (o.pre * R * o.pre.adjoint()).cwiseProduct(o.mask_x.cast<cplx>());
            A = o.dft * A * o.dft.adjoint();
            A = o.dft.adjoint() * A.cwiseProduct(o.mask_p.cast<cplx>()) * o.dft;
            return o.post * A * o.post.adjoint();
        }
        }
        return R;
    }

    /// Projects the evolved branch at `level` and recurses; fills D.
    void descend(const Eigen::MatrixXcd& evolved, std::size_t level, int h, int hp, Eigen::MatrixXcd& D) const
    {
        const auto& fam = spec_.alternatives[level];
        for (std::size_t a = 0; a < fam.size(); ++a)
            for (std::size_t b = 0; b < fam.size(); ++b)
                branch(evolved, level, a, b, h, hp, D);
    }

    void branch(const Eigen::MatrixXcd& evolved, std::size_t level, std::size_t a, std::size_t b, int h, int hp,
                Eigen::MatrixXcd& D) const
    {
        const auto& fam = spec_.alternatives[level];
        const int h2 = h + static_cast<int>(a) * stride_[level];
        const int hp2 = hp + static_cast<int>(b) * stride_[level];
        const Eigen::MatrixXcd R = fam[a] * evolved * fam[b].adjoint();
        if (level + 1 == spec_.times.size()) {
            D(h2, hp2) = R.trace();
            return;
        }
        descend(evolve(R, level + 1), level + 1, h2, hp2, D);
    }

private:
    const HistorySpec& spec_;
    std::vector<double> steps_;
    std::vector<Eigen::MatrixXcd> unitaries_;
    std::vector<OpenStep> open_;
    std::vector<int> stride_;
};

}  // namespace

DecoherenceMatrix decoherence_functional(const Eigen::MatrixXcd& rho, const HistorySpec& spec)
{
    if (rho.rows() > max_chain_dimension)
        throw std::length_error("operator dimension too large for dense history chains");
    spec.validate();
    if (rho.rows() != rho.cols() || rho.rows() != spec.alternatives.front().front().rows())
        throw std::domain_error("density matrix does not match the projector dimension");

    DecoherenceMatrix out;
    for (const auto& f : spec.alternatives)
        out.alternatives_per_time.push_back(static_cast<int>(f.size()));
    const int H = spec.history_count();
    out.entries = Eigen::MatrixXcd::Zero(H, H);

    const Chain chain(spec);
    const Eigen::MatrixXcd first = chain.evolve(rho, 0);
    const std::size_t n0 = spec.alternatives.front().size();
    // Each first-level pair writes a disjoint set of entries.
    parallel_for(n0 * n0, [&](std::size_t k) { chain.branch(first, 0, k / n0, k % n0, 0, 0, out.entries); });
    return out;
}

DecoherenceMatrix coarse_grain(const DecoherenceMatrix& D, const std::vector<std::vector<int>>& merge)
{
    if (merge.size() != D.alternatives_per_time.size())
        throw std::domain_error("one merge map per time is required");
    DecoherenceMatrix out;
    for (std::size_t i = 0; i < merge.size(); ++i) {
        if (static_cast<int>(merge[i].size()) != D.alternatives_per_time[i])
            throw std::domain_error("merge map does not match the alternatives");
        const int hi = *std::max_element(merge[i].begin(), merge[i].end());
        if (*std::min_element(merge[i].begin(), merge[i].end()) < 0)
            throw std::domain_error("negative coarse alternative");
        out.alternatives_per_time.push_back(hi + 1);
    }
    int H = 1;
    for (int r : out.alternatives_per_time)
        H *= r;
    auto coarse_index = [&](int index) {
        const std::vector<int> h = D.history(index);
        int c = 0, stride = 1;
        for (std::size_t i = 0; i < h.size(); ++i) {
            c += merge[i][h[i]] * stride;
            stride *= out.alternatives_per_time[i];
        }
        return c;
    };
    out.entries = Eigen::MatrixXcd::Zero(H, H);
    const Eigen::Index n = D.entries.rows();
    std::vector<int> map(n);
    for (Eigen::Index i = 0; i < n; ++i)
        map[i] = coarse_index(static_cast<int>(i));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out.entries(map[i], map[j]) += D.entries(i, j);
    return out;
}

LabelFlow identity_flow()
{
    return [](double X, double, double) { return X; };
}

LabelFlow shear_flow(double mass)
{
    if (!(mass > 0.0))
        throw std::domain_error("mass must be positive");
    return [mass](double X, double P, double t) { return X + t * P / mass; };
}

CellPartition flow_partition(const SpectralFamily& family, const LabelFlow& flow, const std::vector<double>& times,
                             const std::vector<std::vector<double>>& edges)
{
    if (edges.size() != times.size())
        throw std::domain_error("one edge list per time is required");
    CellPartition part;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::is_sorted(edges[i].begin(), edges[i].end()))
            throw std::domain_error("edges must be sorted");
        std::vector<CellSet> alts(edges[i].size() + 1);
        for (const auto& c : family.cells) {
            const double label = flow(c.X, c.P, times[i]);
            const auto k = std::upper_bound(edges[i].begin(), edges[i].end(), label) - edges[i].begin();
            alts[k].push_back({c.n, c.m});
        }
        part.push_back(std::move(alts));
    }
    return part;
}

std::vector<std::vector<Eigen::MatrixXcd>> partition_projectors(const SpectralFamily& family, const CellPartition& part)
{
    std::map<std::pair<int, int>, const FamilyCell*> lookup;
    for (const auto& c : family.cells)
        lookup[{c.n, c.m}] = &c;
    const int dim = family.params.dim();
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(dim, dim);

    std::vector<std::vector<Eigen::MatrixXcd>> out;
    for (const auto& alts : part) {
        if (alts.empty())
            throw std::domain_error("empty partition");
        std::set<std::pair<int, int>> seen;
        std::vector<Eigen::MatrixXcd> fam;
        Eigen::MatrixXcd used = Eigen::MatrixXcd::Zero(dim, dim);
        for (std::size_t k = 0; k < alts.size(); ++k) {
            Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(dim, dim);
            for (const auto& cell : alts[k]) {
                const auto it = lookup.find(cell);
                if (it == lookup.end())
                    throw std::domain_error("partition cell is not in the family");
                if (!seen.insert(cell).second)
                    throw std::domain_error("partition repeats a cell");
                P += it->second->projector.to_dense();
            }
            if (k + 1 < alts.size()) {
                used += P;
                fam.push_back(std::move(P));
            }
        }
        if (seen.size() != lookup.size())
            throw std::domain_error("partition does not cover the family");
        fam.push_back(I - used);
        out.push_back(std::move(fam));
    }
    return out;
}

DecoherenceMatrix commuting_histories(const Eigen::MatrixXcd& rho, const CommutingPair& pair, const CellPartition& part)
{
    HistorySpec spec;
    for (std::size_t i = 0; i < part.size(); ++i)
        spec.times.push_back(static_cast<double>(i));
    spec.alternatives = partition_projectors(pair.family, part);
    spec.propagator.kind = PropagatorKind::identity;
    return decoherence_functional(rho, spec);
}

Eigen::MatrixXcd lattice_density(const LatticeParams& p, const CoeffState& s)
{
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(p.dim());
    for (const auto& [idx, c] : s.coeffs) {
        if (!in_truncation(p, idx))
            throw std::domain_error("state leaves the truncation");
        v[flat_index(p, idx)] = c;
    }
    const double n = v.norm();
    if (!(n > 0.0))
        throw std::domain_error("zero state");
    v /= n;
    return v * v.adjoint();
}

Eigen::MatrixXcd position_mask(const GridSpec& grid, double lo, double hi)
{
    grid.validate();
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(grid.points, grid.points);
    for (int j = 0; j < grid.points; ++j) {
        const double x = grid.x(j);
        if (x >= lo && x < hi)
            M(j, j) = 1.0;
    }
    return M;
}

std::vector<Eigen::MatrixXcd> interval_family(const GridSpec& grid, const std::vector<double>& edges)
{
    if (!std::is_sorted(edges.begin(), edges.end()))
        throw std::domain_error("edges must be sorted");
    std::vector<Eigen::MatrixXcd> fam;
    double lo = -std::numeric_limits<double>::infinity();
    for (double e : edges) {
        fam.push_back(position_mask(grid, lo, e));
        lo = e;
    }
    fam.push_back(position_mask(grid, lo, std::numeric_limits<double>::infinity()));
    return fam;
}

Eigen::MatrixXcd cat_density(const GridSpec& grid, double hbar, double q0, double p0, double sigma)
{
    const auto left = GaussianState::minimum_uncertainty(-q0, p0, sigma, hbar);
    const auto right = GaussianState::minimum_uncertainty(q0, -p0, sigma, hbar);
    Eigen::VectorXcd v = wave_vector(left, grid, hbar) + wave_vector(right, grid, hbar);
    v /= v.norm();
    return v * v.adjoint();
}

DecayReport approximate_position_histories(const Eigen::MatrixXcd& rho, const GridSpec& grid, double hbar, double mass,
                                           const std::vector<double>& times,
                                           const std::vector<std::vector<double>>& edges,
                                           const std::vector<double>& diffusions)
{
    if (edges.size() != times.size())
        throw std::domain_error("one edge list per time is required");
    if (diffusions.empty())
        throw std::domain_error("no diffusion constants given");
    HistorySpec spec;
    spec.times = times;
    for (const auto& e : edges)
        spec.alternatives.push_back(interval_family(grid, e));
    spec.propagator.kind = PropagatorKind::open_system;
    spec.propagator.grid = grid;
    spec.propagator.hbar = hbar;
    spec.propagator.env.mass = mass;

    DecayReport r;
    for (double D : diffusions) {
        spec.propagator.env.diffusion = D;
        const DecoherenceMatrix M = decoherence_functional(rho, spec);
        r.points.push_back({D, M.max_offdiagonal(), M.max_offdiagonal_real(), std::abs(M.diagonal_sum() - 1.0)});
    }
    r.monotone = true;
    for (std::size_t i = 1; i < r.points.size(); ++i)
        if (!(r.points[i].max_offdiagonal < r.points[i - 1].max_offdiagonal))
            r.monotone = false;
    return r;
}

std::string decoherence_csv(const DecoherenceMatrix& D)
{
    std::ostringstream os;
    os << std::setprecision(12) << "h,h_prime,re,im\n";
    for (Eigen::Index i = 0; i < D.entries.rows(); ++i)
        for (Eigen::Index j = 0; j < D.entries.cols(); ++j)
            os << i << ',' << j << ',' << D.entries(i, j).real() << ',' << D.entries(i, j).imag() << '\n';
    return os.str();
}

std::string decoherence_json(const DecoherenceMatrix& D)
{
    nlohmann::ordered_json j;
    j["histories"] = D.entries.rows();
    j["alternatives_per_time"] = D.alternatives_per_time;
    j["max_offdiagonal"] = D.max_offdiagonal();
    j["max_offdiagonal_real"] = D.max_offdiagonal_real();
    j["diagonal_sum"] = D.diagonal_sum();
    j["diagonal_sum_defect"] = std::abs(D.diagonal_sum() - 1.0);
    j["total_sum_defect"] = std::abs(D.total_sum() - 1.0);
    j["hermiticity_defect"] = D.hermiticity_defect();
    j["additivity_defect"] = D.additivity_defect();
    return j.dump(2);
}

}  // namespace phaselattice
