#include "oracles.hpp"
#include "phaselattice/operators.hpp"

#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace phaselattice;
using Catch::Approx;

namespace {

LatticeParams truncation(int N, int n_lo, int n_hi, int b_lo, int blocks)
{
    LatticeParams p;
    p.N = N;
    p.n_min = n_lo;
    p.n_max = n_hi;
    p.first_block = b_lo;
    p.m_blocks = blocks;
    return p;
}

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXcd& A)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
    return es.eigenvalues();
}

int count_near(const Eigen::VectorXd& v, double target, double tol = 1e-9)
{
    int c = 0;
    for (int i = 0; i < v.size(); ++i)
        c += std::abs(v[i] - target) < tol;
    return c;
}

}  // namespace

TEST_CASE("Projector trace and spectrum", "[operators]")
{
    const LatticeOperator E3 = build_projector(truncation(3, 0, 0, 0, 1));
    CHECK(E3.trace().real() == 7.0);
    CHECK(E3.idempotency_defect() < 1e-10);
    CHECK(E3.hermiticity_defect() < 1e-15);
    const Eigen::VectorXd ev = sorted_eigenvalues(E3.to_dense());
    CHECK(count_near(ev, 1.0) == 7);
    CHECK(count_near(ev, 0.0) == 1);

    for (int N = 1; N <= 8; ++N)
        CHECK(build_projector(truncation(N, 0, 0, 0, 1)).trace().real() == std::ldexp(1.0, N) - 1.0);
}

TEST_CASE("N = 1 projector is the single psi outer product", "[operators]")
{
    const LatticeParams p = truncation(1, 0, 0, 0, 1);
    const Eigen::MatrixXcd E = build_projector(p).to_dense();
    const CoeffState s = build_state(p, StateKind::psi, 1, 0, 0);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(p.dim());
    for (const auto& [idx, c] : s.coeffs)
        v[flat_index(p, idx)] = c;
    CHECK((E - v * v.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(count_near(sorted_eigenvalues(E), 1.0) == 1);
}

TEST_CASE("Projector needs cell 0 and block 0", "[operators]")
{
    CHECK_THROWS_AS(build_projector(truncation(3, 1, 2, 0, 1)), std::domain_error);
    CHECK_THROWS_AS(build_projector(truncation(3, 0, 0, 1, 2)), std::domain_error);
}

TEST_CASE("Projector block entries are dyadic", "[operators]")
{
    for (int N = 1; N <= 6; ++N) {
        const Eigen::MatrixXd B = projector_block(N);
        const double scale = std::ldexp(1.0, N);
        CHECK(((B * scale).array() - (B * scale).array().round()).abs().maxCoeff() == 0.0);
    }
}

TEST_CASE("Shifted projectors", "[operators]")
{
    const LatticeParams p = truncation(3, -1, 1, -1, 3);
    const LatticeOperator E = build_projector(p);
    const LatticeOperator same = shift_projector(E, 0, 0);
    CHECK((same - E).max_abs() == 0.0);

    const LatticeOperator E10 = shift_projector(E, 1, 0);
    CHECK(E10.trace().real() == 7.0);
    for (const auto& [k, blk] : E10.blocks())
        CHECK(k.n == 1);
    CHECK((E10 * E).max_abs() < 1e-12);
    CHECK((shift_projector(E, 0, 1) * E).max_abs() < 1e-12);

    CHECK_THROWS_AS(shift_projector(E, 2, 0), std::domain_error);
    CHECK_THROWS_AS(shift_projector(E, 0, -2), std::domain_error);
}

TEST_CASE("Family exclusivity", "[operators][property]")
{
    for (int N = 1; N <= 5; ++N)
        for (bool centered : {false, true}) {
            const SpectralFamily f = build_family(truncation(N, -1, 1, -1, 3), centered);
            CHECK(f.cells.size() == 9);
            CHECK(f.exclusivity_defect() < 1e-10);
        }
}

TEST_CASE("Centering moves the projector mean to zero", "[operators]")
{
    for (int N = 1; N <= 4; ++N) {
        const LatticeParams p = truncation(N, 0, 0, 0, 1);
        const LatticeOperator E = build_projector(p);
        const LatticeOperator Ec = center_momentum(E);
        CHECK(Ec.trace().real() == E.trace().real());
        const MomentReport m = operator_moments(Ec, p.effective_cutoff());
        INFO("N=" << N);
        CHECK(std::abs(m.moments.mean_p) < 1e-6);
        CHECK(Ec.params().momentum_shift == Approx(-centering_offset(N)));
    }
}

TEST_CASE("Projector moments", "[operators]")
{
    const LatticeParams p = truncation(3, 0, 0, 0, 1);
    const LatticeOperator E = build_projector(p);
    const MomentVector cf = projector_moments(E, Method::closed_form).moments;
    CHECK(cf.mean_p == Approx(7.0 * pi));
    CHECK(cf.var_p == Approx(16.0 * pi * pi / 3.0));
    CHECK(cf.var_p == Approx(52.64).epsilon(1e-3));

    for (int N = 1; N <= 4; ++N) {
        const LatticeParams q = truncation(N, 0, 0, 0, 1);
        const MomentReport qr = projector_moments(build_projector(q), Method::quadrature);
        const oracle::Moments2 exact = oracle::projector_p_moments(N, 0.0);
        const double b = q.b();
        INFO("N=" << N);
        CHECK(qr.moments.mean_p == Approx(b * exact.mean).epsilon(1e-6));
        CHECK(qr.moments.var_p + qr.tail_estimate == Approx(b * b * exact.var).epsilon(2e-3));
        CHECK(qr.moments.var_x == Approx(oracle::projector_var_x(N)).epsilon(1e-7));
        CHECK(std::abs(qr.moments.mean_x) < 1e-10);
    }

    // The printed leading-order dispersion omits the spread of state means; at N = 3 the gap is large.
    const MomentReport q3 = projector_moments(E, Method::quadrature);
    CHECK(q3.moments.var_p / cf.var_p > 3.5);
}

TEST_CASE("Projector moments reject a small cutoff", "[operators]")
{
    LatticeParams p = truncation(4, 0, 0, 0, 1);
    p.momentum_cutoff = p.min_cutoff();
    CHECK_THROWS_AS(projector_moments(build_projector(p), Method::quadrature, 1e-8), std::domain_error);
}

TEST_CASE("Shift covariance of projector moments", "[operators][property]")
{
    const LatticeParams p = truncation(2, -1, 2, -1, 3);
    const LatticeOperator E = build_projector(p);
    const double cut = 200.0 * p.b();
    const MomentVector m0 = operator_moments(E, cut).moments;
    for (auto [n, m] : {std::pair{1, 0}, std::pair{2, 1}, std::pair{-1, -1}}) {
        const MomentVector ms = operator_moments(shift_projector(E, n, m), cut).moments;
        CHECK(ms.mean_x == Approx(m0.mean_x + n * p.a).margin(1e-10));
        CHECK(ms.mean_p == Approx(m0.mean_p + m * p.block_size() * p.b()).epsilon(1e-6));
        CHECK(ms.var_x == Approx(m0.var_x).epsilon(1e-8));
        CHECK(ms.var_p == Approx(m0.var_p).epsilon(1e-6));
    }
}

TEST_CASE("Scale covariance of the projector", "[operators][property]")
{
    const LatticeParams p = truncation(3, 0, 0, 0, 1);
    const MomentVector m1 = projector_moments(build_projector(p), Method::quadrature).moments;
    for (double lambda : {0.5, 2.5}) {
        LatticeParams q = p;
        q.a = lambda;
        const LatticeOperator E = build_projector(q);
        CHECK(E.trace().real() == 7.0);
        CHECK(E.idempotency_defect() < 1e-10);
        const MomentVector m2 = projector_moments(E, Method::quadrature).moments;
        CHECK(m2.var_x == Approx(lambda * lambda * m1.var_x).epsilon(1e-8));
        CHECK(m2.mean_p == Approx(m1.mean_p / lambda).epsilon(1e-8));
        CHECK(m2.var_p == Approx(m1.var_p / (lambda * lambda)).epsilon(1e-6));
        CHECK(build_family(q).exclusivity_defect() == build_family(p).exclusivity_defect());
    }
}

TEST_CASE("Commuting pair", "[operators]")
{
    const LatticeParams p = truncation(3, -1, 1, -1, 3);
    const CommutingPair pair = build_commuting_pair(p);
    CHECK(commutator_norm(pair.X_op, pair.P_op) < 1e-12);
    CHECK(pair.X_op.hermiticity_defect() < 1e-14);
    CHECK(pair.P_op.hermiticity_defect() < 1e-14);

    const Eigen::VectorXd ev = sorted_eigenvalues(pair.X_op.to_dense());
    const int per = 7 * p.m_blocks;
    CHECK(count_near(ev, -1.0) == per);
    CHECK(count_near(ev, 1.0) == per);
    CHECK(count_near(ev, 0.0) == per + p.cells() * p.m_blocks);

    CHECK(pair.family.cell(0, 1).P == Approx(16.0 * pi));
    CHECK(pair.family.cell(-1, 0).X == -1.0);

    for (const auto& c : pair.family.cells) {
        CHECK((pair.X_op * c.projector - c.projector.scaled(c.X)).max_abs() < 1e-10);
        CHECK((pair.P_op * c.projector - c.projector.scaled(c.P)).max_abs() < 1e-10 * std::max(1.0, std::abs(c.P)));
    }
}

TEST_CASE("Region projectors", "[operators]")
{
    const LatticeParams p = truncation(2, -1, 1, -1, 3);
    const SpectralFamily f = build_family(p);
    const LatticeOperator I = LatticeOperator::identity(f.params);

    std::vector<std::pair<int, int>> all;
    for (const auto& c : f.cells)
        all.push_back({c.n, c.m});
    const RegionProjector full = region_projector(f, all);
    CHECK(full.inside.trace().real() == Approx(9.0 * 3.0));

    const RegionProjector none = region_projector(f, {});
    CHECK(none.inside.max_abs() == 0.0);
    CHECK((none.complement - I).max_abs() == 0.0);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::pair<int, int>> region;
        for (const auto& c : f.cells)
            if (rng() % 2)
                region.push_back({c.n, c.m});
        const RegionProjector r = region_projector(f, region);
        CHECK((r.inside * r.complement).max_abs() < 1e-10);
        CHECK((r.inside + r.complement - I).max_abs() < 1e-15);
        CHECK(r.inside.idempotency_defect() < 1e-10);
    }
    CHECK_THROWS_AS(region_projector(f, {{0, 0}, {0, 0}}), std::domain_error);
    CHECK_THROWS_AS(region_projector(f, {{5, 0}}), std::domain_error);
}

TEST_CASE("Completeness audit", "[operators]")
{
    const BalianLowAudit a3 = balian_low_audit(build_family(truncation(3, 0, 0, 0, 1)));
    CHECK(a3.defect_trace == Approx(1.0).margin(1e-12));
    CHECK(a3.defect_vs_chi < 1e-10);
    CHECK(a3.defect_idempotency < 1e-10);

    const BalianLowAudit a1 = balian_low_audit(build_family(truncation(1, 0, 0, 0, 2)));
    CHECK(a1.defect_trace == Approx(2.0).margin(1e-12));
    CHECK(a1.family_trace + a1.defect_trace == Approx(a1.identity_trace));

    SpectralFamily empty;
    empty.params = truncation(3, 0, 0, 0, 1);
    CHECK_THROWS_AS(balian_low_audit(empty), std::domain_error);
}

TEST_CASE("Remainder dispersion", "[operators]")
{
    for (int N : {1, 2, 3}) {
        LatticeParams p = truncation(N, 0, 0, 0, 1);
        const double L = 2048.0 * p.b();
        const auto chi = remainder_dispersion(p, StateKind::chi, N, {L, 2 * L, 4 * L});
        INFO("N=" << N);
        CHECK(chi[1].var_p / chi[0].var_p == Approx(2.0).margin(0.05));
        CHECK(chi[2].var_p / chi[1].var_p == Approx(2.0).margin(0.05));
        // Slope of var_p against the cutoff is constant for a 1/p^2 density tail.
        const double s1 = (chi[1].var_p - chi[0].var_p) / L, s2 = (chi[2].var_p - chi[1].var_p) / (2 * L);
        CHECK(s2 == Approx(s1).epsilon(0.01));
        for (int K = 1; K <= N; ++K) {
            const auto psi = remainder_dispersion(p, StateKind::psi, K, {L, 2 * L});
            CHECK(std::abs(psi[1].var_p / psi[0].var_p - 1.0) < 0.01);
            CHECK(std::abs(psi[1].var_p - psi[0].var_p) < 2.0 * p.b() * p.b() * std::ldexp(1.0, 2 * K) / (L / p.b()));
        }
    }
    LatticeParams p = truncation(2, 0, 0, 0, 1);
    CHECK_THROWS_AS(remainder_dispersion(p, StateKind::chi, 2, {2.0 * p.b()}), std::domain_error);
    CHECK_THROWS_AS(remainder_dispersion(p, StateKind::chi, 2, {400.0, 300.0}), std::domain_error);
    CHECK_THROWS_AS(remainder_dispersion(p, StateKind::low, 1, {400.0}), std::domain_error);
}

TEST_CASE("Quasi-projector versus exact region projector", "[operators]")
{
    LatticeParams p = truncation(1, -6, 6, -1, 3);
    const GridSpec grid{16.0, 128, 0.0};
    std::vector<double> defects;
    // Rectangles stay inside the torus and its momentum band.
    for (double half : {1.0, 2.0, 3.0}) {
        const PhaseRectangle r{-half, half, -6.0 * half, 6.0 * half};
        const QuasiProjectorReport q = quasi_projector_compare(p, r, grid);
        CHECK(q.exact_defect < 1e-10);
        CHECK(q.exact_cells > 0);
        CHECK(q.quasi_defect > 0.0);
        defects.push_back(q.quasi_defect);
    }
    CHECK(defects[1] < defects[0]);
    CHECK(defects[2] < defects[1]);
    CHECK(quasi_projector_identity_defect(p, grid) < 0.05);

    CHECK_THROWS_AS(quasi_projector_compare(p, {-2, 2, -4, 4}, GridSpec{16.0, 32, 0.0}), std::domain_error);
    CHECK_THROWS_AS(quasi_projector_compare(p, {1, -1, -1, 1}, grid), std::domain_error);
}
