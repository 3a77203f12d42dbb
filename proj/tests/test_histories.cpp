#include "oracles.hpp"
#include "phaselattice/gaussian.hpp"
#include "phaselattice/histories.hpp"

#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <random>

using namespace phaselattice;
using Catch::Approx;

namespace {

LatticeParams small_lattice()
{
    LatticeParams p;
    p.N = 2;
    p.n_min = -2;
    p.n_max = 2;
    p.first_block = -1;
    p.m_blocks = 3;
    return p;
}

Eigen::MatrixXcd random_pure(const LatticeParams& q, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    CoeffState s;
    for (int n = q.n_min; n <= q.n_max; ++n)
        for (int m = q.m_lo(); m < q.m_hi(); ++m) {
            const double re = g(rng);
            s.coeffs[{n, m}] = cplx(re, g(rng));
        }
    return lattice_density(q, s);
}

Eigen::MatrixXcd random_mixed(int dim, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXcd A(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            const double re = g(rng);
            A(i, j) = cplx(re, g(rng));
        }
    Eigen::MatrixXcd rho = A * A.adjoint();
    return rho / rho.trace();
}

void check_typed_invariants(const DecoherenceMatrix& D)
{
    CHECK(D.hermiticity_defect() < 1e-12);
    CHECK(D.min_diagonal() > -1e-12);
    CHECK(std::abs(D.total_sum() - 1.0) < 1e-10);
    for (Eigen::Index i = 0; i < D.entries.rows(); ++i)
        CHECK(std::abs(D.entries(i, i).imag()) < 1e-12);
}

HistorySpec cat_spec(const GridSpec& grid, PropagatorKind kind, double diffusion = 0.0)
{
    HistorySpec s;
    s.times = {1.0, 4.0};
    s.alternatives = {interval_family(grid, {0.0}), interval_family(grid, {-1.0, 1.0})};
    s.propagator.kind = kind;
    s.propagator.grid = grid;
    s.propagator.env.mass = 1.0;
    s.propagator.env.diffusion = diffusion;
    return s;
}

const GridSpec cat_grid{40.0, 256, 0.0};

}  // namespace

TEST_CASE("Single-time histories are diagonal", "[histories]")
{
    const GridSpec grid{20.0, 64, 0.0};
    const Eigen::MatrixXcd rho = random_mixed(grid.points, 11);
    HistorySpec s;
    s.times = {0.0};
    s.alternatives = {interval_family(grid, {-3.0, 0.0, 2.5})};
    const DecoherenceMatrix D = decoherence_functional(rho, s);
    CHECK(D.entries.rows() == 4);
    CHECK(D.max_offdiagonal() < 1e-12);
    CHECK(D.diagonal_sum() == Approx(1.0).margin(1e-8));
    check_typed_invariants(D);

    const CommutingPair pair = build_commuting_pair(small_lattice());
    const auto part = flow_partition(pair.family, identity_flow(), {0.0}, {{-1.0, 1.0}});
    const DecoherenceMatrix L = commuting_histories(random_pure(pair.family.params, 3), pair, part);
    CHECK(L.max_offdiagonal() < 1e-12);
    CHECK(L.diagonal_sum() == Approx(1.0).margin(1e-8));
}

TEST_CASE("Free-particle position histories of a cat state interfere", "[histories]")
{
    const Eigen::MatrixXcd rho = cat_density(cat_grid, 1.0, 4.0, 1.0, 1.0);
    CHECK(rho.trace().real() == Approx(1.0));
    const DecoherenceMatrix D = decoherence_functional(rho, cat_spec(cat_grid, PropagatorKind::unitary_free));
    CHECK(D.entries.rows() == 6);
    check_typed_invariants(D);
    CHECK(D.max_offdiagonal_real() > 0.01);
    // The diagonal sum telescopes to Tr rho whether or not the histories decohere.
    CHECK(D.diagonal_sum() == Approx(1.0).margin(1e-12));
    CHECK(D.additivity_defect() > 0.01);
}

TEST_CASE("Commuting family histories under identity and shear flow", "[histories]")
{
    const CommutingPair pair = build_commuting_pair(small_lattice());
    const Eigen::MatrixXcd rho = random_pure(pair.family.params, 7);

    SECTION("identity flow, sign of X")
    {
        const std::vector<double> times{0.0, 1.0};
        const auto part = flow_partition(pair.family, identity_flow(), times, {{0.0}, {0.0}});
        const DecoherenceMatrix D = commuting_histories(rho, pair, part);
        CHECK(D.entries.rows() == 4);
        CHECK(D.max_offdiagonal() < 1e-12);
        CHECK(std::abs(D.diagonal_sum() - 1.0) < 1e-12);
        // Same partition twice: mixed histories have zero weight.
        CHECK(std::abs(D.entries(1, 1)) < 1e-12);
        CHECK(std::abs(D.entries(2, 2)) < 1e-12);
        check_typed_invariants(D);
    }
    SECTION("shear flow, two and three times")
    {
        for (const std::vector<double>& times : {std::vector<double>{0.0, 0.5}, std::vector<double>{0.0, 0.5, 1.0}}) {
            std::vector<std::vector<double>> edges{{0.0}, {-1.0, 1.0}, {0.5}};
            edges.resize(times.size());
            const auto part = flow_partition(pair.family, shear_flow(1.0), times, edges);
            const DecoherenceMatrix D = commuting_histories(rho, pair, part);
            INFO("k=" << times.size());
            CHECK(D.max_offdiagonal() < 1e-12);
            CHECK(std::abs(D.diagonal_sum() - 1.0) < 1e-12);
            CHECK(D.additivity_defect() < 1e-12);
            check_typed_invariants(D);
        }
    }
}

TEST_CASE("Commuting histories stay diagonal for random chains", "[histories][property]")
{
    const CommutingPair pair = build_commuting_pair(small_lattice());
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int trial = 0; trial < 12; ++trial) {
        const int k = 1 + trial % 4;
        std::vector<double> times;
        std::vector<std::vector<double>> edges;
        for (int i = 0; i < k; ++i) {
            times.push_back(0.25 * i);
            std::vector<double> e{u(rng)};
            if (k < 4)
                e.push_back(u(rng));
            std::sort(e.begin(), e.end());
            edges.push_back(e);
        }
        const LabelFlow f = trial % 2 ? shear_flow(0.5 + trial) : identity_flow();
        const DecoherenceMatrix D =
            commuting_histories(random_pure(pair.family.params, 100 + trial), pair, flow_partition(pair.family, f, times, edges));
        INFO("trial=" << trial << " k=" << k);
        CHECK(D.max_offdiagonal() < 1e-12);
        CHECK(std::abs(D.diagonal_sum() - 1.0) < 1e-12);
        CHECK(D.additivity_defect() < 1e-12);
        check_typed_invariants(D);
    }
}

TEST_CASE("Vanishing real parts give the probability sum rules", "[histories][property]")
{
    const CommutingPair pair = build_commuting_pair(small_lattice());
    const Eigen::MatrixXcd rho = random_pure(pair.family.params, 5);
    const std::vector<double> times{0.0, 1.0};
    const auto fine = flow_partition(pair.family, shear_flow(2.0), times, {{-1.0, 0.0, 1.0}, {0.0}});
    const DecoherenceMatrix D = commuting_histories(rho, pair, fine);
    REQUIRE(D.max_offdiagonal_real() < 1e-12);
    // Merge the first-time alternatives pairwise and compare with a direct coarse evaluation.
    const DecoherenceMatrix C = coarse_grain(D, {{0, 0, 1, 1}, {0, 1}});
    const auto coarse = flow_partition(pair.family, shear_flow(2.0), times, {{0.0}, {0.0}});
    const DecoherenceMatrix direct = commuting_histories(rho, pair, coarse);
    CHECK((C.entries - direct.entries).cwiseAbs().maxCoeff() < 1e-12);
    for (int c = 0; c < 4; ++c) {
        const std::vector<int> h = C.history(c);
        double fine_sum = 0.0;
        for (Eigen::Index i = 0; i < D.entries.rows(); ++i) {
            const std::vector<int> g = D.history(static_cast<int>(i));
            if (g[0] / 2 == h[0] && g[1] == h[1])
                fine_sum += D.entries(i, i).real();
        }
        CHECK(C.entries(c, c).real() == Approx(fine_sum).margin(1e-8));
    }
}

TEST_CASE("Coarse graining matches direct evaluation for any chain", "[histories][property]")
{
    const Eigen::MatrixXcd rho = cat_density(cat_grid, 1.0, 4.0, 1.0, 1.0);
    HistorySpec fine = cat_spec(cat_grid, PropagatorKind::unitary_free);
    fine.alternatives[1] = interval_family(cat_grid, {-1.0, 0.0, 1.0});
    const DecoherenceMatrix F = decoherence_functional(rho, fine);
    const DecoherenceMatrix C = coarse_grain(F, {{0, 1}, {0, 1, 1, 2}});
    const DecoherenceMatrix direct = decoherence_functional(rho, cat_spec(cat_grid, PropagatorKind::unitary_free));
    CHECK((C.entries - direct.entries).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(C.history(5) == std::vector<int>{1, 2});
    CHECK_THROWS_AS(coarse_grain(F, {{0, 1}}), std::domain_error);
    CHECK_THROWS_AS(coarse_grain(F, {{0, 1}, {0, 1}}), std::domain_error);
    CHECK_THROWS_AS(coarse_grain(F, {{0, -1}, {0, 0, 0, 0}}), std::domain_error);
}

TEST_CASE("Partitions must come from the family", "[histories]")
{
    const CommutingPair pair = build_commuting_pair(small_lattice());
    const Eigen::MatrixXcd rho = random_pure(pair.family.params, 1);
    CellPartition part = flow_partition(pair.family, identity_flow(), {0.0}, {{0.0}});
    CellPartition missing = part;
    missing[0][0].pop_back();
    CHECK_THROWS_AS(commuting_histories(rho, pair, missing), std::domain_error);
    CellPartition repeated = part;
    repeated[0][1].push_back(repeated[0][0].front());
    CHECK_THROWS_AS(commuting_histories(rho, pair, repeated), std::domain_error);
    CellPartition foreign = part;
    foreign[0][0].push_back({40, 0});
    CHECK_THROWS_AS(commuting_histories(rho, pair, foreign), std::domain_error);
    CHECK_THROWS_AS(commuting_histories(rho, pair, CellPartition{{}}), std::domain_error);
    CHECK_THROWS_AS(flow_partition(pair.family, identity_flow(), {0.0, 1.0}, {{0.0}}), std::domain_error);
    CHECK_THROWS_AS(flow_partition(pair.family, identity_flow(), {0.0}, {{1.0, 0.0}}), std::domain_error);
    CHECK_THROWS_AS(shear_flow(0.0), std::domain_error);
}

TEST_CASE("History specifications are validated", "[histories]")
{
    const GridSpec grid{10.0, 32, 0.0};
    const Eigen::MatrixXcd rho = random_mixed(grid.points, 2);
    HistorySpec s;
    s.times = {0.0, 1.0};
    s.alternatives = {interval_family(grid, {0.0}), interval_family(grid, {0.0})};
    CHECK_NOTHROW(decoherence_functional(rho, s));
    CHECK(s.history_count() == 4);

    HistorySpec t = s;
    t.times = {1.0, 1.0};
    CHECK_THROWS_AS(decoherence_functional(rho, t), std::domain_error);
    t.times = {-1.0, 1.0};
    CHECK_THROWS_AS(decoherence_functional(rho, t), std::domain_error);
    t = s;
    t.alternatives[1].pop_back();
    CHECK_THROWS_AS(decoherence_functional(rho, t), std::domain_error);
    t = s;
    t.alternatives.pop_back();
    CHECK_THROWS_AS(decoherence_functional(rho, t), std::domain_error);
    t = s;
    t.alternatives[0][0](0, 1) = 0.5;
    CHECK_THROWS_AS(decoherence_functional(rho, t), std::domain_error);
    t = s;
    t.propagator.kind = PropagatorKind::unitary_free;
    t.propagator.grid = GridSpec{10.0, 64, 0.0};
    CHECK_THROWS_AS(decoherence_functional(rho, t), std::domain_error);
    CHECK_THROWS_AS(decoherence_functional(random_mixed(16, 1), s), std::domain_error);
    CHECK_THROWS_AS(decoherence_functional(Eigen::MatrixXcd::Zero(max_chain_dimension + 1, 1), s), std::length_error);
}

TEST_CASE("Position-diagonal states decohere trivially", "[histories]")
{
    const GridSpec grid{10.0, 32, 0.0};
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(grid.points, grid.points);
    for (int j = 0; j < grid.points; ++j)
        rho(j, j) = 1.0 + 0.1 * j;
    rho /= rho.trace();
    HistorySpec s;
    s.times = {0.0, 2.0};
    s.alternatives = {interval_family(grid, {-2.0, 1.0}), interval_family(grid, {0.0})};
    const DecoherenceMatrix D = decoherence_functional(rho, s);
    CHECK(D.max_offdiagonal() == 0.0);
    CHECK(D.diagonal_sum() == Approx(1.0).margin(1e-12));
}

TEST_CASE("Open-system chain without diffusion reproduces unitary evolution", "[histories]")
{
    const Eigen::MatrixXcd rho = cat_density(cat_grid, 1.0, 4.0, 1.0, 1.0);
    const DecoherenceMatrix U = decoherence_functional(rho, cat_spec(cat_grid, PropagatorKind::unitary_free));
    const DecoherenceMatrix O = decoherence_functional(rho, cat_spec(cat_grid, PropagatorKind::open_system, 0.0));
    CHECK((U.entries - O.entries).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Open-system chain spreads a packet like the closed-form moments", "[histories]")
{
    const auto g = GaussianState::minimum_uncertainty(-2.0, 1.0, 1.0, 1.0);
    const Eigen::VectorXcd v = wave_vector(g, cat_grid, 1.0);
    const Eigen::MatrixXcd rho = v * v.adjoint() / v.squaredNorm();
    const std::vector<double> edges{-1.0, 0.0, 2.0};
    HistorySpec s;
    s.times = {0.0, 3.0};
    s.alternatives = {interval_family(cat_grid, {}), interval_family(cat_grid, edges)};
    s.propagator.kind = PropagatorKind::open_system;
    s.propagator.grid = cat_grid;
    s.propagator.env.mass = 1.0;
    s.propagator.env.diffusion = 0.05;
    const DecoherenceMatrix D = decoherence_functional(rho, s);
    EvolutionParams e = s.propagator.env;
    e.time = 3.0;
    const MomentVector m = evolve_moments(g.moments(), e);
    // A mask starts at the first grid point at or above its edge; its cell begins half a spacing earlier.
    std::vector<double> lo{-1e9}, hi;
    for (double x : edges) {
        const double first = std::ceil((x - cat_grid.x(0)) / cat_grid.dx() - 1e-9);
        const double cut = cat_grid.x(0) + (first - 0.5) * cat_grid.dx();
        hi.push_back(cut);
        lo.push_back(cut);
    }
    hi.push_back(1e9);
    for (int k = 0; k < 4; ++k) {
        INFO("interval " << k);
        CHECK(D.entries(k, k).real() ==
              Approx(oracle::normal_interval(m.mean_x, std::sqrt(m.var_x), lo[k], hi[k])).margin(2e-3));
    }
    CHECK(D.diagonal_sum() == Approx(1.0).margin(1e-12));
}

TEST_CASE("Diffusion suppresses interference between position histories", "[histories]")
{
    const Eigen::MatrixXcd rho = cat_density(cat_grid, 1.0, 4.0, 1.0, 1.0);
    const DecayReport r =
        approximate_position_histories(rho, cat_grid, 1.0, 1.0, {1.0, 4.0}, {{0.0}, {-1.0, 1.0}}, {0.0, 1e-3, 1e-1});
    REQUIRE(r.points.size() == 3);
    CHECK(r.monotone);
    CHECK(r.points[1].max_offdiagonal < r.points[0].max_offdiagonal);
    CHECK(r.points[2].max_offdiagonal < r.points[1].max_offdiagonal);
    CHECK(r.points[0].max_offdiagonal_real > 0.01);
    for (const auto& pt : r.points)
        CHECK(pt.diagonal_sum_defect < 1e-10);
    CHECK_THROWS_AS(approximate_position_histories(rho, cat_grid, 1.0, 1.0, {1.0}, {{0.0}, {0.0}}, {0.0}),
                    std::domain_error);
    CHECK_THROWS_AS(approximate_position_histories(rho, cat_grid, 1.0, 1.0, {1.0}, {{0.0}}, {}), std::domain_error);
}

TEST_CASE("Decoherence matrix export", "[histories]")
{
    const CommutingPair pair = build_commuting_pair(small_lattice());
    const auto part = flow_partition(pair.family, identity_flow(), {0.0, 1.0}, {{0.0}, {0.0}});
    const DecoherenceMatrix D = commuting_histories(random_pure(pair.family.params, 9), pair, part);
    const std::string csv = decoherence_csv(D);
    CHECK(csv.rfind("h,h_prime,re,im\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 16);
    const auto j = nlohmann::json::parse(decoherence_json(D));
    CHECK(j["histories"] == 4);
    CHECK(j["alternatives_per_time"] == nlohmann::json::array({2, 2}));
    CHECK(j["max_offdiagonal"].get<double>() < 1e-12);
    CHECK(j["diagonal_sum_defect"].get<double>() < 1e-12);
    CHECK(j.contains("additivity_defect"));
}
