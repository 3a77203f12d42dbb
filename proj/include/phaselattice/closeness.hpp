#pragma once

#include "phaselattice/cell_kernel.hpp"
#include "phaselattice/gaussian.hpp"
#include "phaselattice/operators.hpp"
#include "phaselattice/wigner.hpp"

#include <string>
#include <vector>

namespace phaselattice {

struct CompletenessResult {
    double value = 0.0;
    double expected = 0.0;
    /// Probability mass of the state outside the truncated phase space.
    double spill = 0.0;
    /// sigma_x sigma_p / (2 pi hbar) in units of 2^N.
    double breadth = 0.0;
    bool slow_variation = true;
    std::string flag;
};

/// Mass outside the truncation; throws when it exceeds max_spill.
double truncation_spill(const GaussianState& rho, const LatticeParams& p, double max_spill = 1e-6);

/// Sum over all retained cells of Tr(E'_nm rho).
CompletenessResult completeness_sum(const GaussianState& rho, const LatticeParams& p);
/// Same sum from a sampled Wigner function by phase-space pairing with the periodised family.
double completeness_sum(const WignerGrid& W, const LatticeParams& p);

/// Tr(E'_nm rho) by direct cell quadrature.
double cell_probability(const GaussianState& rho, int n, int m, const LatticeParams& p);

/// Lattice sums of one Gaussian state against the centered family.
class GaussianTraces {
public:
    GaussianTraces(const GaussianState& rho, const LatticeParams& p);

    /// sum_b Tr(E'_nb A) and sum_n Tr(E'_nb A) for A = rho times a polynomial weight.
    cplx row(int n, const KernelFn& A) const;
    cplx column(int b, const KernelFn& A) const;
    cplx row(int n) const;
    cplx column(int b) const;

    int n_lo() const { return n_lo_; }
    int n_hi() const { return n_hi_; }
    int b_lo() const { return b_lo_; }
    int b_hi() const { return b_hi_; }
    const FamilyKernel& kernel() const { return kernel_; }
    const GaussianState& state() const { return rho_; }

private:
    GaussianState rho_;
    LatticeParams p_;
    FamilyKernel kernel_;
    int row_l_ = 0;
    int col_l_ = 0;
    int n_lo_ = 0, n_hi_ = 0, b_lo_ = 0, b_hi_ = 0;
    MomentumSupport support_;
};

struct ClosenessReport {
    int N = 0;
    double completeness_sum = 0.0;
    double expected_completeness = 0.0;
    double dist_X = 0.0;
    double dist_P = 0.0;
    double product_over_hbar = 0.0;
    /// Product from the retained (range-of-family) terms only.
    double retained_product_over_hbar = 0.0;
    double C_predicted = 0.0;
    double retained_X = 0.0;
    double retained_P = 0.0;
    double d_x_squared = 0.0;
    double d_p_squared = 0.0;
    /// |Tr(X[x, rho])| and |Tr(P[p, rho])|; both are purely imaginary.
    double commutator_term_x = 0.0;
    double commutator_term = 0.0;
    std::vector<std::string> warnings;
};

/// C = 2^(N/2) pi / (3 sqrt 2).
double closeness_constant(int N);

ClosenessReport distance_norms(const GaussianState& rho, const LatticeParams& p);

/// <(x - X)^2> <(p - P)^2> / hbar^2 for a psi^(K) eigenstate of the pair's family.
double per_state_closeness(const CommutingPair& pair, const CoeffState& state);

struct ProbabilityThresholds {
    double tolerance = 0.02;
    double min_sigma_cells = 10.0;
    double min_interval_ratio = 100.0;
};

struct ProbabilityReport {
    double p_X = 0.0;
    double ref_X = 0.0;
    double err_X = 0.0;
    double p_P = 0.0;
    double ref_P = 0.0;
    double err_P = 0.0;
    bool cond_i = false;
    bool cond_ii = false;
    bool cond_iii = false;
    bool agree = false;
};

/// Delta_X = [n1 a, n2 a] (cells n1..n2), Delta_P = [P_b1, P_b2] (blocks b1..b2).
ProbabilityReport probability_intervals(const GaussianState& rho, int n1, int n2, int b1, int b2,
                                        const LatticeParams& p, const ProbabilityThresholds& th = {});

std::string closeness_json(const ClosenessReport& r);
std::string closeness_csv_header();
std::string closeness_csv_row(const std::string& state, const ClosenessReport& r);

}  // namespace phaselattice
