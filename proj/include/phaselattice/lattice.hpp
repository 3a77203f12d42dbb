#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

namespace phaselattice {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

/// Lattice constant, Planck constant, halving depth and truncation.
///
/// Low momentum indices m are global: the retained range is
/// [first_block * 2^N, (first_block + m_blocks) * 2^N). A real offset
/// momentum_shift (units of b) moves every Low state to momentum (m + shift) b.
struct LatticeParams {
    double a = 1.0;
    double hbar = 1.0;
    int N = 1;
    int n_min = 0;
    int n_max = 0;
    int m_blocks = 1;
    int first_block = 0;
    double momentum_shift = 0.0;
    /// 0 selects the default cutoff; see effective_cutoff().
    double momentum_cutoff = 0.0;

    double b() const { return 2.0 * pi * hbar / a; }
    int block_size() const { return 1 << N; }
    int cells() const { return n_max - n_min + 1; }
    int momentum_count() const { return m_blocks * block_size(); }
    int m_lo() const { return first_block * block_size(); }
    int m_hi() const { return m_lo() + momentum_count(); }
    int dim() const { return cells() * momentum_count(); }
    double min_cutoff() const { return 4.0 * pi * hbar * block_size() * m_blocks / a; }
    double effective_cutoff() const;

    /// Throws std::domain_error when an invariant is broken.
    void validate() const;
    bool same_basis(const LatticeParams& o) const;
};

struct LowIndex {
    int n = 0;
    int m = 0;
    auto operator<=>(const LowIndex&) const = default;
};

bool in_truncation(const LatticeParams& p, LowIndex idx);
/// Position of idx in the flattened truncated basis (row-major in n).
int flat_index(const LatticeParams& p, LowIndex idx);

enum class Rep { position, momentum };
enum class StateKind { low, psi, chi, custom };

struct StateLabel {
    StateKind kind = StateKind::custom;
    int K = 0;
    int n = 0;
    int m = 0;
};

struct CoeffState {
    std::map<LowIndex, cplx> coeffs;
    StateLabel label;
    double norm2() const;
};

/// Uniform position grid x_j = origin - L/2 + j L/D, j = 0..D-1.
struct GridSpec {
    double box_length = 1.0;
    int points = 64;
    double origin = 0.0;

    double dx() const { return box_length / points; }
    double x(int j) const { return origin - 0.5 * box_length + j * dx(); }
    void validate() const;
    /// Additional checks tying the grid to a lattice truncation.
    void validate_for(const LatticeParams& p) const;
};

struct MomentVector {
    double mean_x = 0.0;
    double mean_p = 0.0;
    double var_x = 0.0;
    double var_p = 0.0;
    double cov_xp = 0.0;

    /// var_x var_p - cov^2 - hbar^2/4; negative values break the uncertainty bound.
    double uncertainty_margin(double hbar) const { return var_x * var_p - cov_xp * cov_xp - 0.25 * hbar * hbar; }
};

enum class Method { closed_form, quadrature };

cplx low_state(const LatticeParams& p, LowIndex idx, Rep rep, double point);

std::vector<double> halving_coefficients(int K, int N);

CoeffState build_state(const LatticeParams& p, StateKind kind, int K, int n, int m);
CoeffState low_basis_state(const LatticeParams& p, int n, int m);

/// Wave function of a coefficient state at a point.
cplx evaluate(const LatticeParams& p, const CoeffState& s, Rep rep, double point);

/// Closed form of chi^(K)_{nm}(x) as a ratio of exponentials times a Low state.
cplx chi_closed_form(const LatticeParams& p, int K, int n, int m, double x);

/// Samples a state on a grid; at window edges the mean of the one-sided limits is used.
std::vector<cplx> sample_position(const LatticeParams& p, const CoeffState& s, const GridSpec& g);

enum class InnerMethod { coefficient, grid };
cplx inner_product(const LatticeParams& p, const CoeffState& s1, const CoeffState& s2, InnerMethod method,
                   const GridSpec* grid = nullptr);

struct MomentReport {
    MomentVector moments;
    /// Estimated momentum-tail contribution missing from var_p (0 for closed forms).
    double tail_estimate = 0.0;
    double cutoff = 0.0;
};

/// Moments of the fiducial state psi^(K)_{00}.
MomentReport fiducial_moments(const LatticeParams& p, int K, Method method, double rel_tol = 1e-2);

/// Moments of an arbitrary coefficient state (cutoff-regularised momentum part).
MomentReport state_moments(const LatticeParams& p, const CoeffState& s, double cutoff);

struct CompletenessResidual {
    double residual_with_chi = 0.0;
    double defect_trace = 0.0;
    int defect_rank = 0;
    double defect_idempotency = 0.0;
    double defect_vs_chi = 0.0;
};

CompletenessResidual completeness_decomposition(const LatticeParams& p);

/// Regularised momentum moments of a coefficient state over |p| < cutoff.
struct RegularisedMoments {
    double m0 = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
};
RegularisedMoments momentum_moments(const LatticeParams& p, const CoeffState& s, double lo, double hi);

/// Raw cell integrals of |psi|^2, x|psi|^2, x^2|psi|^2 and Re <psi|x p|psi>.
struct PositionMoments {
    double m0 = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    double xp = 0.0;
};
PositionMoments position_moments(const LatticeParams& p, const CoeffState& s);

std::string to_string(StateKind k);

}  // namespace phaselattice
