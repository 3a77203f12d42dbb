#pragma once

#include "phaselattice/evolution.hpp"
#include "phaselattice/operators.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace phaselattice {

enum class PropagatorKind { identity, unitary_free, open_system };

/// Evolution applied between successive projection times.
/// unitary_free and open_system act on position-grid operators of `grid`.
struct Propagator {
    PropagatorKind kind = PropagatorKind::identity;
    GridSpec grid;
    double hbar = 1.0;
    /// Mass and diffusion constant; time is filled per step.
    EvolutionParams env;
};

struct HistorySpec {
    /// Projection times, strictly increasing and nonnegative; the state is given at t = 0.
    std::vector<double> times;
    /// One exclusive, exhaustive projector family per time.
    std::vector<std::vector<Eigen::MatrixXcd>> alternatives;
    Propagator propagator;

    /// Throws std::domain_error on malformed families; tolerance applies to sum and exclusivity.
    void validate(double tol = 1e-10) const;
    int history_count() const;
};

/// D(h, h') over histories h = (alpha_1, ..., alpha_k); history index is mixed radix with time 1 fastest.
struct DecoherenceMatrix {
    Eigen::MatrixXcd entries;
    std::vector<int> alternatives_per_time;

    std::vector<int> history(int index) const;
    double max_offdiagonal() const;
    double max_offdiagonal_real() const;
    double diagonal_sum() const;
    /// Sum of every entry; equals Tr rho for any exhaustive families.
    cplx total_sum() const;
    double hermiticity_defect() const;
    double min_diagonal() const;
    /// max over h != h' of |p(h or h') - p(h) - p(h')| with p(h or h') from the merged entries.
    double additivity_defect() const;
};

/// Largest operator dimension accepted for dense chains.
inline constexpr int max_chain_dimension = 4096;

/// Evaluates Tr(P_k U ... P_1 U rho U^+ P'_1 ... U^+ P'_k) for all history pairs.
/// Throws std::length_error above max_chain_dimension.
DecoherenceMatrix decoherence_functional(const Eigen::MatrixXcd& rho, const HistorySpec& spec);

/// Sums entries over groups; merge[i][alpha] is the coarse alternative of alpha at time i.
DecoherenceMatrix coarse_grain(const DecoherenceMatrix& D, const std::vector<std::vector<int>>& merge);

using CellSet = std::vector<std::pair<int, int>>;
/// Per time, a partition of family cells (n, m) into alternatives.
using CellPartition = std::vector<std::vector<CellSet>>;
/// Position label of cell (X, P) after time t.
using LabelFlow = std::function<double(double X, double P, double t)>;

LabelFlow identity_flow();
/// X + t P / m.
LabelFlow shear_flow(double mass);

/// Bins every family cell by flow(X_n, P_m, t) against sorted edges: edges.size() + 1 alternatives per time.
CellPartition flow_partition(const SpectralFamily& family, const LabelFlow& flow, const std::vector<double>& times,
                             const std::vector<std::vector<double>>& edges);

/// Dense projector families over the truncated Low basis. The last alternative of each time absorbs
/// the remainder projector so the family is exhaustive. Throws std::domain_error when cells are not in
/// the family, repeat, or fail to cover it.
std::vector<std::vector<Eigen::MatrixXcd>> partition_projectors(const SpectralFamily& family, const CellPartition& part);

/// Histories of the commuting family; the label flow is already folded into the partitions, so the chain
/// is evaluated with identity propagation.
DecoherenceMatrix commuting_histories(const Eigen::MatrixXcd& rho, const CommutingPair& pair, const CellPartition& part);

/// |c><c| over the truncated basis in flat_index order.
Eigen::MatrixXcd lattice_density(const LatticeParams& p, const CoeffState& s);

/// Diagonal mask of grid points with lo <= x < hi.
Eigen::MatrixXcd position_mask(const GridSpec& grid, double lo, double hi);
/// Masks for (-inf, e_0), [e_0, e_1), ..., [e_last, inf).
std::vector<Eigen::MatrixXcd> interval_family(const GridSpec& grid, const std::vector<double>& edges);

/// Equal-weight superposition of two minimum-uncertainty packets at -q0 and +q0 moving toward each other.
Eigen::MatrixXcd cat_density(const GridSpec& grid, double hbar, double q0, double p0, double sigma);

struct DecayPoint {
    double diffusion = 0.0;
    double max_offdiagonal = 0.0;
    double max_offdiagonal_real = 0.0;
    double diagonal_sum_defect = 0.0;
};

struct DecayReport {
    std::vector<DecayPoint> points;
    /// Strictly decreasing max |D(h, h')| along the given diffusion constants.
    bool monotone = false;
};

/// Ordinary position-interval histories under open-system evolution, one chain per diffusion constant.
DecayReport approximate_position_histories(const Eigen::MatrixXcd& rho, const GridSpec& grid, double hbar, double mass,
                                           const std::vector<double>& times,
                                           const std::vector<std::vector<double>>& edges,
                                           const std::vector<double>& diffusions);

/// Columns: h, h_prime, re, im.
std::string decoherence_csv(const DecoherenceMatrix& D);
std::string decoherence_json(const DecoherenceMatrix& D);

}  // namespace phaselattice
