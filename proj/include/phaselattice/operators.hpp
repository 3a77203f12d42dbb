#pragma once

#include "phaselattice/lattice.hpp"

#include <Eigen/Dense>

#include <map>
#include <set>
#include <utility>
#include <vector>

namespace phaselattice {

/// Key of a 2^N x 2^N block: position cell n and global momentum block index.
struct BlockKey {
    int n = 0;
    int block = 0;
    auto operator<=>(const BlockKey&) const = default;
};

/// Operator over the truncated Low basis, stored as dense blocks on (n, momentum block).
///
/// Missing blocks are zero. Every operator built here is block diagonal; to_dense()
/// gives the full matrix in flat_index order.
class LatticeOperator {
public:
    LatticeOperator() = default;
    explicit LatticeOperator(LatticeParams p) : params_(p) {}

    const LatticeParams& params() const { return params_; }
    const std::map<BlockKey, Eigen::MatrixXcd>& blocks() const { return blocks_; }

    void set_block(BlockKey key, Eigen::MatrixXcd m);
    /// Zero block of the right size when absent.
    Eigen::MatrixXcd block(BlockKey key) const;
    bool has_block(BlockKey key) const { return blocks_.count(key) != 0; }

    static LatticeOperator identity(const LatticeParams& p);

    LatticeOperator operator+(const LatticeOperator& o) const;
    LatticeOperator operator-(const LatticeOperator& o) const;
    LatticeOperator operator*(const LatticeOperator& o) const;
    LatticeOperator scaled(cplx s) const;
    LatticeOperator adjoint() const;

    cplx trace() const;
    double max_abs() const;
    double hermiticity_defect() const;
    /// max |A^2 - A|.
    double idempotency_defect() const;

    Eigen::MatrixXcd to_dense() const;

private:
    void check_compatible(const LatticeOperator& o) const;
    void check_key(BlockKey key) const;

    LatticeParams params_;
    std::map<BlockKey, Eigen::MatrixXcd> blocks_;
};

/// Coefficient matrix of E on one block: sum over K, m of psi^(K) outer products. Entries are dyadic.
Eigen::MatrixXd projector_block(int N);

/// Projector E onto the psi states of cell (0, block 0).
LatticeOperator build_projector(const LatticeParams& p);

/// E_nm: moves every block by n cells and m momentum blocks.
LatticeOperator shift_projector(const LatticeOperator& E, int n, int m);

/// Half-step centering offset 2^(N-1) - 1/2 in units of b.
double centering_offset(int N);

/// E': same coefficients, basis momentum offset lowered by the mean momentum of E.
LatticeOperator center_momentum(const LatticeOperator& E);

/// Moments of A / Tr A (A Hermitian, positive) via its block eigendecomposition.
MomentReport operator_moments(const LatticeOperator& A, double cutoff);

MomentReport projector_moments(const LatticeOperator& E, Method method, double rel_tol = 1e-2);

struct FamilyCell {
    int n = 0;
    int m = 0;
    double X = 0.0;
    double P = 0.0;
    LatticeOperator projector;
};

struct SpectralFamily {
    /// Basis in which the cell projectors are expressed (already centered when centered = true).
    LatticeParams params;
    bool centered = true;
    std::vector<FamilyCell> cells;

    const FamilyCell& cell(int n, int m) const;
    /// Max |E_a E_b - delta_ab E_a| over all pairs.
    double exclusivity_defect() const;
};

/// One cell per (n, momentum block) in the truncation. P_m = m 2^N b, X_n = n a.
SpectralFamily build_family(const LatticeParams& p, bool centered = true);

struct CommutingPair {
    LatticeOperator X_op;
    LatticeOperator P_op;
    SpectralFamily family;
};

CommutingPair build_commuting_pair(const LatticeParams& p);

/// Max |A B - B A| entry.
double commutator_norm(const LatticeOperator& A, const LatticeOperator& B);

struct RegionProjector {
    LatticeOperator inside;
    LatticeOperator complement;
};

RegionProjector region_projector(const SpectralFamily& family, const std::vector<std::pair<int, int>>& region);

struct BalianLowAudit {
    int blocks = 0;
    double defect_trace = 0.0;
    double family_trace = 0.0;
    double identity_trace = 0.0;
    /// max |defect - sum |chi><chi||.
    double defect_vs_chi = 0.0;
    double defect_idempotency = 0.0;
    double exclusivity_defect = 0.0;
};

BalianLowAudit balian_low_audit(const SpectralFamily& family);

struct DispersionPoint {
    double cutoff = 0.0;
    double mean_p = 0.0;
    double var_p = 0.0;
};

/// Regularised (Delta p)^2 over |p| < cutoff for psi^(K)_00 or chi^(K)_00.
std::vector<DispersionPoint> remainder_dispersion(const LatticeParams& p, StateKind kind, int K,
                                                  const std::vector<double>& cutoffs);

struct PhaseRectangle {
    double q_lo = 0.0;
    double q_hi = 0.0;
    double p_lo = 0.0;
    double p_hi = 0.0;
    double area() const { return (q_hi - q_lo) * (p_hi - p_lo); }
};

struct QuasiProjectorReport {
    int coherent_states = 0;
    double sigma_q = 0.0;
    double quasi_trace = 0.0;
    /// ||P^2 - P||_F / ||P||_F for the coherent-state quasi-projector.
    double quasi_defect = 0.0;
    /// max |E^2 - E| for the lattice projector of the cells inside the rectangle.
    double exact_defect = 0.0;
    double exact_trace = 0.0;
    int exact_cells = 0;
};

/// Coherent-state quasi-projector on a periodic grid versus the exact lattice region projector.
QuasiProjectorReport quasi_projector_compare(const LatticeParams& p, const PhaseRectangle& region, const GridSpec& grid);

/// ||P - 1||_F / ||1||_F for the quasi-projector over the whole torus.
double quasi_projector_identity_defect(const LatticeParams& p, const GridSpec& grid);

}  // namespace phaselattice
