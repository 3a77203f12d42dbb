#pragma once

#include "phaselattice/lattice.hpp"
#include "phaselattice/quadrature.hpp"

#include <functional>
#include <map>
#include <vector>

namespace phaselattice {

/// Operator kernel <x1|A|x2> or <p1|A|p2>.
using KernelFn = std::function<cplx(double, double)>;

/// Support of a momentum-space integrand: [lo, hi] and the scale on which it varies.
struct MomentumSupport {
    double lo = 0.0;
    double hi = 0.0;
    double scale = 0.0;
};

/// Lattice-summed traces against the spectral family of one basis.
///
/// The block coefficient matrix is I - chi chi^T, so every kernel below is a
/// full-block term minus a rank-one remainder term.
class FamilyKernel {
public:
    explicit FamilyKernel(const LatticeParams& basis);

    const LatticeParams& params() const { return p_; }

    /// E_00(x1, x2) for x1, x2 in the fiducial cell.
    cplx cell_kernel(double x1, double x2) const;

    /// Momentum-space kernel of the block-0 projector summed over cells:
    /// e_l(u) = sum_jj' M_jj' s_j(u + l b) s_j'(u), with u measured from P_b.
    double column_kernel(int l, double u) const;
    /// column_kernel with sin^2 replaced by its mean 1/2; valid away from the main lobe.
    double column_envelope(int l, double u) const;
    /// Centre of the main lobe, ((2^N - 1)/2 + shift) b.
    double lobe_centre() const { return centre_; }

    /// sum_b Tr(E_nb A) over all momentum blocks, for coherence offsets |l| <= lmax.
    cplx row_sum(int n, const KernelFn& A, int lmax) const;
    /// sum_n Tr(E_nb A) over all cells.
    cplx column_sum(int b, const KernelFn& A, int lmax, const MomentumSupport& support) const;

    /// Periodised Wigner function of sum_nb E_nb at (p, q).
    double periodised_wigner(double p, double q) const;

private:
    struct RowRule {
        std::vector<double> y;
        std::vector<cplx> w;
    };
    struct ColumnRule {
        std::vector<double> u;
        std::vector<double> w;
    };
    const RowRule& row_rule(int l) const;
    const ColumnRule& column_rule(int l) const;
    void sinc_vector(double u, std::vector<double>& s) const;
    void accumulate_outer(cplx& acc, int l, double lo, double hi, double Pb, const KernelFn& A,
                          const MomentumSupport& support) const;

    LatticeParams p_;
    int d_;
    double centre_;
    double lobe_radius_;
    std::vector<RowRule> rows_;
    std::vector<ColumnRule> columns_;
};

}  // namespace phaselattice
