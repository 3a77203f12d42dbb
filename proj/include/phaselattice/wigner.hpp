#pragma once

#include "phaselattice/gaussian.hpp"
#include "phaselattice/lattice.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace phaselattice {

/// Values on a uniform (p, q) lattice, row-major with one row per momentum value.
template <class T>
struct PhaseGrid {
    int np = 0;
    int nq = 0;
    double dp = 0.0;
    double dq = 0.0;
    /// Coordinates of the (0, 0) sample.
    double p_origin = 0.0;
    double q_origin = 0.0;
    double hbar = 1.0;
    std::vector<T> values;

    double p(int i) const { return p_origin + i * dp; }
    double q(int j) const { return q_origin + j * dq; }
    T& at(int i, int j) { return values[static_cast<std::size_t>(i) * nq + j]; }
    const T& at(int i, int j) const { return values[static_cast<std::size_t>(i) * nq + j]; }
    bool same_layout(const PhaseGrid& o) const;
};

using WignerGrid = PhaseGrid<double>;
using ComplexWigner = PhaseGrid<cplx>;

/// Layout used by the discrete transform of a D-point position grid:
/// 2D position rows at spacing dx/2 and D momenta p_k = (k - D/2) pi hbar / L.
WignerGrid wigner_layout(const GridSpec& grid, double hbar);

/// Position grid that the layout was built from.
GridSpec position_grid(const WignerGrid& w);

double normalization(const WignerGrid& w);
/// 2 pi hbar sum W^2 dp dq.
double purity(const WignerGrid& w);

/// Discrete Wigner transform of a position-grid operator with entries <x_j|A|x_k> dx.
WignerGrid wigner_transform(const Eigen::MatrixXcd& rho, const GridSpec& grid, double hbar);
ComplexWigner wigner_transform_complex(const Eigen::MatrixXcd& op, const GridSpec& grid, double hbar);

Eigen::MatrixXcd inverse_wigner(const WignerGrid& w);
Eigen::MatrixXcd inverse_wigner(const ComplexWigner& w);

/// 2 pi hbar sum W_A W_B dp dq; equals Tr(AB) for operators transformed on the same grid.
double trace_pair(const WignerGrid& A, const WignerGrid& B);

/// Samples a Gaussian Wigner function on the given layout.
WignerGrid sample_wigner(const GaussianState& g, const WignerGrid& layout);

struct WignerMoments {
    double norm = 0.0;
    MomentVector moments;
};
WignerMoments wigner_moments(const WignerGrid& w);

/// Spectral position and momentum operators on the periodic grid.
Eigen::MatrixXcd position_operator(const GridSpec& grid);
Eigen::MatrixXcd momentum_operator(const GridSpec& grid, double hbar);

struct AnticommutatorReport {
    /// max |W[(x rho + rho x)/2] - q W|; exact up to rounding.
    double q_defect = 0.0;
    /// max |W[(p rho + rho p)/2] - p W| relative to max |p W|.
    double p_defect = 0.0;
    /// max |q (p W) - p (q W)| on the phase-space side.
    double wigner_commute_defect = 0.0;
    /// max |A_x A_p rho - A_p A_x rho| on the operator side; nonzero on a finite grid.
    double operator_commute_defect = 0.0;
    /// sum q W dp dq versus Tr(x rho).
    double mean_q_wigner = 0.0;
    double mean_q_operator = 0.0;
};

AnticommutatorReport anticommutator_check(const Eigen::MatrixXcd& rho, const GridSpec& grid, double hbar);

/// CSV: comment header with spacings and origin, then one line per momentum row.
void write_wigner_csv(const WignerGrid& w, const std::string& path);
WignerGrid read_wigner_csv(const std::string& path);
std::string wigner_metadata_json(const WignerGrid& w);

}  // namespace phaselattice
