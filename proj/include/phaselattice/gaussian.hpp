#pragma once

#include "phaselattice/lattice.hpp"

#include <Eigen/Dense>

namespace phaselattice {

/// Gaussian density operator with mean (q0, p0) and covariance (vx, vp, c).
struct GaussianState {
    double q0 = 0.0;
    double p0 = 0.0;
    double vx = 1.0;
    double vp = 1.0;
    double c = 0.0;

    static GaussianState minimum_uncertainty(double q0, double p0, double sigma_x, double hbar);
    /// Uncorrelated state with the given widths; mixed when sigma_x sigma_p > hbar / 2.
    static GaussianState broad(double q0, double p0, double sigma_x, double sigma_p);

    void validate(double hbar) const;
    MomentVector moments() const;
    double sigma_x() const;
    double sigma_p() const;

    /// Conditional variances v_{p|x} and v_{x|p}.
    double var_p_given_x() const { return vp - c * c / vx; }
    double var_x_given_p() const { return vx - c * c / vp; }

    /// <x1| rho |x2>.
    cplx density(double x1, double x2, double hbar) const;
    /// <p1| rho |p2>.
    cplx momentum_density(double p1, double p2, double hbar) const;
    double wigner(double q, double p) const;
    double position_marginal(double x) const;
    double momentum_marginal(double p) const;
    double probability_x(double lo, double hi) const;
    double probability_p(double lo, double hi) const;

    /// Wave function of a pure Gaussian; throws unless vx vp - c^2 = hbar^2/4.
    cplx wavefunction(double x, double hbar) const;
};

/// rho_jk = <x_j|rho|x_k> dx so that the matrix trace is the discrete normalisation.
Eigen::MatrixXcd density_matrix(const GaussianState& g, const GridSpec& grid, double hbar);

/// Unit vector of grid samples sqrt(dx) psi(x_j) for a pure Gaussian.
Eigen::VectorXcd wave_vector(const GaussianState& g, const GridSpec& grid, double hbar);

}  // namespace phaselattice
