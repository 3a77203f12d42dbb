#include "phaselattice/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace phaselattice {

namespace {

double normal_pdf(double x, double mean, double var)
{
    const double d = x - mean;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * pi * var);
}

double normal_interval(double lo, double hi, double mean, double var)
{
    const double s = std::sqrt(2.0 * var);
    return 0.5 * (std::erf((hi - mean) / s) - std::erf((lo - mean) / s));
}

}  // namespace

GaussianState GaussianState::minimum_uncertainty(double q0, double p0, double sigma_x, double hbar)
{
    const double sp = hbar / (2.0 * sigma_x);
    return {q0, p0, sigma_x * sigma_x, sp * sp, 0.0};
}

GaussianState GaussianState::broad(double q0, double p0, double sigma_x, double sigma_p)
{
    return {q0, p0, sigma_x * sigma_x, sigma_p * sigma_p, 0.0};
}

void GaussianState::validate(double hbar) const
{
    if (!std::isfinite(q0) || !std::isfinite(p0) || !std::isfinite(c))
        throw std::domain_error("Gaussian state parameters must be finite");
    if (!(vx > 0.0) || !(vp > 0.0))
        throw std::domain_error("Gaussian variances must be positive");
    if (vx * vp - c * c < 0.25 * hbar * hbar * (1.0 - 1e-9))
        throw std::domain_error("Gaussian covariance violates the uncertainty bound");
}

MomentVector GaussianState::moments() const
{
    return {q0, p0, vx, vp, c};
}

double GaussianState::sigma_x() const { return std::sqrt(vx); }
double GaussianState::sigma_p() const { return std::sqrt(vp); }

cplx GaussianState::density(double x1, double x2, double hbar) const
{
    const double X = 0.5 * (x1 + x2);
    const double xi = x1 - x2;
    const double mu = p0 + (c / vx) * (X - q0);
    const double damp = xi * xi * var_p_given_x() / (2.0 * hbar * hbar);
    return normal_pdf(X, q0, vx) * std::exp(-damp) * std::polar(1.0, xi * mu / hbar);
}

cplx GaussianState::momentum_density(double p1, double p2, double hbar) const
{
    const double P = 0.5 * (p1 + p2);
    const double eta = p1 - p2;
    const double nu = q0 + (c / vp) * (P - p0);
    const double damp = eta * eta * var_x_given_p() / (2.0 * hbar * hbar);
    return normal_pdf(P, p0, vp) * std::exp(-damp) * std::polar(1.0, -eta * nu / hbar);
}

double GaussianState::wigner(double q, double p) const
{
    const double det = vx * vp - c * c;
    const double dq = q - q0, dp = p - p0;
    const double quad = (vp * dq * dq - 2.0 * c * dq * dp + vx * dp * dp) / det;
    return std::exp(-0.5 * quad) / (2.0 * pi * std::sqrt(det));
}

double GaussianState::position_marginal(double x) const { return normal_pdf(x, q0, vx); }
double GaussianState::momentum_marginal(double p) const { return normal_pdf(p, p0, vp); }
double GaussianState::probability_x(double lo, double hi) const { return normal_interval(lo, hi, q0, vx); }
double GaussianState::probability_p(double lo, double hi) const { return normal_interval(lo, hi, p0, vp); }

cplx GaussianState::wavefunction(double x, double hbar) const
{
    if (std::abs(vx * vp - c * c - 0.25 * hbar * hbar) > 1e-9 * vx * vp)
        throw std::domain_error("wave function requested for a mixed Gaussian");
    const double d = x - q0;
    const double amp = std::pow(2.0 * pi * vx, -0.25) * std::exp(-d * d / (4.0 * vx));
    const double phase = p0 * d / hbar + c * d * d / (2.0 * hbar * vx);
    return std::polar(amp, phase);
}

Eigen::MatrixXcd density_matrix(const GaussianState& g, const GridSpec& grid, double hbar)
{
    grid.validate();
    g.validate(hbar);
    const int D = grid.points;
    Eigen::MatrixXcd rho(D, D);
    for (int j = 0; j < D; ++j)
        for (int k = 0; k < D; ++k)
            rho(j, k) = g.density(grid.x(j), grid.x(k), hbar) * grid.dx();
    return rho;
}

Eigen::VectorXcd wave_vector(const GaussianState& g, const GridSpec& grid, double hbar)
{
    grid.validate();
    Eigen::VectorXcd v(grid.points);
    for (int j = 0; j < grid.points; ++j)
        v[j] = g.wavefunction(grid.x(j), hbar) * std::sqrt(grid.dx());
    return v;
}

}  // namespace phaselattice
