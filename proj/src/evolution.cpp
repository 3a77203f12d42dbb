#include "phaselattice/evolution.hpp"

#include "phaselattice/fft.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace phaselattice {

void EvolutionParams::validate() const
{
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw std::domain_error("mass must be positive");
    if (!(diffusion >= 0.0) || !std::isfinite(diffusion))
        throw std::domain_error("diffusion must be non-negative");
    if (!(time >= 0.0) || !std::isfinite(time))
        throw std::domain_error("time must be non-negative");
}

MomentVector evolve_moments(const MomentVector& m0, const EvolutionParams& e)
{
    e.validate();
    const double t = e.time, m = e.mass, D = e.diffusion;
    MomentVector r;
    r.mean_x = m0.mean_x + m0.mean_p * t / m;
    r.mean_p = m0.mean_p;
    r.var_p = 2.0 * D * t + m0.var_p;
    r.var_x = (2.0 / 3.0) * D * t * t * t / (m * m) + m0.var_p * t * t / (m * m) + (2.0 * t / m) * m0.cov_xp + m0.var_x;
    r.cov_xp = m0.cov_xp + m0.var_p * t / m + D * t * t / m;
    return r;
}

KernelCovariance diffusion_kernel(const EvolutionParams& e)
{
    const double t = e.time, m = e.mass, D = e.diffusion;
    return {(2.0 / 3.0) * D * t * t * t / (m * m), D * t * t / m, 2.0 * D * t};
}

namespace {

double wavenumber(int idx, int n, double spacing)
{
    const int k = idx < n / 2 ? idx : idx - n;
    return 2.0 * pi * k / (n * spacing);
}

void smooth_values(std::vector<cplx>& v, int np, int nq, double dp, double dq, const KernelCovariance& S)
{
    fft2_inplace(v, np, nq);
    const double norm = 1.0 / (static_cast<double>(np) * nq);
    for (int i = 0; i < np; ++i) {
        const double kp = wavenumber(i, np, dp);
        for (int j = 0; j < nq; ++j) {
            const double kq = wavenumber(j, nq, dq);
            auto g = [&](double a, double b) { return std::exp(-0.5 * (S.pp * a * a + 2.0 * S.qp * a * b + S.qq * b * b)); };
            double f = g(kp, kq);
            // Nyquist rows are their own mirror images; averaging keeps real data real.
            if (i == np / 2 || j == nq / 2)
                f = 0.5 * (g(kp, kq) + g(kp, -kq));
            v[static_cast<std::size_t>(i) * nq + j] *= f * norm;
        }
    }
    fft2_inplace(v, np, nq, true);
}

void evolve_values(std::vector<cplx>& v, int np, int nq, double dp, double dq, double p_origin, const EvolutionParams& e)
{
    const double t = e.time, m = e.mass;
    // Shear: row at momentum p moves by p t / m in q.
    fft_batch(v, nq, np);
    for (int i = 0; i < np; ++i) {
        const double s = (p_origin + i * dp) * t / m;
        for (int j = 0; j < nq; ++j) {
            const double k = wavenumber(j, nq, dq);
            const cplx f = (j == nq / 2) ? cplx(std::cos(k * s), 0.0) : std::polar(1.0, -k * s);
            v[static_cast<std::size_t>(i) * nq + j] *= f / static_cast<double>(nq);
        }
    }
    fft_batch(v, nq, np, true);
    if (e.diffusion == 0.0 || t == 0.0)
        return;
    smooth_values(v, np, nq, dp, dq, diffusion_kernel(e));
}

void guard_check(const WignerGrid& W, const EvolutionParams& e)
{
    const WignerMoments wm = wigner_moments(W);
    const MomentVector f = evolve_moments(wm.moments, e);
    const double q_lo = W.q_origin, q_hi = W.q_origin + W.nq * W.dq;
    const double p_lo = W.p_origin, p_hi = W.p_origin + W.np * W.dp;
    const double sx = std::sqrt(std::max(f.var_x, 0.0)), sp = std::sqrt(std::max(f.var_p, 0.0));
    std::ostringstream os;
    if (f.mean_x - 6.0 * sx < q_lo || f.mean_x + 6.0 * sx > q_hi) {
        os << "grid too short in position: final state needs [" << f.mean_x - 6.0 * sx << ", " << f.mean_x + 6.0 * sx
           << "], grid covers [" << q_lo << ", " << q_hi << "]";
        throw std::domain_error(os.str());
    }
    if (f.mean_p - 6.0 * sp < p_lo || f.mean_p + 6.0 * sp > p_hi) {
        os << "grid too short in momentum: final state needs [" << f.mean_p - 6.0 * sp << ", " << f.mean_p + 6.0 * sp
           << "], grid covers [" << p_lo << ", " << p_hi << "]";
        throw std::domain_error(os.str());
    }
    const double cq = std::sqrt(std::max(f.var_x - f.cov_xp * f.cov_xp / f.var_p, 0.0));
    const double cp = std::sqrt(std::max(f.var_p - f.cov_xp * f.cov_xp / f.var_x, 0.0));
    if (cq < 2.0 * W.dq || cp < 2.0 * W.dp) {
        os << "grid under-resolves the final state: conditional widths (" << cq << ", " << cp
           << ") need spacings below (" << 0.5 * cq << ", " << 0.5 * cp << "), grid has (" << W.dq << ", " << W.dp
           << ")";
        throw std::domain_error(os.str());
    }
}

}  // namespace

WignerGrid evolve_wigner(const WignerGrid& W, const EvolutionParams& e)
{
    e.validate();
    guard_check(W, e);
    std::vector<cplx> v(W.values.begin(), W.values.end());
    evolve_values(v, W.np, W.nq, W.dp, W.dq, W.p_origin, e);
    WignerGrid out = W;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.values[i] = v[i].real();
    return out;
}

ComplexWigner evolve_wigner(const ComplexWigner& W, const EvolutionParams& e)
{
    e.validate();
    ComplexWigner out = W;
    evolve_values(out.values, W.np, W.nq, W.dp, W.dq, W.p_origin, e);
    return out;
}

SpreadingReport spreading_estimates(const SpreadingInputs& in)
{
    SpreadingReport r;
    const double gkT = in.gamma * in.boltzmann * in.temperature;
    r.spreading_ratio = gkT / in.hbar * in.time * in.time;
    r.decoherence_time = gkT > 0.0 ? std::sqrt(in.hbar / gkT) : std::numeric_limits<double>::infinity();
    r.thermal_ratio = in.omega > 0.0 ? in.boltzmann * in.temperature / (in.hbar * in.omega) : 0.0;
    r.imprecision_cells = in.mass * in.dv_precision * in.dx_precision / in.hbar;
    return r;
}

}  // namespace phaselattice
