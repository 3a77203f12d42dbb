#pragma once
// Independent reference computations. Nothing here calls into the library's numerics.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

inline constexpr double pi = 3.14159265358979323846;

/// Composite Simpson rule on [lo, hi] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int panels)
{
    if (panels % 2)
        ++panels;
    const double h = (hi - lo) / panels;
    double s = f(lo) + f(hi);
    for (int i = 1; i < panels; ++i)
        s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
}

/// |psi^(K)_00(x)|^2 for a = 1, from the geometric-series closed form of the halving combination.
inline double psi_density(int K, double x)
{
    if (std::abs(x) > 0.5)
        return 0.0;
    if (K == 1)
        return 2.0 * std::cos(pi * x) * std::cos(pi * x);
    const double h = std::ldexp(1.0, K - 1);
    const double c = std::cos(pi * x);
    if (std::abs(c) < 1e-300)
        return 0.0;
    return std::ldexp(1.0, 2 - K) * std::pow(std::sin(pi * h * x), 4) / (c * c);
}

/// Position variance of psi^(K)_00 with a = 1 by Simpson quadrature of the closed-form density.
inline double psi_var_x(int K, int panels = 400000)
{
    const double e = 1e-12;
    return simpson([K](double x) { return x * x * psi_density(K, x); }, -0.5 + e, 0.5 - e, panels);
}

/// Frozen values of the position variance (a = 1) from the same closed form, evaluated once at 20 digits.
inline const std::vector<double>& frozen_var_x()
{
    static const std::vector<double> v{0.0, 0.032672741512164448, 0.093184003965227283, 0.14593621194418286,
                                       0.18489047853312444, 0.21087265543897729};
    return v;
}

/// Exact momentum mean and variance of psi^(K)_{0,m'} in units where b = 2 pi hbar / a = 1:
/// mean 2^K m' + 2^(K-1) - 1/2 + shift, variance (4^K - 1)/12.
inline double psi_mean_p(int K, int mprime, double shift) { return std::ldexp(1.0, K) * mprime + std::ldexp(1.0, K - 1) - 0.5 + shift; }
inline double psi_var_p(int K) { return (std::ldexp(1.0, 2 * K) - 1.0) / 12.0; }

struct Moments2 {
    double mean = 0.0;
    double var = 0.0;
};

/// Momentum moments (units of b) of E / Tr E for the block-0 projector: an equal mixture of every
/// psi^(K)_{0,m'} in the block, so the variance picks up the spread of the state means.
inline Moments2 projector_p_moments(int N, double shift)
{
    double w = 0.0, m1 = 0.0, m2 = 0.0;
    for (int K = 1; K <= N; ++K)
        for (int mp = 0; mp < (1 << (N - K)); ++mp) {
            const double mu = psi_mean_p(K, mp, shift);
            w += 1.0;
            m1 += mu;
            m2 += psi_var_p(K) + mu * mu;
        }
    return {m1 / w, m2 / w - (m1 / w) * (m1 / w)};
}

/// Position variance of E / Tr E (a = 1): each level K contributes 2^(N-K) states of variance (dx)^2_K.
inline double projector_var_x(int N)
{
    double w = 0.0, s = 0.0;
    for (int K = 1; K <= N; ++K) {
        const double n = std::ldexp(1.0, N - K);
        w += n;
        s += n * psi_var_x(K, 100000);
    }
    return s / w;
}

/// Gaussian probability of [lo, hi] for mean mu and standard deviation sigma.
inline double normal_interval(double mu, double sigma, double lo, double hi)
{
    return 0.5 * (std::erf((hi - mu) / (sigma * std::sqrt(2.0))) - std::erf((lo - mu) / (sigma * std::sqrt(2.0))));
}

/// Direct quadrature of the Wigner integral (1/2 pi hbar) int psi*(q + y/2) psi(q - y/2) e^(i p y / hbar) dy.
inline double wigner_direct(const std::function<std::complex<double>(double)>& psi, double q, double p, double hbar,
                            double y_max, int panels)
{
    const std::complex<double> I(0.0, 1.0);
    auto re = [&](double y) { return (std::conj(psi(q + 0.5 * y)) * psi(q - 0.5 * y) * std::exp(I * p * y / hbar)).real(); };
    return simpson(re, -y_max, y_max, panels) / (2.0 * pi * hbar);
}

}  // namespace oracle
