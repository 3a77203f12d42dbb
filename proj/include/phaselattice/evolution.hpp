#pragma once

#include "phaselattice/lattice.hpp"
#include "phaselattice/wigner.hpp"

namespace phaselattice {

namespace si {
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double boltzmann = 1.380649e-23;
}  // namespace si

/// Free particle with momentum diffusion D = 2 m gamma k T.
struct EvolutionParams {
    double mass = 1.0;
    double diffusion = 0.0;
    double time = 0.0;
    double gamma = 0.0;
    double temperature = 0.0;
    double omega = 0.0;

    void validate() const;
};

MomentVector evolve_moments(const MomentVector& initial, const EvolutionParams& params);

/// Exact Green-function solution of dW/dt = -(p/m) dW/dq + D d^2W/dp^2 on a periodic grid.
/// Throws when the final state comes within 6 standard deviations of the grid edge or is under-resolved.
WignerGrid evolve_wigner(const WignerGrid& W, const EvolutionParams& params);

/// Same map on the Wigner transform of a general operator; no guard check.
ComplexWigner evolve_wigner(const ComplexWigner& W, const EvolutionParams& params);

/// Kernel covariance of the diffusion after the shear: (qq, qp, pp).
struct KernelCovariance {
    double qq = 0.0;
    double qp = 0.0;
    double pp = 0.0;
};
KernelCovariance diffusion_kernel(const EvolutionParams& params);

struct SpreadingInputs {
    double mass = 0.0;
    double gamma = 0.0;
    double temperature = 0.0;
    double omega = 0.0;
    double time = 0.0;
    double dx_precision = 0.0;
    double dv_precision = 0.0;
    double hbar = si::hbar;
    double boltzmann = si::boltzmann;
};

struct SpreadingReport {
    /// (gamma k T / hbar) t^2.
    double spreading_ratio = 0.0;
    /// (hbar / gamma k T)^(1/2); infinite without environment.
    double decoherence_time = 0.0;
    /// k T / (hbar omega).
    double thermal_ratio = 0.0;
    /// m dv dx / hbar.
    double imprecision_cells = 0.0;
};

SpreadingReport spreading_estimates(const SpreadingInputs& in);

}  // namespace phaselattice
