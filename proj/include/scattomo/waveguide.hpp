#pragma once

#include "scattomo/common.hpp"
#include "scattomo/surface.hpp"

namespace scattomo {

/// Two-level scatterer in a 1D channel with linear dispersion. Units: c = 1
/// and momentum = frequency, so everything is expressed in gamma.
struct QubitParams {
    double omega0 = 0.0;
    double gamma = 1.0;
};

/// Gaussian wave-packet momentum width.
struct WavePacketSpec {
    double sigma = 0.1;
};

/// Forward scattering assumes wave packets far from the non-propagating
/// k = 0 mode; callers should check this before trusting results.
bool forward_scattering_valid(double center_momentum, const WavePacketSpec& spec);

/// On-shell coordinates of a two-photon element: conserved average momentum
/// khat, relative differences delta_k = (k2-k1)/2 and delta_p = (p2-p1)/2,
/// and the off-shell mismatch p1+p2-k1-k2.
struct TCoordinates {
    double khat = 0.0;
    double delta_k = 0.0;
    double delta_p = 0.0;
    double sum_mismatch = 0.0;

    // (k1, k2, p1, p2)
    std::array<double, 4> momenta() const {
        const double pbar = khat + 0.5 * sum_mismatch;
        return {khat - delta_k, khat + delta_k, pbar - delta_p, pbar + delta_p};
    }
    static TCoordinates from_momenta(double k1, double k2, double p1, double p2) {
        return {0.5 * (k1 + k2), 0.5 * (k2 - k1), 0.5 * (p2 - p1), p1 + p2 - k1 - k2};
    }
};

/// Tensor-product Gauss-Hermite configuration. verify re-evaluates at
/// check_nodes and rejects results that moved more than rel_tol.
struct QuadratureSpec {
    int nodes = 80;
    int check_nodes = 120;
    double rel_tol = 1e-7;
    bool verify = true;
};

cplx reflection(double omega, const QubitParams& params);
cplx transmission(double omega, const QubitParams& params);

/// Monochromatic two-photon interaction strength
///   -(i / pi gamma) r_{omega1} r_{omega2} (r_{nu1} + r_{nu2}),
/// omega = outgoing, nu = incoming frequencies.
cplx tmono(double omega1, double omega2, double nu1, double nu2, const QubitParams& params);

/// Wave-packet single-photon transmission element
///   exp(-(p1-k1)^2 / 4 sigma^2) * integral G_sigma(k' - (k1+p1)/2) t_{k'} dk'.
cplx measured_single(double p1, double k1, const WavePacketSpec& spec, const QubitParams& params,
                     const QuadratureSpec& quad = {});

/// Wave-packet two-photon nonlinearity: Gaussian off-shell prefactor times
/// the triple convolution of tmono against the three-Gaussian kernel.
cplx measured_T(const TCoordinates& coords, const WavePacketSpec& spec, const QubitParams& params,
                const QuadratureSpec& quad = {});

/// On-shell measured_T over a (khat, delta_p, delta_k) grid. Exploits the
/// product structure of the qubit nonlinearity, so the cost is O(grid * Q)
/// after O(grid * Q^2) tables rather than O(grid * Q^3).
SampledSurface t_surface(const GridAxis& khat_axis, const GridAxis& delta_p_axis,
                         const GridAxis& delta_k_axis, const WavePacketSpec& spec,
                         const QubitParams& params, const QuadratureSpec& quad = {},
                         int threads = 0);

}  // namespace scattomo
