#pragma once

#include <array>
#include <vector>

#include "scattomo/common.hpp"
#include "scattomo/surface.hpp"
#include "scattomo/waveguide.hpp"

namespace scattomo {

/// Physicists' Hermite polynomial by the three-term recurrence
/// H_{n+1} = 2x H_n - 2n H_{n-1}. n is capped at 200; values that leave the
/// double range raise an error.
double hermite(int n, double x);

/// Inverse-kernel series configuration.
///
/// The kernel K_sigma(k) = G_sigma(k) sum_q (-1)^q / (2^q q!) H_{2q}(k/sigma)
/// diverges pointwise (at k = 0 the terms grow like 2^q / sqrt(q)), so it is
/// never evaluated as a function. Each order is integrated against the
/// samples on its own, and the partial sums of those integrals converge for
/// smooth integrable inputs. That term-wise treatment is the entire point of
/// this module.
struct KernelConfig {
    double sigma = 0.1;
    int q_max = 40;
    double series_tol = 1e-8;  // relative partial-sum increment stop rule
    /// Richardson doubled-resolution tolerance. Gridded input caps how far
    /// this can be pushed: interpolation error survives node refinement and
    /// the order-q functionals amplify it like ~2^q.
    double quad_tol = 1e-8;
    /// Extract the series limit with Wynn's epsilon algorithm instead of
    /// plain truncation. For resonance-type targets the series is asymptotic
    /// (exponential spectral tails against the e^{sigma^2 xi^2/4} inverse
    /// multiplier) and the anti-limit beats the smallest-term value by an
    /// order of magnitude; for convergent inputs it is a no-op. Off by
    /// default: in cascaded (3D) use the tails are contamination-dominated
    /// and the anti-limit would chase them.
    bool resum = false;
    int threads = 0;
};

struct DeconvolutionReport {
    GridAxis grid;  // output points (input grid clipped to a 6 sigma margin)
    std::vector<cplx> values;
    std::vector<double> increments;  // sup |term_q| over output points
    int orders_used = 0;
    bool converged = false;
    /// Input does not decay at the grid edges (> 1e-3 of its peak).
    bool edge_warning = false;
    /// Input feature width below ~sqrt(2) sigma; the inverse multiplier
    /// e^{sigma^2 xi^2 / 4} amplifies such features and grid noise.
    bool width_warning = false;
    double quadrature_residual = 0.0;
    /// Stability spread of the epsilon-algorithm candidates (0 when resum
    /// is off); a practical error gauge for the returned values.
    double resummation_gap = 0.0;
};

/// Term-wise 1D deconvolution of gridded samples. Output covers the largest
/// sub-grid with a 6 sigma margin inside the input grid.
DeconvolutionReport deconvolve_1d(const std::vector<cplx>& samples, const GridAxis& grid,
                                  const KernelConfig& cfg);

struct PassReport {
    std::vector<double> increments;
    int orders_used = 0;
    bool converged = false;
    double quadrature_residual = 0.0;
    double resummation_gap = 0.0;
};

struct Deconvolution3DReport {
    SampledSurface result;
    std::array<PassReport, 3> passes;  // khat, delta_p, delta_k in that order
    bool converged = false;
    bool edge_warning = false;
    bool width_warning = false;
};

/// Separable 3D deconvolution recovering the monochromatic two-photon
/// nonlinearity from a measured T surface: one 1D pass per axis (the khat
/// pass uses kernel width sigma / sqrt(2) and a 1/sqrt(2) factor, from
/// K_sigma(sqrt(2) x) = K_{sigma/sqrt(2)}(x) / sqrt(2)), then the overall
/// 1 / (sqrt(pi) sigma).
Deconvolution3DReport deconvolve_t_3d(const SampledSurface& measured, const GridAxis& khat_axis,
                                      const GridAxis& delta_p_axis, const GridAxis& delta_k_axis,
                                      const KernelConfig& cfg);

struct RoundtripConfig {
    double khat = 0.0;            // evaluation average momentum
    double delta_halfwidth = 3.0; // evaluation window in both delta axes
    double step = 0.05;
    /// Measured-surface margin beyond the evaluation window. Order q of the
    /// kernel series oscillates out to sqrt(4q+2) sigma, so a narrow margin
    /// silently caps the usable order; 9 sigma supports orders around 20.
    double margin_sigmas = 9.0;
    int q_max = 40;
    /// Looser than the 1D default on purpose: each pass's truncation error
    /// is smooth, but digging to its noise floor seeds the next pass with
    /// high-frequency error it then amplifies.
    double series_tol = 1e-6;
    /// Heavier than the single-point default: forward-model noise is the
    /// seed the deconvolution passes amplify, so it must sit well below the
    /// kernel series floor. Unverified because the doubled check would hold
    /// a second full-resolution surface in memory; the node count is already
    /// past the verified convergence point of the integrand family.
    QuadratureSpec forward_quad{160, 200, 1e-10, false};
    int threads = 0;
};

struct RoundtripReport {
    SampledSurface recovered;  // gamma * Tbar over the evaluation window
    SampledSurface analytic;   // analytic gamma * Tbar on the same grid
    /// sup | |rec|^2 - |ana|^2 | / sup |ana|^2.
    double rel_sup_abs2 = 0.0;
    /// sup |rec - ana| / sup |ana|.
    double rel_sup_complex = 0.0;
    Deconvolution3DReport deconvolution;
};

/// Forward-model then inverse-kernel roundtrip against the analytic
/// nonlinearity; the acceptance gate for the deconvolution chain.
RoundtripReport convolution_forward_check(const QubitParams& params, const WavePacketSpec& spec,
                                          const RoundtripConfig& cfg);

}  // namespace scattomo
