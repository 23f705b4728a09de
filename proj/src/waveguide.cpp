#include "scattomo/waveguide.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "scattomo/quadrature.hpp"

namespace scattomo {

namespace {

void check_params(const WavePacketSpec& spec, const QubitParams& params) {
    if (!(spec.sigma > 0.0)) throw std::invalid_argument("waveguide: sigma must be > 0");
    if (!(params.gamma > 0.0)) throw std::invalid_argument("waveguide: gamma must be > 0");
}

void check_forward(double momentum, const char* label) {
    if (!(momentum > 0.0)) {
        std::ostringstream msg;
        msg << "waveguide: forward scattering needs " << label << " > 0 (got " << momentum << ")";
        throw std::invalid_argument(msg.str());
    }
}

[[noreturn]] void quadrature_failure(const char* what, double residual, double tol) {
    std::ostringstream msg;
    msg << "waveguide: " << what << " quadrature did not settle (relative residual " << residual
        << " > " << tol << "); raise QuadratureSpec.nodes";
    throw std::runtime_error(msg.str());
}

cplx single_integral(double p1, double k1, const WavePacketSpec& spec, const QubitParams& params,
                     int nodes) {
    const auto& rule = gauss_hermite(nodes);
    const double center = 0.5 * (k1 + p1);
    KahanSum<double> re, im;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const cplx t = transmission(center + spec.sigma * rule.nodes[i], params);
        re.add(rule.weights[i] * t.real());
        im.add(rule.weights[i] * t.imag());
    }
    const double gap = p1 - k1;
    const double prefactor = std::exp(-gap * gap / (4.0 * spec.sigma * spec.sigma)) /
                             std::sqrt(pi);
    return prefactor * cplx(re, im);
}

// tmono factorizes as f(omega1, omega2)(g(nu1) + g(nu2)), so for a fixed
// khat' node the delta_p' and delta_k' integrals separate.
cplx pair_sum(double khat_node, double delta_p, double sigma, const QubitParams& params,
              const QuadratureRule& rule) {
    KahanSum<double> re, im;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double dp = delta_p + sigma * rule.nodes[j];
        const cplx v = reflection(khat_node - dp, params) * reflection(khat_node + dp, params);
        re.add(rule.weights[j] * v.real());
        im.add(rule.weights[j] * v.imag());
    }
    return {re, im};
}

cplx incoming_sum(double khat_node, double delta_k, double sigma, const QubitParams& params,
                  const QuadratureRule& rule) {
    KahanSum<double> re, im;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double dk = delta_k + sigma * rule.nodes[j];
        const cplx v = reflection(khat_node - dk, params) + reflection(khat_node + dk, params);
        re.add(rule.weights[j] * v.real());
        im.add(rule.weights[j] * v.imag());
    }
    return {re, im};
}

// Triple integral for one coordinate set at a given node count, without the
// off-shell prefactor. kernel_center is (input center + output center) / 2.
cplx t_integral(double kernel_center, double delta_p, double delta_k, const WavePacketSpec& spec,
                const QubitParams& params, int nodes) {
    const auto& rule = gauss_hermite(nodes);
    const double sigma = spec.sigma;
    KahanSum<double> re, im;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double khat_node = kernel_center + sigma * rule.nodes[i] / std::sqrt(2.0);
        const cplx inner = pair_sum(khat_node, delta_p, sigma, params, rule) *
                           incoming_sum(khat_node, delta_k, sigma, params, rule);
        re.add(rule.weights[i] * inner.real());
        im.add(rule.weights[i] * inner.imag());
    }
    // 2 sigma sqrt(pi) from the forward model, 1/sqrt(2 pi) and two 1/sqrt(pi)
    // from the Gauss-Hermite changes of variable, -i/(pi gamma) from tmono.
    const cplx scale = cplx(0.0, -1.0) / (pi * params.gamma) * std::sqrt(2.0) * sigma / pi;
    return scale * cplx(re, im);
}

}  // namespace

bool forward_scattering_valid(double center_momentum, const WavePacketSpec& spec) {
    return center_momentum > 6.0 * spec.sigma;
}

cplx reflection(double omega, const QubitParams& params) {
    return -1.0 / (1.0 - cplx(0.0, 1.0) * (omega - params.omega0) / params.gamma);
}

cplx transmission(double omega, const QubitParams& params) {
    return 1.0 + reflection(omega, params);
}

cplx tmono(double omega1, double omega2, double nu1, double nu2, const QubitParams& params) {
    return cplx(0.0, -1.0) / (pi * params.gamma) * reflection(omega1, params) *
           reflection(omega2, params) *
           (reflection(nu1, params) + reflection(nu2, params));
}

cplx measured_single(double p1, double k1, const WavePacketSpec& spec, const QubitParams& params,
                     const QuadratureSpec& quad) {
    check_params(spec, params);
    check_forward(p1, "p1");
    check_forward(k1, "k1");
    const cplx value = single_integral(p1, k1, spec, params, quad.nodes);
    if (quad.verify) {
        const cplx check = single_integral(p1, k1, spec, params, quad.check_nodes);
        const double residual = std::abs(value - check) / (std::abs(check) + 1e-30);
        if (residual > quad.rel_tol) quadrature_failure("single-photon", residual, quad.rel_tol);
        return check;
    }
    return value;
}

cplx measured_T(const TCoordinates& coords, const WavePacketSpec& spec, const QubitParams& params,
                const QuadratureSpec& quad) {
    check_params(spec, params);
    for (double momentum : coords.momenta()) check_forward(momentum, "every momentum");
    if (!std::isfinite(coords.khat) || !std::isfinite(coords.delta_k) ||
        !std::isfinite(coords.delta_p) || !std::isfinite(coords.sum_mismatch))
        throw std::invalid_argument("waveguide: coordinates must be finite");

    const double s2 = spec.sigma * spec.sigma;
    const double prefactor =
        std::exp(-coords.sum_mismatch * coords.sum_mismatch / (8.0 * s2));
    const double kernel_center = coords.khat + 0.25 * coords.sum_mismatch;

    const cplx value = prefactor * t_integral(kernel_center, coords.delta_p, coords.delta_k, spec,
                                              params, quad.nodes);
    if (quad.verify) {
        const cplx check = prefactor * t_integral(kernel_center, coords.delta_p, coords.delta_k,
                                                  spec, params, quad.check_nodes);
        const double scale = std::abs(check) + 1e-12 * spec.sigma / params.gamma;
        const double residual = std::abs(value - check) / scale;
        if (residual > quad.rel_tol) quadrature_failure("two-photon", residual, quad.rel_tol);
        return check;
    }
    return value;
}

namespace {

SampledSurface t_surface_at(const GridAxis& khat_axis, const GridAxis& delta_p_axis,
                            const GridAxis& delta_k_axis, const WavePacketSpec& spec,
                            const QubitParams& params, int nodes, int threads) {
    const auto& rule = gauss_hermite(nodes);
    const std::size_t q = rule.nodes.size();
    const double sigma = spec.sigma;

    SampledSurface surface;
    surface.khat = khat_axis;
    surface.delta_p = delta_p_axis;
    surface.delta_k = delta_k_axis;
    surface.sigma = sigma;
    surface.gamma = params.gamma;
    surface.allocate();

    const cplx scale = cplx(0.0, -1.0) / (pi * params.gamma) * std::sqrt(2.0) * sigma / pi;

    std::vector<cplx> pair_table(static_cast<std::size_t>(delta_p_axis.count) * q);
    std::vector<cplx> in_table(static_cast<std::size_t>(delta_k_axis.count) * q);
    for (int ik = 0; ik < khat_axis.count; ++ik) {
        const double center = khat_axis.point(ik);
        std::vector<double> khat_nodes(q);
        for (std::size_t i = 0; i < q; ++i)
            khat_nodes[i] = center + sigma * rule.nodes[i] / std::sqrt(2.0);

        parallel_for(static_cast<std::size_t>(delta_p_axis.count), threads, [&](std::size_t ip) {
            for (std::size_t i = 0; i < q; ++i)
                pair_table[ip * q + i] = pair_sum(
                    khat_nodes[i], delta_p_axis.point(static_cast<int>(ip)), sigma, params, rule);
        });
        parallel_for(static_cast<std::size_t>(delta_k_axis.count), threads, [&](std::size_t idk) {
            for (std::size_t i = 0; i < q; ++i)
                in_table[idk * q + i] = incoming_sum(
                    khat_nodes[i], delta_k_axis.point(static_cast<int>(idk)), sigma, params, rule);
        });
        parallel_for(static_cast<std::size_t>(delta_p_axis.count), threads, [&](std::size_t ip) {
            for (int idk = 0; idk < delta_k_axis.count; ++idk) {
                KahanSum<double> re, im;
                for (std::size_t i = 0; i < q; ++i) {
                    const cplx inner =
                        pair_table[ip * q + i] * in_table[static_cast<std::size_t>(idk) * q + i];
                    re.add(rule.weights[i] * inner.real());
                    im.add(rule.weights[i] * inner.imag());
                }
                surface.at(ik, static_cast<int>(ip), idk) = scale * cplx(re, im);
            }
        });
    }
    return surface;
}

}  // namespace

SampledSurface t_surface(const GridAxis& khat_axis, const GridAxis& delta_p_axis,
                         const GridAxis& delta_k_axis, const WavePacketSpec& spec,
                         const QubitParams& params, const QuadratureSpec& quad, int threads) {
    check_params(spec, params);
    for (int ik = 0; ik < khat_axis.count; ++ik) {
        const double khat = khat_axis.point(ik);
        const double reach = std::max(std::abs(delta_p_axis.origin),
                                      std::abs(delta_p_axis.last()));
        const double reach_k =
            std::max(std::abs(delta_k_axis.origin), std::abs(delta_k_axis.last()));
        check_forward(khat - std::max(reach, reach_k), "khat - max|delta|");
    }

    SampledSurface surface =
        t_surface_at(khat_axis, delta_p_axis, delta_k_axis, spec, params, quad.nodes, threads);
    if (quad.verify) {
        SampledSurface check = t_surface_at(khat_axis, delta_p_axis, delta_k_axis, spec, params,
                                            quad.check_nodes, threads);
        double worst = 0.0;
        const double scale = check.max_abs() + 1e-12 * spec.sigma / params.gamma;
        for (std::size_t i = 0; i < surface.values.size(); ++i)
            worst = std::max(worst, std::abs(surface.values[i] - check.values[i]) / scale);
        if (worst > quad.rel_tol) quadrature_failure("surface", worst, quad.rel_tol);
        return check;
    }
    return surface;
}

}  // namespace scattomo
