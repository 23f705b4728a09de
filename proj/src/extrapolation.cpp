#include "scattomo/extrapolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace scattomo {

namespace {

using quad = __float128;

void split(quad value, double& leading, double& correction) {
    leading = static_cast<double>(value);
    correction = static_cast<double>(value - static_cast<quad>(leading));
}

quad pow_int(quad base, int e) {
    quad out = 1;
    for (int i = 0; i < e; ++i) out *= base;
    return out;
}

void check_ladder_params(double factor, int order) {
    if (order < 1) throw std::invalid_argument("extrapolation: order Z must be >= 1");
    if (!(factor > 1.0))
        throw std::invalid_argument("extrapolation: the power factor b must be > 1");
    if (std::pow(factor, order - 1) > 1e300)
        throw std::invalid_argument("extrapolation: b^{Z-1} is not representable");
}

}  // namespace

double PowerLadder::power(int q) const {
    return std::pow(factor, q - 1) * base_power;
}

std::vector<double> PowerLadder::powers() const {
    std::vector<double> out(static_cast<std::size_t>(order));
    for (int q = 1; q <= order; ++q) out[static_cast<std::size_t>(q - 1)] = power(q);
    return out;
}

WeightVector extrapolation_weights(int order, double factor) {
    check_ladder_params(factor, order);
    const quad b = static_cast<quad>(factor);

    // coeff[offset][q]: E^(mu) evaluated on the ladder shifted by `offset`
    // rungs is sum_q coeff E(x_{q+offset}). One recursion step consumes one
    // shift, so order Z needs shifts 0..Z-mu at level mu.
    std::vector<std::vector<quad>> coeff(static_cast<std::size_t>(order),
                                         std::vector<quad>{quad(1)});
    for (int mu = 2; mu <= order; ++mu) {
        const quad scale = pow_int(b, mu - 1);
        const quad denom = scale - quad(1);
        std::vector<std::vector<quad>> next(static_cast<std::size_t>(order - mu + 1));
        for (int offset = 0; offset <= order - mu; ++offset) {
            std::vector<quad> w(static_cast<std::size_t>(mu), quad(0));
            const auto& low = coeff[static_cast<std::size_t>(offset)];       // E^(mu-1)(x)
            const auto& high = coeff[static_cast<std::size_t>(offset) + 1];  // E^(mu-1)(bx)
            for (int q = 0; q < mu - 1; ++q) {
                w[static_cast<std::size_t>(q)] += scale * low[static_cast<std::size_t>(q)];
                w[static_cast<std::size_t>(q) + 1] -= high[static_cast<std::size_t>(q)];
            }
            for (auto& v : w) v /= denom;
            next[static_cast<std::size_t>(offset)] = std::move(w);
        }
        coeff = std::move(next);
    }

    WeightVector out;
    out.order = order;
    out.factor = factor;
    out.weights.resize(static_cast<std::size_t>(order));
    out.corrections.resize(static_cast<std::size_t>(order));
    double condition = 0.0;
    for (int q = 0; q < order; ++q) {
        split(coeff[0][static_cast<std::size_t>(q)], out.weights[static_cast<std::size_t>(q)],
              out.corrections[static_cast<std::size_t>(q)]);
        condition += std::abs(out.weights[static_cast<std::size_t>(q)]);
    }
    out.condition_sum = condition;
    out.ill_conditioned = condition > 1e8;
    return out;
}

double weight_sum_defect(const WeightVector& w) {
    quad sum = 0;
    for (std::size_t q = 0; q < w.weights.size(); ++q)
        sum += static_cast<quad>(w.weights[q]) + static_cast<quad>(w.corrections[q]);
    return std::abs(static_cast<double>(sum - quad(1)));
}

double order_cancellation_defect(const WeightVector& w, int v) {
    if (v < 1 || v >= w.order)
        throw std::invalid_argument("extrapolation: cancellation order v must be in 1..Z-1");
    const quad b = static_cast<quad>(w.factor);
    quad sum = 0;
    for (std::size_t q = 0; q < w.weights.size(); ++q) {
        const quad weight = static_cast<quad>(w.weights[q]) + static_cast<quad>(w.corrections[q]);
        sum += weight * pow_int(b, static_cast<int>(q) * v);
    }
    return std::abs(static_cast<double>(sum));
}

cplx combine(const std::vector<Estimate>& estimates, const PowerLadder& ladder,
             bool* cancellation_warning) {
    check_ladder_params(ladder.factor, ladder.order);
    if (static_cast<int>(estimates.size()) != ladder.order)
        throw std::invalid_argument("extrapolation: combine needs exactly Z estimates");

    std::vector<const Estimate*> sorted(estimates.size());
    for (std::size_t i = 0; i < estimates.size(); ++i) sorted[i] = &estimates[i];
    std::sort(sorted.begin(), sorted.end(),
              [](const Estimate* a, const Estimate* b) { return a->power < b->power; });
    for (int q = 1; q <= ladder.order; ++q) {
        const double expected = ladder.power(q);
        const double got = sorted[static_cast<std::size_t>(q - 1)]->power;
        if (std::abs(got - expected) > 1e-9 * std::max(std::abs(expected), 1e-300)) {
            std::ostringstream msg;
            msg << "extrapolation: estimate power " << got << " does not match ladder power "
                << expected << " (rung " << q << ")";
            throw std::invalid_argument(msg.str());
        }
    }

    const WeightVector w = extrapolation_weights(ladder.order, ladder.factor);
    quad re = 0, im = 0, magnitude = 0;
    for (int q = 0; q < ladder.order; ++q) {
        const quad weight = static_cast<quad>(w.weights[static_cast<std::size_t>(q)]) +
                            static_cast<quad>(w.corrections[static_cast<std::size_t>(q)]);
        const cplx value = sorted[static_cast<std::size_t>(q)]->value;
        re += weight * static_cast<quad>(value.real());
        im += weight * static_cast<quad>(value.imag());
        const quad wabs = weight < 0 ? -weight : weight;
        magnitude += wabs * static_cast<quad>(std::abs(value));
    }
    const cplx result(static_cast<double>(re), static_cast<double>(im));
    if (cancellation_warning)
        *cancellation_warning = std::abs(result) < 1e-3 * static_cast<double>(magnitude);
    return result;
}

double z_order_bound(int mode_count, int m, double base_power, double factor, int order,
                     int max_terms) {
    check_ladder_params(factor, order);
    if (mode_count < 1 || m < 1)
        throw std::invalid_argument("extrapolation: bound needs M >= 1 and m >= 1");
    if (base_power < 0.0) throw std::invalid_argument("extrapolation: power must be >= 0");
    if (base_power == 0.0) return 0.0;

    const double log_b = std::log(factor);
    const double log_x = std::log(base_power);
    // Terms are accumulated as log magnitudes: x^v / v! peaks near v = x b^{Z-1}
    // and can exceed the double range long before the factorial wins.
    double log_sum = -std::numeric_limits<double>::infinity();
    double prev_log_term = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int v = order; v < order + max_terms; ++v) {
        double log_term = v * log_x - std::lgamma(v + 1.0);
        for (int j = 1; j < order; ++j) {
            // log |b^{Z-j} - b^v| with Z-j < v always in this range.
            log_term += v * log_b + std::log1p(-std::exp((order - j - v) * log_b));
            log_term -= std::log(std::pow(factor, order - j) - 1.0);
        }
        log_sum = std::max(log_sum, log_term) +
                  std::log1p(std::exp(-std::abs(log_sum - log_term)));
        if (log_term < log_sum + std::log(1e-16) && log_term < prev_log_term) {
            converged = true;
            break;
        }
        prev_log_term = log_term;
    }
    if (!converged)
        throw std::runtime_error(
            "extrapolation: error-bound series did not converge within the term limit");
    const double log_bound = 1.5 * m * std::log(static_cast<double>(mode_count)) + log_sum;
    if (log_bound > std::log(std::numeric_limits<double>::max()))
        throw std::runtime_error("extrapolation: error bound overflows double range");
    return std::exp(log_bound);
}

std::vector<OrderStudyRow> empirical_order_study(const TruncatedUnitary& oracle,
                                                 const TargetSpec& target, double factor,
                                                 const std::vector<int>& orders,
                                                 const std::vector<double>& base_powers) {
    if (!oracle.basis) throw std::invalid_argument("extrapolation: oracle has no basis");
    if (oracle.kind == UnitaryKind::general_vacuum_fixing)
        throw std::invalid_argument("extrapolation: the order study requires an elastic oracle");
    const int modes = oracle.basis->mode_count();
    const cplx truth = exact_s_element(oracle, target.out_modes, target.in_modes);

    auto first_order = [&](double power) {
        auto plan = build_input_plan_elastic(modes, equal_magnitudes(modes, power));
        RecordSet set = simulate_record_set(oracle, plan, {target.out_modes}, modes, {});
        return reconstruct_elastic(set, target);
    };

    std::vector<OrderStudyRow> rows;
    for (int order : orders) {
        OrderStudyRow row;
        row.order = order;
        for (double base : base_powers) {
            PowerLadder ladder{base, factor, order};
            std::vector<Estimate> estimates;
            for (int q = 1; q <= order; ++q) estimates.push_back(first_order(ladder.power(q)));
            const double err = std::abs(combine(estimates, ladder) - truth);
            if (err < 1e-13) continue;
            row.points.push_back({base, err});
        }
        if (row.points.size() < 4)
            throw std::runtime_error(
                "extrapolation: fewer than 4 usable points for the order-scaling fit; widen the "
                "power range");
        std::vector<double> lx, ly;
        for (const auto& p : row.points) {
            lx.push_back(std::log(p.base_power));
            ly.push_back(std::log(p.error));
        }
        row.fitted_exponent = fit_line(lx, ly).slope;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string bound_grid_csv(int mode_count, int m, const std::vector<double>& powers,
                           const std::vector<int>& orders, double factor) {
    std::ostringstream out;
    out.precision(17);
    out << "alpha2,Z,b,bound\n";
    for (double power : powers)
        for (int order : orders)
            out << power << ',' << order << ',' << factor << ','
                << z_order_bound(mode_count, m, power, factor, order) << '\n';
    return out.str();
}

}  // namespace scattomo
