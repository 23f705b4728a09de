#pragma once

#include <string>
#include <vector>

#include "scattomo/common.hpp"
#include "scattomo/protocol.hpp"

namespace scattomo {

/// Geometric ladder of laser powers x_q = b^{q-1} |alpha|^2, q = 1..Z.
struct PowerLadder {
    double base_power = 0.0;
    double factor = 1.05;
    int order = 1;

    double power(int q) const;  // q = 1..order
    std::vector<double> powers() const;
};

/// Combination weights for Z first-order estimates. Exact weights grow like
/// (b-1)^{1-Z}, so each one is stored as a double pair (weight + correction);
/// identity checks and combinations must use both parts or the cancellation
/// identities drown in representation error.
struct WeightVector {
    int order = 1;
    double factor = 1.05;
    std::vector<double> weights;
    std::vector<double> corrections;
    double condition_sum = 0.0;  // sum |w_q|
    bool ill_conditioned = false;  // condition_sum > 1e8

    double weight(int q) const {  // q = 1..order
        return weights[static_cast<std::size_t>(q - 1)] +
               corrections[static_cast<std::size_t>(q - 1)];
    }
};

/// Weights from symbolically expanding the two-estimate recursion
/// E^(mu)(x) = [b^{mu-1} E^(mu-1)(x) - E^(mu-1)(bx)] / (b^{mu-1} - 1)
/// down to first-order coefficients.
WeightVector extrapolation_weights(int order, double factor);

/// |sum_q w_q - 1|; zero for exact weights.
double weight_sum_defect(const WeightVector& w);

/// |sum_q w_q b^{(q-1)v}| for v = 1..Z-1; zero for exact weights.
double order_cancellation_defect(const WeightVector& w, int v);

/// sum_q w_q E(x_q). Estimates must match the ladder powers to 1e-9
/// relative. cancellation_warning (optional) is set when the combination
/// loses more than three digits to cancellation.
cplx combine(const std::vector<Estimate>& estimates, const PowerLadder& ladder,
             bool* cancellation_warning = nullptr);

/// Z-order error bound for elastic scattering,
///   M^{3m/2} sum_{v>=Z} (x^v / v!) prod_{j=1}^{Z-1} |b^{Z-j} - b^v| / (b^{Z-j} - 1),
/// with term magnitudes summed (a valid upper bound). Adaptive truncation:
/// stops when a term falls below 1e-16 of the partial sum; refuses after
/// max_terms without convergence.
double z_order_bound(int mode_count, int m, double base_power, double factor, int order,
                     int max_terms = 500);

struct OrderStudyPoint {
    double base_power = 0.0;
    double error = 0.0;
};

struct OrderStudyRow {
    int order = 1;
    double fitted_exponent = 0.0;
    std::vector<OrderStudyPoint> points;
};

/// Noise-off elastic reconstruction at each ladder power, Z-order
/// combination, and a log-log fit of |error| against the base power.
/// Points with error below 1e-13 are dropped; each fit needs >= 4 left.
std::vector<OrderStudyRow> empirical_order_study(const TruncatedUnitary& oracle,
                                                 const TargetSpec& target, double factor,
                                                 const std::vector<int>& orders,
                                                 const std::vector<double>& base_powers);

/// CSV rows "alpha2,Z,b,bound" over a (power, order) grid.
std::string bound_grid_csv(int mode_count, int m, const std::vector<double>& powers,
                           const std::vector<int>& orders, double factor);

}  // namespace scattomo
