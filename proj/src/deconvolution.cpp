#include "scattomo/deconvolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>

#include "scattomo/quadrature.hpp"

namespace scattomo {

double hermite(int n, double x) {
    if (n < 0) throw std::invalid_argument("deconvolution: Hermite order must be >= 0");
    if (n > 200)
        throw std::invalid_argument("deconvolution: Hermite order capped at 200");
    double prev = 1.0;
    if (n == 0) return prev;
    double curr = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        const double next = 2.0 * x * curr - 2.0 * k * prev;
        prev = curr;
        curr = next;
    }
    if (!std::isfinite(curr))
        throw std::runtime_error("deconvolution: Hermite value overflows double range");
    return curr;
}

namespace {

constexpr int gl_points_per_panel = 8;
constexpr int stencil_width = 10;
constexpr int max_refinements = 9;

// Composite Gauss-Legendre nodes over the sample grid, with a fixed
// 10-point Lagrange stencil per node so samples can be interpolated with one
// dot product. The stencil order matters: interpolation error is a
// level-independent floor under the Richardson check, and the high-order
// term functionals amplify it roughly like 2^q. Node geometry depends only
// on (grid, level), so one plan serves every column of a surface pass.
struct NodePlan {
    std::vector<double> position;
    std::vector<double> weight;
    std::vector<int> stencil_start;
    std::vector<double> stencil_coeff;  // stencil_width per node

    std::size_t size() const { return position.size(); }
};

NodePlan build_node_plan(const GridAxis& grid, int panels) {
    const auto& rule = gauss_legendre(gl_points_per_panel);
    const double lo = grid.origin;
    const double hi = grid.last();
    const double panel_width = (hi - lo) / panels;

    NodePlan plan;
    plan.position.reserve(static_cast<std::size_t>(panels) * gl_points_per_panel);
    for (int p = 0; p < panels; ++p) {
        const double mid = lo + (p + 0.5) * panel_width;
        const double half = 0.5 * panel_width;
        for (int i = 0; i < gl_points_per_panel; ++i) {
            plan.position.push_back(mid + half * rule.nodes[static_cast<std::size_t>(i)]);
            plan.weight.push_back(half * rule.weights[static_cast<std::size_t>(i)]);
        }
    }

    plan.stencil_start.resize(plan.size());
    plan.stencil_coeff.resize(plan.size() * stencil_width);
    for (std::size_t n = 0; n < plan.size(); ++n) {
        const double t = plan.position[n];
        int cell = static_cast<int>(std::floor((t - grid.origin) / grid.step));
        int start = std::clamp(cell - (stencil_width / 2 - 1), 0,
                               std::max(0, grid.count - stencil_width));
        plan.stencil_start[n] = start;
        for (int a = 0; a < stencil_width; ++a) {
            double c = 1.0;
            const double xa = grid.point(start + a);
            for (int b = 0; b < stencil_width; ++b) {
                if (a == b) continue;
                const double xb = grid.point(start + b);
                c *= (t - xb) / (xa - xb);
            }
            plan.stencil_coeff[n * stencil_width + static_cast<std::size_t>(a)] = c;
        }
    }
    return plan;
}

std::vector<cplx> samples_at_nodes(const NodePlan& plan, std::span<const cplx> samples) {
    std::vector<cplx> out(plan.size());
    for (std::size_t n = 0; n < plan.size(); ++n) {
        cplx v = 0.0;
        const int start = plan.stencil_start[n];
        for (int a = 0; a < stencil_width; ++a)
            v += plan.stencil_coeff[n * stencil_width + static_cast<std::size_t>(a)] *
                 samples[static_cast<std::size_t>(start + a)];
        out[n] = v;
    }
    return out;
}

// Raw per-order integrals I_q = integral G_s(t - y) H_{2q}((t - y)/s) f(t) dt
// for one output point, all orders in a single node sweep. High orders sum
// contributions ~2^q larger than the result, so everything cancellation-prone
// runs in compensated extended precision; a plain double sum drowns orders
// beyond ~25 in roundoff, and the separable 3D passes amplify whatever floor
// this leaves into their successors' inputs.
void order_integrals(const NodePlan& plan, std::span<const cplx> node_values, double y, double s,
                     int q_max, std::span<cplx> out) {
    const std::size_t orders = static_cast<std::size_t>(q_max) + 1;
    std::vector<KahanSum<long double>> acc(2 * orders);
    const double norm = 1.0 / (std::sqrt(pi) * s);
    for (std::size_t n = 0; n < plan.size(); ++n) {
        const double u = (plan.position[n] - y) / s;
        const double g = std::exp(-u * u);
        if (g == 0.0) continue;
        const cplx base_d = plan.weight[n] * node_values[n] * (g * norm);
        const long double base_re = base_d.real();
        const long double base_im = base_d.imag();
        const long double two_u = 2.0L * static_cast<long double>(u);
        long double h_prev = 1.0L;   // H_{2q-2}
        long double h_curr = two_u;  // H_{2q-1}
        acc[0].add(base_re);         // H_0 = 1
        acc[1].add(base_im);
        for (int q = 1; q <= q_max; ++q) {
            const long double h_even = two_u * h_curr - 2.0L * (2 * q - 1) * h_prev;  // H_{2q}
            const long double h_odd = two_u * h_even - 2.0L * (2 * q) * h_curr;       // H_{2q+1}
            acc[2 * static_cast<std::size_t>(q)].add(base_re * h_even);
            acc[2 * static_cast<std::size_t>(q) + 1].add(base_im * h_even);
            h_prev = h_even;
            h_curr = h_odd;
        }
    }
    for (std::size_t q = 0; q < orders; ++q)
        out[q] = cplx(static_cast<double>(acc[2 * q].sum + acc[2 * q].comp),
                      static_cast<double>(acc[2 * q + 1].sum + acc[2 * q + 1].comp));
}

struct SeriesResult {
    std::vector<cplx> values;
    std::vector<double> increments;
    int orders_used = 0;
    bool converged = false;
    double quadrature_residual = 0.0;
    double resum_gap = 0.0;
};

// Shanks/Pade anti-limit of a partial-sum sequence via Wynn's epsilon
// algorithm. The inverse-kernel series is asymptotic for targets with
// exponential Fourier tails (Lorentzian-type resonances): plain truncation
// bottoms out at the smallest term, while the epsilon table keeps digesting
// the divergent tail. The reported gap is the spread between the chosen
// candidate and its predecessor column, a practical error gauge.
cplx wynn_limit(std::span<const cplx> partial, double* gap_out) {
    const std::size_t n = partial.size();
    if (n < 3) {
        if (gap_out) *gap_out = n >= 2 ? std::abs(partial[n - 1] - partial[n - 2]) : 0.0;
        return partial.back();
    }
    std::vector<cplx> prev(n + 1, cplx(0.0, 0.0));          // epsilon_{-1}
    std::vector<cplx> curr(partial.begin(), partial.end());  // epsilon_0
    cplx best = curr.back();
    cplx prev_candidate = curr.back();
    double best_gap = std::abs(curr[n - 1] - curr[n - 2]);
    for (std::size_t k = 1; k + 1 < n; ++k) {
        std::vector<cplx> next(curr.size() - 1);
        bool poisoned = false;
        for (std::size_t j = 0; j + 1 < curr.size(); ++j) {
            const cplx d = curr[j + 1] - curr[j];
            if (std::abs(d) == 0.0) {
                poisoned = true;
                next[j] = curr[j + 1];
            } else {
                next[j] = prev[j + 1] + 1.0 / d;
            }
        }
        prev = std::move(curr);
        curr = std::move(next);
        if (k % 2 == 0 && !poisoned) {
            const cplx candidate = curr.back();
            const double gap = std::abs(candidate - prev_candidate);
            if (gap < best_gap) {
                best_gap = gap;
                best = candidate;
            }
            prev_candidate = candidate;
        }
    }
    if (gap_out) *gap_out = best_gap;
    return best;
}

// Partial sums with three stop rules: the two-consecutive-increments
// relative tolerance; a cut when an increment falls to its own quadrature
// uncertainty; and the asymptotic smallest-term rule, rolling back to the
// running minimum when increments blow up again. The last two matter for
// the separable 3D passes, whose inputs inherit amplified noise from the
// preceding passes that no internal refinement check can see.
//
// When resummation is on, the reported stop still follows those rules (the
// increments are the honest series diagnostics) but the returned values are
// the epsilon-algorithm anti-limits over every order the quadrature
// uncertainty supports.
SeriesResult sum_series(std::span<const cplx> integrals, std::size_t points,
                        const KernelConfig& cfg, std::span<const double> noise) {
    const std::size_t orders = static_cast<std::size_t>(cfg.q_max) + 1;
    SeriesResult result;
    result.increments.assign(orders, 0.0);
    std::vector<cplx> partials(points * orders);
    std::vector<cplx> running(points, cplx(0.0, 0.0));
    double partial_scale = 1e-300;
    double min_sup = std::numeric_limits<double>::infinity();
    int argmin = 0;
    double coeff = 1.0;
    int stop = cfg.q_max;
    int wynn_last = cfg.q_max;
    bool converged = false;
    bool stopped = false;
    int below = 0;
    for (int q = 0; q <= cfg.q_max; ++q) {
        double sup = 0.0;
        for (std::size_t p = 0; p < points; ++p) {
            running[p] += coeff * integrals[p * orders + static_cast<std::size_t>(q)];
            partials[p * orders + static_cast<std::size_t>(q)] = running[p];
            sup = std::max(sup, std::abs(coeff * integrals[p * orders + static_cast<std::size_t>(q)]));
            partial_scale = std::max(partial_scale, std::abs(running[p]));
        }
        result.increments[static_cast<std::size_t>(q)] = sup;
        coeff /= -2.0 * static_cast<double>(q + 1);
        if (sup < min_sup) {
            min_sup = sup;
            argmin = q;
        }
        if (!noise.empty() && sup <= 4.0 * noise[static_cast<std::size_t>(q)] && q > 0)
            wynn_last = std::min(wynn_last, q);
        if (!stopped) {
            if (q >= 1 && sup < cfg.series_tol * partial_scale) {
                if (++below >= 2) {
                    stop = q;
                    converged = true;
                    stopped = true;
                }
            } else {
                below = 0;
            }
            if (!stopped && q >= 2 && !noise.empty() &&
                sup <= 4.0 * noise[static_cast<std::size_t>(q)]) {
                stop = q;
                converged = sup < cfg.series_tol * partial_scale;
                stopped = true;
            }
            if (!stopped && q >= 4 && sup > 4.0 * min_sup) {
                stop = argmin;
                converged = min_sup < cfg.series_tol * partial_scale;
                stopped = true;
            }
        }
    }

    result.values.resize(points);
    if (cfg.resum) {
        const std::size_t limit = static_cast<std::size_t>(std::max(stop, wynn_last)) + 1;
        double worst_gap = 0.0;
        for (std::size_t p = 0; p < points; ++p) {
            double gap = 0.0;
            result.values[p] =
                wynn_limit(std::span<const cplx>(partials.data() + p * orders, limit), &gap);
            worst_gap = std::max(worst_gap, gap);
        }
        result.resum_gap = worst_gap;
    } else {
        for (std::size_t p = 0; p < points; ++p)
            result.values[p] = partials[p * orders + static_cast<std::size_t>(stop)];
    }
    result.increments.resize(static_cast<std::size_t>(stop) + 1);
    result.orders_used = stop;
    result.converged = converged;
    return result;
}

// Node plans per refinement level, built on first use and shared by every
// column of a pass.
class PlanCache {
public:
    PlanCache(const GridAxis& grid, double kernel_sigma) : grid_(grid) {
        const double range = grid.last() - grid.origin;
        base_panels_ = std::max(4, static_cast<int>(std::ceil(range / (0.5 * kernel_sigma))));
        levels_.resize(max_refinements);
    }

    const NodePlan& level(int l) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto& slot = levels_[static_cast<std::size_t>(l)];
        if (!slot) slot = std::make_unique<NodePlan>(build_node_plan(grid_, base_panels_ << l));
        return *slot;
    }

    const GridAxis& domain() const { return grid_; }

private:
    GridAxis grid_;
    int base_panels_ = 4;
    std::vector<std::unique_ptr<NodePlan>> levels_;
    std::mutex mutex_;
};

// One column: refine the term quadrature until the orders the series
// actually uses are Richardson-stable. Orders past the stop index do not
// enter the result, so their (unresolvably oscillatory) integrals must not
// hold the refinement hostage.
SeriesResult deconvolve_column(PlanCache& plans,
                               std::span<const cplx> samples, std::span<const double> eval_points,
                               double kernel_sigma, const KernelConfig& cfg) {
    const std::size_t points = eval_points.size();

    // The grid only supports orders whose oscillatory span sqrt(4q+2) s fits
    // between the evaluation points and the nearest edge; beyond that the
    // truncated term integrals turn into edge artifacts.
    const GridAxis& grid = plans.domain();
    double edge_distance = std::numeric_limits<double>::infinity();
    for (double y : eval_points)
        edge_distance = std::min(edge_distance, std::min(y - grid.origin, grid.last() - y));
    const double span = edge_distance / kernel_sigma;
    const int q_domain = std::max(2, static_cast<int>((span * span - 2.0) / 4.0));
    KernelConfig eff = cfg;
    eff.q_max = std::min(cfg.q_max, q_domain);
    const std::size_t orders = static_cast<std::size_t>(eff.q_max) + 1;

    double input_scale = 1e-300;
    for (const cplx& v : samples) input_scale = std::max(input_scale, std::abs(v));

    std::vector<cplx> prev_int(points * orders), curr_int(points * orders);
    std::vector<double> noise(orders, 0.0);
    double residual = std::numeric_limits<double>::infinity();
    double prev_residual = std::numeric_limits<double>::infinity();
    for (int level = 0; level < max_refinements; ++level) {
        const NodePlan& plan = plans.level(level);
        const auto node_values = samples_at_nodes(plan, samples);
        for (std::size_t p = 0; p < points; ++p)
            order_integrals(plan, node_values, eval_points[p], kernel_sigma, eff.q_max,
                            std::span<cplx>(curr_int.data() + p * orders, orders));
        if (level > 0) {
            // Per-order disagreement with the previous level doubles as the
            // uncertainty estimate that feeds the smallest-term stop.
            double coeff = 1.0;
            for (std::size_t q = 0; q < orders; ++q) {
                double sup = 0.0;
                for (std::size_t p = 0; p < points; ++p)
                    sup = std::max(sup, std::abs(curr_int[p * orders + q] - prev_int[p * orders + q]));
                noise[q] = std::abs(coeff) * sup;
                coeff /= -2.0 * static_cast<double>(q + 1);
            }
            SeriesResult curr_series = sum_series(
                curr_int, points, eff, std::span<const double>(noise.data(), orders));
            // Only the orders the candidate result sums need to be stable;
            // a coarser level that failed to stop must not widen the window.
            residual = 0.0;
            for (int q = 0; q <= curr_series.orders_used; ++q)
                residual = std::max(residual, noise[static_cast<std::size_t>(q)]);
            residual /= input_scale;
            curr_series.quadrature_residual = residual;
            if (residual <= cfg.quad_tol) return curr_series;
            // A residual that refinement no longer halves is the
            // interpolation floor of the gridded input, not quadrature
            // error; finer nodes cannot improve on it.
            if (level >= 2 && residual > 0.5 * prev_residual) return curr_series;
            prev_residual = residual;
        }
        std::swap(prev_int, curr_int);
    }
    std::ostringstream msg;
    msg << "deconvolution: term quadrature did not stabilize under refinement (relative residual "
        << residual << " > " << cfg.quad_tol << ")";
    throw std::runtime_error(msg.str());
}

void check_kernel(const KernelConfig& cfg) {
    if (!(cfg.sigma > 0.0)) throw std::invalid_argument("deconvolution: sigma must be > 0");
    if (cfg.q_max < 0 || cfg.q_max > 100)
        throw std::invalid_argument("deconvolution: q_max must be in 0..100");
    if (!(cfg.series_tol > 0.0) || !(cfg.quad_tol > 0.0))
        throw std::invalid_argument("deconvolution: tolerances must be > 0");
}

bool edges_decayed(std::span<const cplx> samples) {
    double peak = 0.0;
    for (const cplx& v : samples) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) return true;
    return std::max(std::abs(samples.front()), std::abs(samples.back())) < 1e-3 * peak;
}

// Magnitude-weighted rms width; the guard against deconvolving features the
// inverse multiplier would amplify beyond recovery.
double feature_width(std::span<const cplx> samples, const GridAxis& grid) {
    double mass = 0.0, mean = 0.0;
    for (int i = 0; i < grid.count; ++i) {
        const double m = std::abs(samples[static_cast<std::size_t>(i)]);
        mass += m;
        mean += m * grid.point(i);
    }
    if (mass == 0.0) return std::numeric_limits<double>::infinity();
    mean /= mass;
    double var = 0.0;
    for (int i = 0; i < grid.count; ++i) {
        const double d = grid.point(i) - mean;
        var += std::abs(samples[static_cast<std::size_t>(i)]) * d * d;
    }
    return std::sqrt(2.0 * var / mass);
}

}  // namespace

DeconvolutionReport deconvolve_1d(const std::vector<cplx>& samples, const GridAxis& grid,
                                  const KernelConfig& cfg) {
    check_kernel(cfg);
    if (grid.count < stencil_width || static_cast<int>(samples.size()) != grid.count)
        throw std::invalid_argument("deconvolution: need >= 10 samples matching the grid");

    const int margin = static_cast<int>(std::ceil(6.0 * cfg.sigma / grid.step - 1e-12));
    const int lo = margin;
    const int hi = grid.count - 1 - margin;
    if (lo > hi)
        throw std::invalid_argument(
            "deconvolution: grid must extend 6 sigma beyond every evaluation point; enlarge the "
            "sampled range");

    DeconvolutionReport report;
    report.grid = GridAxis{grid.point(lo), grid.step, hi - lo + 1};
    report.edge_warning = !edges_decayed(samples);
    report.width_warning = feature_width(samples, grid) < 1.3 * cfg.sigma;

    std::vector<double> eval_points(static_cast<std::size_t>(report.grid.count));
    for (int i = 0; i < report.grid.count; ++i)
        eval_points[static_cast<std::size_t>(i)] = report.grid.point(i);

    PlanCache plans(grid, cfg.sigma);
    SeriesResult series = deconvolve_column(plans, samples, eval_points, cfg.sigma, cfg);
    report.values = std::move(series.values);
    report.increments = std::move(series.increments);
    report.orders_used = series.orders_used;
    report.converged = series.converged;
    report.quadrature_residual = series.quadrature_residual;
    report.resummation_gap = series.resum_gap;
    return report;
}

namespace {

// Applies one separable pass along `axis` of a (khat, delta_p, delta_k)
// block, writing a block with that axis replaced by the evaluation axis.
struct PassInput {
    const std::vector<cplx>* values;
    GridAxis khat, delta_p, delta_k;
};

PassReport run_pass(PassInput& block, int axis, const GridAxis& eval_axis, double kernel_sigma,
                    double factor, const KernelConfig& cfg, std::vector<cplx>& out_values) {
    const GridAxis in_axis = axis == 0 ? block.khat : (axis == 1 ? block.delta_p : block.delta_k);
    const int nk = block.khat.count, np = block.delta_p.count, ndk = block.delta_k.count;

    std::vector<double> eval_points(static_cast<std::size_t>(eval_axis.count));
    for (int i = 0; i < eval_axis.count; ++i)
        eval_points[static_cast<std::size_t>(i)] = eval_axis.point(i);

    PlanCache plans(in_axis, kernel_sigma);

    // Column geometry: iterate over the two fixed axes.
    const int fixed_a = axis == 0 ? np : nk;
    const int fixed_b = axis == 2 ? np : ndk;
    auto index_in = [&](int ia, int ib, int j) {
        int ik, ip, idk;
        if (axis == 0) { ik = j; ip = ia; idk = ib; }
        else if (axis == 1) { ik = ia; ip = j; idk = ib; }
        else { ik = ia; ip = ib; idk = j; }
        return (static_cast<std::size_t>(ik) * static_cast<std::size_t>(np) +
                static_cast<std::size_t>(ip)) *
                   static_cast<std::size_t>(ndk) +
               static_cast<std::size_t>(idk);
    };
    const int out_nk = axis == 0 ? eval_axis.count : nk;
    const int out_np = axis == 1 ? eval_axis.count : np;
    const int out_ndk = axis == 2 ? eval_axis.count : ndk;
    auto index_out = [&](int ia, int ib, int j) {
        int ik, ip, idk;
        if (axis == 0) { ik = j; ip = ia; idk = ib; }
        else if (axis == 1) { ik = ia; ip = j; idk = ib; }
        else { ik = ia; ip = ib; idk = j; }
        return (static_cast<std::size_t>(ik) * static_cast<std::size_t>(out_np) +
                static_cast<std::size_t>(ip)) *
                   static_cast<std::size_t>(out_ndk) +
               static_cast<std::size_t>(idk);
    };

    out_values.assign(static_cast<std::size_t>(out_nk) * static_cast<std::size_t>(out_np) *
                          static_cast<std::size_t>(out_ndk),
                      cplx(0.0, 0.0));

    PassReport report;
    report.converged = true;
    report.increments.assign(static_cast<std::size_t>(cfg.q_max) + 1, 0.0);
    std::mutex merge;
    parallel_for(static_cast<std::size_t>(fixed_a) * static_cast<std::size_t>(fixed_b),
                 cfg.threads, [&](std::size_t flat) {
        const int ia = static_cast<int>(flat) / fixed_b;
        const int ib = static_cast<int>(flat) % fixed_b;
        std::vector<cplx> column(static_cast<std::size_t>(in_axis.count));
        for (int j = 0; j < in_axis.count; ++j)
            column[static_cast<std::size_t>(j)] = (*block.values)[index_in(ia, ib, j)];
        SeriesResult series = deconvolve_column(plans, column, eval_points, kernel_sigma, cfg);
        for (int j = 0; j < eval_axis.count; ++j)
            out_values[index_out(ia, ib, j)] = factor * series.values[static_cast<std::size_t>(j)];
        std::lock_guard<std::mutex> lock(merge);
        report.orders_used = std::max(report.orders_used, series.orders_used);
        report.converged = report.converged && series.converged;
        report.quadrature_residual =
            std::max(report.quadrature_residual, series.quadrature_residual);
        report.resummation_gap = std::max(report.resummation_gap, series.resum_gap);
        for (std::size_t q = 0; q < series.increments.size(); ++q)
            report.increments[q] = std::max(report.increments[q], series.increments[q]);
    });
    report.increments.resize(static_cast<std::size_t>(report.orders_used) + 1);
    return report;
}

void require_coverage(const GridAxis& have, const GridAxis& want, double margin,
                      const char* name) {
    if (have.origin <= want.origin - margin + 1e-9 * have.step &&
        have.last() >= want.last() + margin - 1e-9 * have.step)
        return;
    std::ostringstream msg;
    msg << "deconvolution: measured surface must cover the " << name << " axis over ["
        << want.origin - margin << ", " << want.last() + margin << "] but spans [" << have.origin
        << ", " << have.last() << "]";
    throw std::invalid_argument(msg.str());
}

}  // namespace

Deconvolution3DReport deconvolve_t_3d(const SampledSurface& measured, const GridAxis& khat_axis,
                                      const GridAxis& delta_p_axis, const GridAxis& delta_k_axis,
                                      const KernelConfig& cfg) {
    check_kernel(cfg);
    if (std::abs(cfg.sigma - measured.sigma) > 1e-9 * cfg.sigma)
        throw std::invalid_argument(
            "deconvolution: kernel sigma must match the measured surface sigma");
    const double s = cfg.sigma;
    require_coverage(measured.khat, khat_axis, 6.0 * s / std::sqrt(2.0), "khat");
    require_coverage(measured.delta_p, delta_p_axis, 6.0 * s, "delta_p");
    require_coverage(measured.delta_k, delta_k_axis, 6.0 * s, "delta_k");

    Deconvolution3DReport report;
    report.edge_warning = false;
    report.width_warning = false;

    PassInput block{&measured.values, measured.khat, measured.delta_p, measured.delta_k};
    std::vector<cplx> after_khat, after_dp, after_dk;

    // Plain smallest-term truncation throughout: each pass's error must stay
    // smooth across the remaining axes or the later passes amplify it, and
    // per-point anti-limits are anything but smooth.
    KernelConfig smooth = cfg;
    smooth.resum = false;

    report.passes[1] = run_pass(block, 1, delta_p_axis, s, 1.0, smooth, after_dp);
    block.values = &after_dp;
    block.delta_p = delta_p_axis;
    report.passes[2] = run_pass(block, 2, delta_k_axis, s, 1.0, smooth, after_dk);
    block.values = &after_dk;
    block.delta_k = delta_k_axis;
    // khat pass carries the sqrt(2)-compressed kernel.
    report.passes[0] = run_pass(block, 0, khat_axis, s / std::sqrt(2.0), 1.0 / std::sqrt(2.0),
                                smooth, after_khat);
    report.result.values = std::move(after_khat);

    report.result.khat = khat_axis;
    report.result.delta_p = delta_p_axis;
    report.result.delta_k = delta_k_axis;
    report.result.sigma = measured.sigma;
    report.result.gamma = measured.gamma;
    const double overall = 1.0 / (std::sqrt(pi) * s);
    for (cplx& v : report.result.values) v *= overall;

    report.converged =
        report.passes[0].converged && report.passes[1].converged && report.passes[2].converged;

    // Edge decay check on the measured block boundaries.
    double peak = 0.0, edge = 0.0;
    for (int ik = 0; ik < measured.khat.count; ++ik)
        for (int ip = 0; ip < measured.delta_p.count; ++ip)
            for (int idk = 0; idk < measured.delta_k.count; ++idk) {
                const double m = std::abs(measured.at(ik, ip, idk));
                peak = std::max(peak, m);
                const bool boundary = ip == 0 || ip == measured.delta_p.count - 1 || idk == 0 ||
                                      idk == measured.delta_k.count - 1;
                if (boundary) edge = std::max(edge, m);
            }
    report.edge_warning = peak > 0.0 && edge >= 1e-3 * peak;
    return report;
}

RoundtripReport convolution_forward_check(const QubitParams& params, const WavePacketSpec& spec,
                                          const RoundtripConfig& cfg) {
    const double s = spec.sigma;
    const GridAxis eval_khat{cfg.khat, cfg.step, 1};
    const GridAxis eval_delta = centered_axis(0.0, cfg.delta_halfwidth, cfg.step);

    const GridAxis meas_khat =
        centered_axis(cfg.khat, cfg.margin_sigmas * s / std::sqrt(2.0), cfg.step);
    const GridAxis meas_delta =
        centered_axis(0.0, cfg.delta_halfwidth + cfg.margin_sigmas * s, cfg.step);

    SampledSurface measured =
        t_surface(meas_khat, meas_delta, meas_delta, spec, params, cfg.forward_quad, cfg.threads);

    KernelConfig kernel;
    kernel.sigma = s;
    kernel.q_max = cfg.q_max;
    kernel.series_tol = cfg.series_tol;
    kernel.threads = cfg.threads;

    RoundtripReport report;
    report.deconvolution = deconvolve_t_3d(measured, eval_khat, eval_delta, eval_delta, kernel);
    report.recovered = report.deconvolution.result;
    for (cplx& v : report.recovered.values) v *= params.gamma;

    report.analytic = report.recovered;
    for (int ip = 0; ip < eval_delta.count; ++ip)
        for (int idk = 0; idk < eval_delta.count; ++idk) {
            const double dp = eval_delta.point(ip);
            const double dk = eval_delta.point(idk);
            report.analytic.at(0, ip, idk) =
                params.gamma * tmono(cfg.khat - dp, cfg.khat + dp, cfg.khat - dk, cfg.khat + dk,
                                     params);
        }

    double sup_ana = 0.0, sup_ana2 = 0.0, sup_diff = 0.0, sup_diff2 = 0.0;
    for (std::size_t i = 0; i < report.recovered.values.size(); ++i) {
        const cplx rec = report.recovered.values[i];
        const cplx ana = report.analytic.values[i];
        sup_ana = std::max(sup_ana, std::abs(ana));
        sup_ana2 = std::max(sup_ana2, std::norm(ana));
        sup_diff = std::max(sup_diff, std::abs(rec - ana));
        sup_diff2 = std::max(sup_diff2, std::abs(std::norm(rec) - std::norm(ana)));
    }
    report.rel_sup_complex = sup_diff / sup_ana;
    report.rel_sup_abs2 = sup_diff2 / sup_ana2;
    return report;
}

}  // namespace scattomo
