#include <doctest.h>

#include <cmath>
#include <functional>

#include "scattomo/waveguide.hpp"

using namespace scattomo;

namespace {

const QubitParams qubit{20.0, 1.0};

// Composite Simpson for complex integrands; test-only oracle.
cplx simpson(const std::function<cplx(double)>& f, double a, double b, int intervals) {
    const double h = (b - a) / intervals;
    cplx sum = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) sum += f(a + h * i) * ((i % 2) ? 4.0 : 2.0);
    return sum * h / 3.0;
}

double gaussian(double x, double sigma) {
    return std::exp(-x * x / (sigma * sigma)) / (std::sqrt(3.14159265358979323846) * sigma);
}

}  // namespace

TEST_CASE("single-photon coefficients") {
    CHECK(reflection(qubit.omega0, qubit) == cplx(-1.0, 0.0));
    CHECK(transmission(qubit.omega0, qubit) == cplx(0.0, 0.0));
    CHECK(std::abs(transmission(qubit.omega0 + 1e7, qubit) - cplx(1.0, 0.0)) < 1e-6);

    for (int i = 0; i <= 10000; ++i) {
        const double omega = qubit.omega0 - 15.0 + 0.003 * i;
        const double defect =
            std::abs(std::norm(reflection(omega, qubit)) + std::norm(transmission(omega, qubit)) -
                     1.0);
        REQUIRE(defect < 1e-14);
    }
}

TEST_CASE("monochromatic two-photon nonlinearity") {
    const double w0 = qubit.omega0;
    CHECK(std::abs(tmono(w0, w0, w0, w0, qubit) - cplx(0.0, 2.0 / pi)) < 1e-15);

    const cplx a = tmono(w0 + 0.3, w0 - 1.1, w0 + 0.7, w0 - 0.2, qubit);
    CHECK(std::abs(tmono(w0 - 1.1, w0 + 0.3, w0 + 0.7, w0 - 0.2, qubit) - a) <
          1e-15 * std::abs(a));
    CHECK(std::abs(tmono(w0 + 0.3, w0 - 1.1, w0 - 0.2, w0 + 0.7, qubit) - a) <
          1e-15 * std::abs(a));

    // 1/detuning falloff in the first outgoing frequency.
    const double far = std::abs(tmono(w0 + 100.0, w0, w0, w0, qubit));
    const double farther = std::abs(tmono(w0 + 200.0, w0, w0, w0, qubit));
    CHECK(far / farther == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("measured single-photon element") {
    SUBCASE("monochromatic limit recovers t_k") {
        WavePacketSpec narrow{1e-3};
        for (double detuning : {0.5, 1.0, 2.0, 4.0}) {
            const double k = qubit.omega0 + detuning;
            const cplx s = measured_single(k, k, narrow, qubit);
            const cplx t = transmission(k, qubit);
            CHECK(std::abs(s - t) < 1e-4 * std::abs(t));
        }
    }

    SUBCASE("off-diagonal Gaussian suppression") {
        WavePacketSpec spec{0.5};
        const double k = qubit.omega0 + 1.0;
        const cplx diag = measured_single(k, k, spec, qubit);
        const cplx off = measured_single(k + 10.0 * spec.sigma, k, spec, qubit);
        CHECK(std::abs(off) < std::exp(-24.0) * std::abs(diag));
    }

    SUBCASE("matches a dense trapezoid integration") {
        WavePacketSpec spec{0.8};
        const double k = qubit.omega0;
        const double center = k;
        const int n = 200001;
        const double lo = center - 12.0 * spec.sigma;
        const double step = 24.0 * spec.sigma / (n - 1);
        cplx sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double kp = lo + step * i;
            const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            sum += w * gaussian(kp - center, spec.sigma) * transmission(kp, qubit) * step;
        }
        const cplx mine = measured_single(k, k, spec, qubit);
        CHECK(std::abs(mine - sum) < 1e-8 * std::abs(sum));
    }

    SUBCASE("rejects backward momenta") {
        CHECK_THROWS_AS(measured_single(-1.0, 1.0, WavePacketSpec{0.1}, qubit),
                        std::invalid_argument);
    }
}

TEST_CASE("measured two-photon element") {
    WavePacketSpec spec{0.8};

    SUBCASE("matches an independent brute-force quadrature") {
        const TCoordinates coords{qubit.omega0 + 1.5, 0.0, 0.0, 0.0};
        const double sigma = spec.sigma;
        // Straight transcription of the forward model: three nested Simpson
        // passes over the explicit Gaussian kernel, checked by doubling the
        // resolution.
        auto nested = [&](int n) {
            auto innermost = [&](double khp, double dpp) {
                return simpson(
                    [&](double dkp) {
                        return gaussian(dkp - coords.delta_k, sigma) *
                               tmono(khp - dpp, khp + dpp, khp - dkp, khp + dkp, qubit);
                    },
                    coords.delta_k - 8.0 * sigma, coords.delta_k + 8.0 * sigma, n);
            };
            auto middle = [&](double khp) {
                return simpson(
                    [&](double dpp) {
                        return gaussian(dpp - coords.delta_p, sigma) * innermost(khp, dpp);
                    },
                    coords.delta_p - 8.0 * sigma, coords.delta_p + 8.0 * sigma, n);
            };
            const cplx outer = simpson(
                [&](double khp) {
                    return gaussian(std::sqrt(2.0) * (khp - coords.khat), sigma) * middle(khp);
                },
                coords.khat - 6.0 * sigma, coords.khat + 6.0 * sigma, n);
            return 2.0 * sigma * std::sqrt(pi) * outer;
        };
        const cplx coarse = nested(96);
        const cplx reference = nested(192);
        REQUIRE(std::abs(coarse - reference) < 1e-7 * std::abs(reference));
        const cplx mine = measured_T(coords, spec, qubit);
        CHECK(std::abs(mine - reference) < 1e-6 * std::abs(reference));
    }

    SUBCASE("off-shell prefactor is the stated Gaussian") {
        const double mismatch = 8.0 * spec.sigma;
        const TCoordinates off{qubit.omega0 + 1.5, 0.4, -0.3, mismatch};
        const TCoordinates shifted{qubit.omega0 + 1.5 + 0.25 * mismatch, 0.4, -0.3, 0.0};
        const cplx expect = std::exp(-8.0) * measured_T(shifted, spec, qubit);
        CHECK(std::abs(measured_T(off, spec, qubit) - expect) < 1e-12 * std::abs(expect));
    }

    SUBCASE("nonlinearity grows linearly with the packet width") {
        std::vector<double> ls, lm;
        for (double sigma : {0.01, 0.02, 0.05, 0.1}) {
            GridAxis khat{qubit.omega0 + 1.5, 1.0, 1};
            GridAxis axis = centered_axis(0.0, 3.0, 0.25);
            SampledSurface s = t_surface(khat, axis, axis, WavePacketSpec{sigma}, qubit);
            ls.push_back(std::log(sigma));
            lm.push_back(std::log(s.max_abs()));
        }
        const double slope = fit_line(ls, lm).slope;
        CHECK(slope == doctest::Approx(1.0).epsilon(0.1));
    }
}

TEST_CASE("t_surface") {
    WavePacketSpec spec{0.8};
    GridAxis khat{qubit.omega0 + 1.5, 1.0, 1};
    GridAxis axis = centered_axis(0.0, 3.0, 0.5);
    SampledSurface surface = t_surface(khat, axis, axis, spec, qubit);

    SUBCASE("bose symmetry in both momentum differences") {
        for (int ip = 0; ip < axis.count; ++ip)
            for (int idk = 0; idk < axis.count; ++idk) {
                const cplx v = surface.at(0, ip, idk);
                CHECK(std::abs(v - surface.at(0, axis.count - 1 - ip, idk)) <=
                      1e-10 * surface.max_abs());
                CHECK(std::abs(v - surface.at(0, ip, axis.count - 1 - idk)) <=
                      1e-10 * surface.max_abs());
            }
    }

    SUBCASE("bounded peak in the central region") {
        double peak = 0.0;
        double peak_dp = 0.0, peak_dk = 0.0;
        for (int ip = 0; ip < axis.count; ++ip)
            for (int idk = 0; idk < axis.count; ++idk) {
                const double mag = std::abs(surface.at(0, ip, idk));
                CHECK(std::isfinite(mag));
                if (mag > peak) {
                    peak = mag;
                    peak_dp = axis.point(ip);
                    peak_dk = axis.point(idk);
                }
            }
        CHECK(peak > 0.0);
        CHECK(std::abs(peak_dp) <= 2.0);
        CHECK(std::abs(peak_dk) <= 2.0);
    }

    SUBCASE("single-point grid equals the direct call") {
        GridAxis one_p{0.5, 1.0, 1};
        GridAxis one_k{-0.25, 1.0, 1};
        SampledSurface tiny = t_surface(khat, one_p, one_k, spec, qubit);
        const cplx direct = measured_T({khat.origin, -0.25, 0.5, 0.0}, spec, qubit);
        CHECK(std::abs(tiny.at(0, 0, 0) - direct) < 1e-13);
    }
}

TEST_CASE("surface CSV and JSON round-trip") {
    GridAxis khat{21.5, 1.0, 1};
    GridAxis dp = centered_axis(0.0, 1.0, 0.5);
    GridAxis dk = centered_axis(0.0, 0.5, 0.5);
    SampledSurface surface = t_surface(khat, dp, dk, WavePacketSpec{0.5}, qubit);

    const std::string csv = surface_to_csv(surface);
    const std::string meta = surface_meta_to_json(surface);
    CHECK(csv.rfind("khat,delta_k,delta_p,re,im,abs2\n", 0) == 0);

    SampledSurface loaded = surface_from_csv(meta, csv);
    REQUIRE(loaded.values.size() == surface.values.size());
    for (std::size_t i = 0; i < surface.values.size(); ++i)
        CHECK(loaded.values[i] == surface.values[i]);
    CHECK(loaded.sigma == surface.sigma);

    CHECK(surface_to_csv(surface) == csv);  // byte-identical re-serialization
}
