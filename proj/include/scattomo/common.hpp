#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace scattomo {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

/// Compensated (Kahan) accumulator; used wherever weighted sums are
/// ill-conditioned (extrapolation weights grow like (b-1)^{1-Z}).
template <typename T>
struct KahanSum {
    T sum{};
    T comp{};

    void add(const T& value) {
        const T y = value - comp;
        const T t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    operator T() const { return sum; }
};

/// Deterministic RNG: splitmix64 stream + Box-Muller normals.
/// std::normal_distribution is implementation-defined, so seeded runs
/// would not be reproducible across standard libraries with it.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Mixes extra stream identifiers into the seed so that independent
    /// substreams (one per plan entry, per record) never collide.
    static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
        std::uint64_t h = seed;
        for (std::uint64_t id : ids) {
            h ^= id + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            h = mix(h);
        }
        return h;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform in (0, 1].
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * pi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * pi * u2);
    }

    /// Complex normal with E|z|^2 = 1 (each quadrature has variance 1/2).
    cplx next_cnormal() {
        const double s = std::sqrt(0.5);
        return {s * next_normal(), s * next_normal()};
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Least-squares line through (x_i, y_i); needs at least two points.
inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need at least two matching points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LinearFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware).
/// Work items must be independent; used for surface grids and study sweeps.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    unsigned t = threads > 0 ? static_cast<unsigned>(threads) : (hw > 0 ? hw : 1);
    if (t <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    t = std::min<unsigned>(t, static_cast<unsigned>(n));
    std::vector<std::thread> pool;
    pool.reserve(t);
    std::size_t chunk = (n + t - 1) / t;
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (unsigned w = 0; w < t; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace scattomo
