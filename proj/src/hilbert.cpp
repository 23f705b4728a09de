#include "scattomo/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace scattomo {

namespace {

void validate(const BasisSpec& spec) {
    if (spec.mode_count < 1 || spec.photon_cutoff < 1)
        throw std::invalid_argument("hilbert: BasisSpec needs mode_count >= 1 and photon_cutoff >= 1");
}

int require_mode(const StateVector& state, int mode) {
    if (!state.basis) throw std::invalid_argument("hilbert: state has no basis");
    if (mode < 0 || mode >= state.basis->mode_count())
        throw std::invalid_argument("hilbert: mode index out of range");
    return mode;
}

}  // namespace

Basis::Basis(BasisSpec spec, std::uint64_t state_cap) : spec_(spec) {
    validate(spec);
    const int modes = spec.mode_count;
    const int cutoff = spec.photon_cutoff;

    // compositions(t, m) = number of occupation vectors of m modes summing
    // to t; saturating accumulation so the cap check below stays exact.
    constexpr std::uint64_t sat = ~std::uint64_t(0) / 2;
    comp_table_.assign(static_cast<std::size_t>(cutoff + 1) * static_cast<std::size_t>(modes + 1), 0);
    auto comp_at = [&](int t, int m) -> std::uint64_t& {
        return comp_table_[static_cast<std::size_t>(t) * static_cast<std::size_t>(modes + 1) +
                           static_cast<std::size_t>(m)];
    };
    for (int t = 0; t <= cutoff; ++t) comp_at(t, 0) = (t == 0) ? 1 : 0;
    for (int m = 1; m <= modes; ++m) {
        for (int t = 0; t <= cutoff; ++t) {
            std::uint64_t v = comp_at(t, m - 1);
            if (t > 0) v += comp_at(t - 1, m);
            comp_at(t, m) = std::min(v, sat);
        }
    }

    std::uint64_t total = 0;
    sector_offsets_.resize(static_cast<std::size_t>(cutoff) + 2);
    for (int n = 0; n <= cutoff; ++n) {
        sector_offsets_[static_cast<std::size_t>(n)] = static_cast<std::size_t>(total);
        total += comp_at(n, modes);
        if (total > state_cap) {
            std::ostringstream msg;
            msg << "hilbert: basis with mode_count=" << modes << ", photon_cutoff=" << cutoff
                << " exceeds the state cap of " << state_cap
                << " states; reduce the cutoff or mode count, or raise the cap";
            throw std::invalid_argument(msg.str());
        }
    }
    sector_offsets_[static_cast<std::size_t>(cutoff) + 1] = static_cast<std::size_t>(total);
    dim_ = static_cast<std::size_t>(total);

    occupations_.resize(dim_ * static_cast<std::size_t>(modes));
    totals_.resize(dim_);
    std::vector<int> occ(static_cast<std::size_t>(modes), 0);
    std::size_t cursor = 0;
    auto emit = [&](int n) {
        std::copy(occ.begin(), occ.end(),
                  occupations_.begin() + static_cast<std::ptrdiff_t>(cursor * static_cast<std::size_t>(modes)));
        totals_[cursor] = n;
        ++cursor;
    };
    // Per sector: first mode occupation descending, recursively.
    auto gen = [&](auto&& self, int j, int remaining, int n) -> void {
        if (j == modes - 1) {
            occ[static_cast<std::size_t>(j)] = remaining;
            emit(n);
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            occ[static_cast<std::size_t>(j)] = v;
            self(self, j + 1, remaining - v, n);
        }
    };
    for (int n = 0; n <= cutoff; ++n) gen(gen, 0, n, n);
}

std::size_t Basis::index_of(std::span<const int> occ) const {
    const int modes = spec_.mode_count;
    if (static_cast<int>(occ.size()) != modes)
        throw std::invalid_argument("hilbert: occupation vector length mismatch");
    int n = 0;
    for (int v : occ) {
        if (v < 0) throw std::invalid_argument("hilbert: negative occupation");
        n += v;
    }
    if (n > spec_.photon_cutoff)
        throw std::invalid_argument("hilbert: occupation exceeds photon cutoff");
    std::uint64_t rank = 0;
    int remaining = n;
    for (int j = 0; j + 1 < modes; ++j) {
        const int c = occ[static_cast<std::size_t>(j)];
        for (int v = remaining; v > c; --v)
            rank += compositions(remaining - v, modes - 1 - j);
        remaining -= c;
    }
    return sector_begin(n) + static_cast<std::size_t>(rank);
}

double poisson_tail(double power, int cutoff) {
    if (power < 0.0) throw std::invalid_argument("hilbert: mean photon number must be >= 0");
    double term = std::exp(-power);
    double cdf = term;
    for (int k = 1; k <= cutoff; ++k) {
        term *= power / k;
        cdf += term;
    }
    return std::max(0.0, 1.0 - cdf);
}

int recommended_cutoff(double power, int m, double tol) {
    int n = std::max(1, m + 2);
    while (poisson_tail(power, n) >= tol && n < 10'000) ++n;
    return n;
}

StateVector vacuum_state(const BasisPtr& basis) {
    StateVector state;
    state.basis = basis;
    state.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis->dimension()));
    state.amplitudes(0) = 1.0;
    return state;
}

StateVector coherent_state(const BasisPtr& basis, const std::vector<cplx>& alphas,
                           double truncation_tol) {
    if (!basis) throw std::invalid_argument("hilbert: null basis");
    const int modes = basis->mode_count();
    if (static_cast<int>(alphas.size()) != modes)
        throw std::invalid_argument("hilbert: one displacement per mode required");

    double power = 0.0;
    for (const cplx& a : alphas) power += std::norm(a);

    StateVector state;
    state.basis = basis;
    state.amplitudes.resize(static_cast<Eigen::Index>(basis->dimension()));
    const double log_prefactor = -0.5 * power;
    double kept = 0.0;
    for (std::size_t i = 0; i < basis->dimension(); ++i) {
        auto occ = basis->occupation(i);
        cplx amp = std::exp(log_prefactor);
        for (int j = 0; j < modes; ++j) {
            for (int q = 1; q <= occ[static_cast<std::size_t>(j)]; ++q)
                amp *= alphas[static_cast<std::size_t>(j)] / std::sqrt(static_cast<double>(q));
        }
        state.amplitudes(static_cast<Eigen::Index>(i)) = amp;
        kept += std::norm(amp);
    }
    state.discarded_tail = std::max(0.0, 1.0 - kept);
    if (state.discarded_tail >= truncation_tol) {
        std::ostringstream msg;
        msg << "hilbert: coherent state with mean photon number " << power
            << " loses tail weight " << state.discarded_tail << " at photon_cutoff "
            << basis->photon_cutoff() << " (tolerance " << truncation_tol
            << "); photon_cutoff >= " << recommended_cutoff(power, 0, truncation_tol)
            << " is required";
        throw std::invalid_argument(msg.str());
    }
    state.amplitudes /= std::sqrt(kept);
    return state;
}

StateVector apply_annihilation(const StateVector& state, int mode) {
    require_mode(state, mode);
    const Basis& basis = *state.basis;
    StateVector out;
    out.basis = state.basis;
    out.discarded_tail = state.discarded_tail;
    out.amplitudes = Eigen::VectorXcd::Zero(state.amplitudes.size());
    std::vector<int> occ(static_cast<std::size_t>(basis.mode_count()));
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        auto src = basis.occupation(i);
        const int n = src[static_cast<std::size_t>(mode)];
        if (n == 0) continue;
        std::copy(src.begin(), src.end(), occ.begin());
        --occ[static_cast<std::size_t>(mode)];
        const std::size_t target = basis.index_of(occ);
        out.amplitudes(static_cast<Eigen::Index>(target)) +=
            std::sqrt(static_cast<double>(n)) * state.amplitudes(static_cast<Eigen::Index>(i));
    }
    return out;
}

StateVector apply_creation(const StateVector& state, int mode) {
    require_mode(state, mode);
    const Basis& basis = *state.basis;
    StateVector out;
    out.basis = state.basis;
    out.discarded_tail = state.discarded_tail;
    out.amplitudes = Eigen::VectorXcd::Zero(state.amplitudes.size());
    std::vector<int> occ(static_cast<std::size_t>(basis.mode_count()));
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        if (basis.total_photons(i) >= basis.photon_cutoff()) continue;
        auto src = basis.occupation(i);
        std::copy(src.begin(), src.end(), occ.begin());
        const int n = ++occ[static_cast<std::size_t>(mode)];
        const std::size_t target = basis.index_of(occ);
        out.amplitudes(static_cast<Eigen::Index>(target)) +=
            std::sqrt(static_cast<double>(n)) * state.amplitudes(static_cast<Eigen::Index>(i));
    }
    return out;
}

StateVector apply_unitary(const TruncatedUnitary& unitary, const StateVector& state) {
    if (unitary.basis.get() != state.basis.get())
        throw std::invalid_argument("hilbert: unitary and state bases differ");
    StateVector out;
    out.basis = state.basis;
    out.discarded_tail = state.discarded_tail;
    out.amplitudes = unitary.matrix * state.amplitudes;
    return out;
}

namespace {

Eigen::MatrixXcd haar_block(Eigen::Index dim, Rng& rng) {
    Eigen::MatrixXcd gaussian(dim, dim);
    for (Eigen::Index c = 0; c < dim; ++c)
        for (Eigen::Index r = 0; r < dim; ++r)
            gaussian(r, c) = cplx(rng.next_normal(), rng.next_normal());
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(gaussian);
    Eigen::MatrixXcd q = qr.householderQ();
    Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the phase gauge so the distribution is Haar, not QR-biased.
    for (Eigen::Index c = 0; c < dim; ++c) {
        const cplx d = r(c, c);
        const double mag = std::abs(d);
        q.col(c) *= (mag > 0.0) ? (d / mag) : cplx(1.0, 0.0);
    }
    return q;
}

}  // namespace

TruncatedUnitary random_unitary(const BasisPtr& basis, UnitaryKind kind, std::uint64_t seed) {
    if (!basis) throw std::invalid_argument("hilbert: null basis");
    const Eigen::Index dim = static_cast<Eigen::Index>(basis->dimension());
    TruncatedUnitary out;
    out.basis = basis;
    out.kind = kind;
    switch (kind) {
        case UnitaryKind::identity:
            out.matrix = Eigen::MatrixXcd::Identity(dim, dim);
            break;
        case UnitaryKind::elastic: {
            out.matrix = Eigen::MatrixXcd::Zero(dim, dim);
            out.matrix(0, 0) = 1.0;
            for (int n = 1; n <= basis->photon_cutoff(); ++n) {
                const Eigen::Index lo = static_cast<Eigen::Index>(basis->sector_begin(n));
                const Eigen::Index sz = static_cast<Eigen::Index>(basis->sector_dimension(n));
                Rng rng(Rng::derive(seed, {0x51ACu, static_cast<std::uint64_t>(n)}));
                out.matrix.block(lo, lo, sz, sz) = haar_block(sz, rng);
            }
            break;
        }
        case UnitaryKind::general_vacuum_fixing: {
            out.matrix = Eigen::MatrixXcd::Zero(dim, dim);
            out.matrix(0, 0) = 1.0;
            if (dim > 1) {
                Rng rng(Rng::derive(seed, {0x6E4Au}));
                out.matrix.block(1, 1, dim - 1, dim - 1) = haar_block(dim - 1, rng);
            }
            break;
        }
    }
    return out;
}

cplx correlation(const TruncatedUnitary& unitary, const StateVector& input,
                 const std::vector<int>& output_modes) {
    if (output_modes.empty())
        throw std::invalid_argument("hilbert: correlation needs at least one output mode");
    StateVector evolved = apply_unitary(unitary, input);
    StateVector lowered = evolved;
    for (auto it = output_modes.rbegin(); it != output_modes.rend(); ++it)
        lowered = apply_annihilation(lowered, *it);
    return evolved.amplitudes.dot(lowered.amplitudes);
}

double correlation_second_moment(const TruncatedUnitary& unitary, const StateVector& input,
                                 const std::vector<int>& output_modes) {
    StateVector lowered = apply_unitary(unitary, input);
    for (auto it = output_modes.rbegin(); it != output_modes.rend(); ++it)
        lowered = apply_annihilation(lowered, *it);
    return lowered.amplitudes.squaredNorm();
}

cplx exact_s_element(const TruncatedUnitary& unitary, const std::vector<int>& out_modes,
                     const std::vector<int>& in_modes) {
    if (!unitary.basis) throw std::invalid_argument("hilbert: unitary has no basis");
    const int cutoff = unitary.basis->photon_cutoff();
    const int m = static_cast<int>(in_modes.size());
    const int n = static_cast<int>(out_modes.size());
    if (std::max(m, n) > cutoff)
        throw std::invalid_argument(
            "hilbert: exact_s_element needs photon_cutoff >= max(in, out) photon count");
    StateVector state = vacuum_state(unitary.basis);
    for (auto it = in_modes.rbegin(); it != in_modes.rend(); ++it)
        state = apply_creation(state, *it);
    state = apply_unitary(unitary, state);
    for (auto it = out_modes.rbegin(); it != out_modes.rend(); ++it)
        state = apply_annihilation(state, *it);
    return state.amplitudes(0);
}

double unitarity_defect(const TruncatedUnitary& unitary) {
    const Eigen::Index dim = unitary.matrix.rows();
    Eigen::MatrixXcd gram = unitary.matrix.adjoint() * unitary.matrix;
    gram -= Eigen::MatrixXcd::Identity(dim, dim);
    return gram.cwiseAbs().maxCoeff();
}

}  // namespace scattomo
