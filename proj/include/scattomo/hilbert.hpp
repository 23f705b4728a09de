#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "scattomo/common.hpp"

namespace scattomo {

/// Multimode Fock space truncated at a total photon number. Inputs and
/// outputs share one orthonormal mode register.
struct BasisSpec {
    int mode_count = 1;
    int photon_cutoff = 1;
};

/// Immutable enumeration of occupation vectors, ordered by total photon
/// number and, within a sector, by descending occupation of earlier modes.
/// The ordering is part of the contract: state and operator indices are
/// only meaningful against a fixed Basis.
class Basis {
public:
    static constexpr std::uint64_t default_state_cap = 2'000'000;

    explicit Basis(BasisSpec spec, std::uint64_t state_cap = default_state_cap);

    const BasisSpec& spec() const { return spec_; }
    std::size_t dimension() const { return dim_; }
    int mode_count() const { return spec_.mode_count; }
    int photon_cutoff() const { return spec_.photon_cutoff; }

    std::span<const int> occupation(std::size_t index) const {
        return {occupations_.data() + index * static_cast<std::size_t>(spec_.mode_count),
                static_cast<std::size_t>(spec_.mode_count)};
    }
    int total_photons(std::size_t index) const { return totals_[index]; }

    /// Combinatorial rank of an occupation vector (inverse of occupation()).
    std::size_t index_of(std::span<const int> occ) const;

    /// First index of the n-photon sector.
    std::size_t sector_begin(int n) const { return sector_offsets_[static_cast<std::size_t>(n)]; }
    std::size_t sector_dimension(int n) const {
        return sector_begin(n + 1) - sector_begin(n);
    }

private:
    std::uint64_t compositions(int total, int modes) const {
        return comp_table_[static_cast<std::size_t>(total) * static_cast<std::size_t>(spec_.mode_count + 1) +
                           static_cast<std::size_t>(modes)];
    }

    BasisSpec spec_;
    std::size_t dim_ = 0;
    std::vector<int> occupations_;       // dim x mode_count, flattened
    std::vector<int> totals_;            // total photons per state
    std::vector<std::size_t> sector_offsets_;  // photon_cutoff + 2 entries
    std::vector<std::uint64_t> comp_table_;    // compositions(t, m) lookup
};

using BasisPtr = std::shared_ptr<const Basis>;

inline BasisPtr make_basis(BasisSpec spec, std::uint64_t state_cap = Basis::default_state_cap) {
    return std::make_shared<Basis>(spec, state_cap);
}

/// Complex amplitudes over a Basis. coherent_state output is renormalized
/// to unit norm; discarded_tail records the Poisson weight lost to the cutoff.
struct StateVector {
    BasisPtr basis;
    Eigen::VectorXcd amplitudes;
    double discarded_tail = 0.0;
};

enum class UnitaryKind { identity, elastic, general_vacuum_fixing };

/// Dense unitary on the truncated space with the vacuum held fixed.
/// kind = elastic additionally means block-diagonal over photon sectors.
struct TruncatedUnitary {
    BasisPtr basis;
    Eigen::MatrixXcd matrix;
    UnitaryKind kind = UnitaryKind::identity;
};

/// Smallest cutoff whose Poisson(power) tail is below tol, clamped to at
/// least m + 2 (the first photon order contributing to reconstruction error).
int recommended_cutoff(double power, int m, double tol = 1e-10);

/// Total-photon-number tail mass of Poisson(power) beyond cutoff.
double poisson_tail(double power, int cutoff);

/// Multimode coherent state |alpha> on the truncated basis. Throws when the
/// discarded tail exceeds truncation_tol, naming the cutoff that would do.
StateVector coherent_state(const BasisPtr& basis, const std::vector<cplx>& alphas,
                           double truncation_tol = 1e-10);

StateVector vacuum_state(const BasisPtr& basis);

/// Ladder action a_mode; annihilation never leaves the truncated space.
StateVector apply_annihilation(const StateVector& state, int mode);

/// Ladder action a_mode^dag; components that would cross the cutoff are
/// dropped, so use only where the source state has headroom.
StateVector apply_creation(const StateVector& state, int mode);

StateVector apply_unitary(const TruncatedUnitary& unitary, const StateVector& state);

/// Haar-random truncated unitary, deterministic per (spec, kind, seed).
/// elastic: independent Haar block per photon sector, vacuum block = 1.
/// general_vacuum_fixing: Haar on the orthogonal complement of the vacuum.
TruncatedUnitary random_unitary(const BasisPtr& basis, UnitaryKind kind, std::uint64_t seed);

/// <alpha| U^dag A_{p1}...A_{pn} U |alpha>, exact on the truncated space.
cplx correlation(const TruncatedUnitary& unitary, const StateVector& input,
                 const std::vector<int>& output_modes);

/// <(A_{p1}...A_{pn})^dag A_{p1}...A_{pn}> on U|input>; second moment used
/// by the statistical-fluctuation model.
double correlation_second_moment(const TruncatedUnitary& unitary, const StateVector& input,
                                 const std::vector<int>& output_modes);

/// <0| A_{p1}...A_{pn} U A^dag_{k1}...A^dag_{km} |0>; ground truth for every
/// protocol reconstruction. Requires max(m, n) <= photon_cutoff.
cplx exact_s_element(const TruncatedUnitary& unitary, const std::vector<int>& out_modes,
                     const std::vector<int>& in_modes);

/// max-norm of U^dag U - I; construction keeps this below 1e-12.
double unitarity_defect(const TruncatedUnitary& unitary);

}  // namespace scattomo
