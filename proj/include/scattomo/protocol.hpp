#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scattomo/common.hpp"
#include "scattomo/hilbert.hpp"

namespace scattomo {

enum class PlanKind { general, elastic };

/// One prepared input configuration. `amplitudes` are the amplitudes the
/// source actually emits; for an unperturbed plan they coincide with the
/// ideal pattern s_j e^{i phi_l} |alpha_j| that reconstruction assumes.
struct PlanEntry {
    int l = 0;  // phase index, 1..2M for general plans, 0 for elastic
    std::vector<int> signs;
    std::vector<cplx> amplitudes;
};

/// The full set of coherent-state configurations one protocol run needs.
struct InputPlan {
    PlanKind kind = PlanKind::elastic;
    int mode_count = 0;
    std::vector<double> magnitudes;
    std::vector<PlanEntry> entries;
    bool perturbed = false;

    /// Intended mean photon number sum_j |alpha_j|^2.
    double power() const;
    /// Global phase of entry l (pi l / M); 0 for elastic plans.
    double phase(int l) const;
    /// Amplitude the reconstruction formula assumes for (entry, mode).
    cplx ideal_amplitude(const PlanEntry& entry, int mode) const;
};

/// 2^M * M entries: phases phi_l = pi l / M for l = 1..2M, every sign
/// vector with s_1 = +1.
InputPlan build_input_plan_general(int mode_count, std::vector<double> magnitudes);

/// 2^{M-1} entries, signs only; valid when scattering conserves photon number.
InputPlan build_input_plan_elastic(int mode_count, std::vector<double> magnitudes);

/// |alpha_j| = sqrt(power / M) for every mode.
std::vector<double> equal_magnitudes(int mode_count, double power);

/// shots empty = exact expectation values; otherwise the record carries a
/// seeded Gaussian fluctuation of the empirical mean over `shots` repetitions
/// plus detector cross terms (see simulate_records).
struct NoiseConfig {
    std::optional<std::int64_t> shots;
    double detector_noise_std = 0.0;
    std::uint64_t seed = 0;
};

struct CorrelationRecord {
    int l = 0;
    std::vector<int> signs;
    std::vector<int> output_modes;
    cplx value;
    std::optional<std::int64_t> shots;
};

/// Records plus everything needed to reconstruct from them.
struct RecordSet {
    InputPlan plan;
    int ports = 1;
    NoiseConfig noise;
    std::vector<CorrelationRecord> records;
};

/// Simulates F_n(l, s) = N^{-n/2} <alpha|U^dag A_{p1}..A_{pn} U|alpha> for
/// every plan entry. The balanced splitter enters as the scalar N^{-n/2};
/// each port r is assigned one output mode p_r and ports are distinct.
///
/// With finite shots the record value is
///   exact + g0 + sum over nonempty port subsets S of g_S,
/// where g0 has variance (<|PA|^2> - |<PA>|^2) N^{-n} / shots (quantum
/// fluctuation of the product estimator, exact moments on the truncated
/// space) and g_S has variance N^{-(n-|S|)} <|P_{r not in S} A|^2>
/// (2 std^2)^{|S|} / shots (detector noise on the ports in S). Detector
/// noise is zero mean, so it only widens the spread: the record stays
/// unbiased. Deterministic per (seed, l, s, p-modes).
std::vector<CorrelationRecord> simulate_records(const TruncatedUnitary& oracle,
                                                const InputPlan& plan,
                                                const std::vector<int>& output_modes, int ports,
                                                const NoiseConfig& noise,
                                                double truncation_tol = 1e-10);

/// One call per output-mode list; the same plan (and input states) serves
/// every sector, so this is the shape experiments produce.
RecordSet simulate_record_set(const TruncatedUnitary& oracle, const InputPlan& plan,
                              const std::vector<std::vector<int>>& output_mode_lists, int ports,
                              const NoiseConfig& noise, double truncation_tol = 1e-10);

struct TargetSpec {
    std::vector<int> out_modes;  // p_1..p_n
    std::vector<int> in_modes;   // k_1..k_m, indices into the plan's modes
};

struct Estimate {
    TargetSpec target;
    cplx value;
    double power = 0.0;
    int ports = 1;
    double first_order_bound = 0.0;
    /// True when the closed bound is only heuristic (general protocol on a
    /// possibly inelastic scatterer); the elastic protocol bound is strict.
    bool bound_is_heuristic = false;
};

/// Phase-and-sign sum, prefactor N^{n/2} e^{|alpha|^2} / (2^M M).
Estimate reconstruct_general(const RecordSet& set, const TargetSpec& target);

/// Sign sum only, prefactor N^{m/2} e^{|alpha|^2} / 2^{M-1}; requires
/// |out| == |in|. A single-mode plan reconstructs any photon order m
/// (repeated mode 0, photon-number protocol); for M >= 2 the input modes
/// must be distinct.
Estimate reconstruct_elastic(const RecordSet& set, const TargetSpec& target);

/// Strict elastic error bound M^{3m/2} (e^{|alpha|^2} - 1).
double first_order_bound(int mode_count, int m, double power);

/// (1/R) sum_l e^{(2 pi i l / R)(d - m)}: 1 when d = m mod R, else 0.
cplx phase_delta_check(int R, int d, int m);

/// JSON document {plan, ports, records: [{l, s, p_modes, re, im, shots}]}.
std::string record_set_to_json(const RecordSet& set);
RecordSet record_set_from_json(const std::string& text);

}  // namespace scattomo
