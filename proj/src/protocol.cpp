#include "scattomo/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace scattomo {

namespace {

void check_magnitudes(int mode_count, const std::vector<double>& magnitudes) {
    if (mode_count < 1) throw std::invalid_argument("protocol: mode_count must be >= 1");
    if (static_cast<int>(magnitudes.size()) != mode_count)
        throw std::invalid_argument("protocol: one magnitude per mode required");
    for (double m : magnitudes)
        if (!(m > 0.0))
            throw std::invalid_argument(
                "protocol: magnitudes must be > 0 (the reconstruction divides by them)");
}

std::vector<std::vector<int>> sign_vectors(int mode_count) {
    const int free_modes = mode_count - 1;
    std::vector<std::vector<int>> out;
    out.reserve(std::size_t(1) << free_modes);
    for (std::uint32_t bits = 0; bits < (std::uint32_t(1) << free_modes); ++bits) {
        std::vector<int> s(static_cast<std::size_t>(mode_count), 1);
        for (int j = 0; j < free_modes; ++j)
            if (bits & (std::uint32_t(1) << j)) s[static_cast<std::size_t>(j) + 1] = -1;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<cplx> entry_amplitudes(const std::vector<double>& magnitudes,
                                   const std::vector<int>& signs, double phase) {
    std::vector<cplx> amps(magnitudes.size());
    const cplx rot = std::polar(1.0, phase);
    for (std::size_t j = 0; j < magnitudes.size(); ++j)
        amps[j] = static_cast<double>(signs[j]) * rot * magnitudes[j];
    return amps;
}

std::uint64_t sign_bits(const std::vector<int>& signs) {
    std::uint64_t bits = 0;
    for (std::size_t j = 0; j < signs.size(); ++j)
        if (signs[j] < 0) bits |= std::uint64_t(1) << j;
    return bits;
}

std::uint64_t mode_key(const std::vector<int>& modes) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (int m : modes) h = h * 0x100000001b3ULL + static_cast<std::uint64_t>(m + 1);
    return h;
}

}  // namespace

double InputPlan::power() const {
    double p = 0.0;
    for (double m : magnitudes) p += m * m;
    return p;
}

double InputPlan::phase(int l) const {
    if (kind == PlanKind::elastic) return 0.0;
    return pi * static_cast<double>(l) / static_cast<double>(mode_count);
}

cplx InputPlan::ideal_amplitude(const PlanEntry& entry, int mode) const {
    return static_cast<double>(entry.signs[static_cast<std::size_t>(mode)]) *
           std::polar(magnitudes[static_cast<std::size_t>(mode)], phase(entry.l));
}

InputPlan build_input_plan_general(int mode_count, std::vector<double> magnitudes) {
    check_magnitudes(mode_count, magnitudes);
    InputPlan plan;
    plan.kind = PlanKind::general;
    plan.mode_count = mode_count;
    plan.magnitudes = std::move(magnitudes);
    const auto signs = sign_vectors(mode_count);
    for (int l = 1; l <= 2 * mode_count; ++l) {
        const double phi = plan.phase(l);
        for (const auto& s : signs)
            plan.entries.push_back({l, s, entry_amplitudes(plan.magnitudes, s, phi)});
    }
    return plan;
}

InputPlan build_input_plan_elastic(int mode_count, std::vector<double> magnitudes) {
    check_magnitudes(mode_count, magnitudes);
    InputPlan plan;
    plan.kind = PlanKind::elastic;
    plan.mode_count = mode_count;
    plan.magnitudes = std::move(magnitudes);
    for (const auto& s : sign_vectors(mode_count))
        plan.entries.push_back({0, s, entry_amplitudes(plan.magnitudes, s, 0.0)});
    return plan;
}

std::vector<double> equal_magnitudes(int mode_count, double power) {
    if (mode_count < 1 || !(power > 0.0))
        throw std::invalid_argument("protocol: equal_magnitudes needs M >= 1 and power > 0");
    return std::vector<double>(static_cast<std::size_t>(mode_count),
                               std::sqrt(power / mode_count));
}

std::vector<CorrelationRecord> simulate_records(const TruncatedUnitary& oracle,
                                                const InputPlan& plan,
                                                const std::vector<int>& output_modes, int ports,
                                                const NoiseConfig& noise, double truncation_tol) {
    const int n = static_cast<int>(output_modes.size());
    if (n < 1) throw std::invalid_argument("protocol: need at least one output mode");
    if (n > ports)
        throw std::invalid_argument("protocol: not enough ports for the requested correlation");
    if (noise.shots && *noise.shots < 1)
        throw std::invalid_argument("protocol: shots must be >= 1");
    if (noise.detector_noise_std < 0.0)
        throw std::invalid_argument("protocol: detector noise std must be >= 0");

    const double port_scale = std::pow(static_cast<double>(ports), -0.5 * n);
    std::vector<CorrelationRecord> records;
    records.reserve(plan.entries.size());

    for (const PlanEntry& entry : plan.entries) {
        StateVector input = coherent_state(oracle.basis, entry.amplitudes, truncation_tol);
        StateVector evolved = apply_unitary(oracle, input);

        // Product states for every subset of retained ports; mask bit r set
        // means port r's annihilation operator is applied.
        const std::uint32_t full = (std::uint32_t(1) << n) - 1;
        std::vector<Eigen::VectorXcd> lowered(full + 1);
        lowered[0] = evolved.amplitudes;
        for (std::uint32_t mask = 1; mask <= full; ++mask) {
            const int r = std::countr_zero(mask);
            StateVector src;
            src.basis = oracle.basis;
            src.amplitudes = lowered[mask & (mask - 1)];
            lowered[mask] =
                apply_annihilation(src, output_modes[static_cast<std::size_t>(r)]).amplitudes;
        }

        const cplx mean = evolved.amplitudes.dot(lowered[full]);
        cplx value = port_scale * mean;

        if (noise.shots) {
            const double shots = static_cast<double>(*noise.shots);
            Rng rng(Rng::derive(noise.seed, {static_cast<std::uint64_t>(entry.l) + 1,
                                             sign_bits(entry.signs), mode_key(output_modes)}));
            const double second = lowered[full].squaredNorm();
            const double quantum_var =
                std::max(0.0, port_scale * port_scale * (second - std::norm(mean)));
            value += rng.next_cnormal() * std::sqrt(quantum_var / shots);
            const double noise_power = 2.0 * noise.detector_noise_std * noise.detector_noise_std;
            if (noise_power > 0.0) {
                for (std::uint32_t s = 1; s <= full; ++s) {
                    const int removed = std::popcount(s);
                    const double kept_second = lowered[full & ~s].squaredNorm();
                    const double var = std::pow(static_cast<double>(ports), -(n - removed)) *
                                       kept_second * std::pow(noise_power, removed);
                    value += rng.next_cnormal() * std::sqrt(var / shots);
                }
            }
        }

        records.push_back({entry.l, entry.signs, output_modes, value, noise.shots});
    }
    return records;
}

RecordSet simulate_record_set(const TruncatedUnitary& oracle, const InputPlan& plan,
                              const std::vector<std::vector<int>>& output_mode_lists, int ports,
                              const NoiseConfig& noise, double truncation_tol) {
    RecordSet set;
    set.plan = plan;
    set.ports = ports;
    set.noise = noise;
    for (const auto& modes : output_mode_lists) {
        auto records = simulate_records(oracle, plan, modes, ports, noise, truncation_tol);
        set.records.insert(set.records.end(), records.begin(), records.end());
    }
    return set;
}

namespace {

struct TargetShape {
    int m = 0;
    int n = 0;
    double multiplicity_factor = 1.0;  // m! in the single-mode photon-number case
};

// Repeated input modes are only isolatable in the single-mode plan (the
// photon-number protocol, whose estimate is m! times the phase sum). For
// M >= 2 the sign patterns cannot separate same-parity multinomial terms,
// so repeated k-modes are rejected rather than silently polluted.
TargetShape check_target(const RecordSet& set, const TargetSpec& target) {
    TargetShape shape;
    shape.n = static_cast<int>(target.out_modes.size());
    shape.m = static_cast<int>(target.in_modes.size());
    if (shape.n < 1 || shape.m < 1)
        throw std::invalid_argument("protocol: target needs at least one in and one out mode");
    if (shape.n > set.ports)
        throw std::invalid_argument("protocol: not enough ports for the requested target");
    std::map<int, int> mult;
    for (int k : target.in_modes) {
        if (k < 0 || k >= set.plan.mode_count)
            throw std::invalid_argument("protocol: target input mode outside the plan");
        ++mult[k];
    }
    if (set.plan.mode_count == 1) {
        for (int q = 2; q <= shape.m; ++q) shape.multiplicity_factor *= q;
    } else {
        for (auto [mode, count] : mult)
            if (count > 1)
                throw std::invalid_argument(
                    "protocol: repeated input modes are reconstructable only with a single-mode "
                    "plan");
        if (shape.m > set.plan.mode_count)
            throw std::invalid_argument("protocol: target has more input photons than plan modes");
    }
    return shape;
}

/// Record lookup keyed by (l, signs) for one output-mode list; throws with
/// the list of missing entries when the set is incomplete.
std::map<std::pair<int, std::uint64_t>, cplx> collect_records(const RecordSet& set,
                                                              const TargetSpec& target) {
    std::map<std::pair<int, std::uint64_t>, cplx> found;
    for (const CorrelationRecord& rec : set.records) {
        if (rec.output_modes != target.out_modes) continue;
        found[{rec.l, sign_bits(rec.signs)}] = rec.value;
    }
    std::ostringstream missing;
    int missing_count = 0;
    for (const PlanEntry& entry : set.plan.entries) {
        if (found.count({entry.l, sign_bits(entry.signs)})) continue;
        ++missing_count;
        if (missing_count <= 8) {
            missing << " (l=" << entry.l << ", s=";
            for (int s : entry.signs) missing << (s > 0 ? '+' : '-');
            missing << ')';
        }
    }
    if (missing_count > 0) {
        std::ostringstream msg;
        msg << "protocol: record set lacks " << missing_count
            << " correlation record(s) for the requested output modes:" << missing.str();
        throw std::invalid_argument(msg.str());
    }
    return found;
}

cplx phase_sign_sum(const RecordSet& set, const TargetSpec& target) {
    auto records = collect_records(set, target);
    KahanSum<double> re, im;
    for (const PlanEntry& entry : set.plan.entries) {
        cplx denom = 1.0;
        for (int k : target.in_modes) denom *= set.plan.ideal_amplitude(entry, k);
        const cplx term = records.at({entry.l, sign_bits(entry.signs)}) / denom;
        re.add(term.real());
        im.add(term.imag());
    }
    return {re, im};
}

}  // namespace

Estimate reconstruct_general(const RecordSet& set, const TargetSpec& target) {
    if (set.plan.kind != PlanKind::general)
        throw std::invalid_argument("protocol: reconstruct_general needs a general plan");
    const TargetShape shape = check_target(set, target);
    if (shape.m > set.plan.mode_count)
        throw std::invalid_argument(
            "protocol: the 2M phases of the general plan select photon orders m <= M only");
    const int M = set.plan.mode_count;
    const double power = set.plan.power();
    const cplx sum = phase_sign_sum(set, target);
    const double prefactor = std::pow(static_cast<double>(set.ports), 0.5 * shape.n) *
                             std::exp(power) /
                             (std::pow(2.0, M) * static_cast<double>(M));
    Estimate est;
    est.target = target;
    est.value = shape.multiplicity_factor * prefactor * sum;
    est.power = power;
    est.ports = set.ports;
    est.first_order_bound = shape.multiplicity_factor * first_order_bound(M, shape.m, power);
    est.bound_is_heuristic = true;
    return est;
}

Estimate reconstruct_elastic(const RecordSet& set, const TargetSpec& target) {
    if (set.plan.kind != PlanKind::elastic)
        throw std::invalid_argument("protocol: reconstruct_elastic needs an elastic plan");
    const TargetShape shape = check_target(set, target);
    if (shape.n != shape.m)
        throw std::invalid_argument(
            "protocol: the elastic protocol reconstructs photon-number-conserving sectors only "
            "(|out| must equal |in|)");
    const int M = set.plan.mode_count;
    const double power = set.plan.power();
    const cplx sum = phase_sign_sum(set, target);
    const double prefactor = std::pow(static_cast<double>(set.ports), 0.5 * shape.m) *
                             std::exp(power) / std::pow(2.0, M - 1);
    Estimate est;
    est.target = target;
    est.value = shape.multiplicity_factor * prefactor * sum;
    est.power = power;
    est.ports = set.ports;
    est.first_order_bound = shape.multiplicity_factor * first_order_bound(M, shape.m, power);
    est.bound_is_heuristic = false;
    return est;
}

double first_order_bound(int mode_count, int m, double power) {
    if (mode_count < 1 || m < 1)
        throw std::invalid_argument("protocol: bound needs M >= 1 and m >= 1");
    if (power < 0.0) throw std::invalid_argument("protocol: power must be >= 0");
    return std::pow(static_cast<double>(mode_count), 1.5 * m) * std::expm1(power);
}

cplx phase_delta_check(int R, int d, int m) {
    if (R < 1) throw std::invalid_argument("protocol: R must be >= 1");
    KahanSum<double> re, im;
    for (int l = 1; l <= R; ++l) {
        const cplx term = std::polar(1.0, 2.0 * pi * l * (d - m) / R);
        re.add(term.real());
        im.add(term.imag());
    }
    return cplx(re, im) / static_cast<double>(R);
}

std::string record_set_to_json(const RecordSet& set) {
    nlohmann::json doc;
    doc["plan"] = {{"kind", set.plan.kind == PlanKind::general ? "general" : "elastic"},
                   {"M", set.plan.mode_count},
                   {"magnitudes", set.plan.magnitudes},
                   {"perturbed", set.plan.perturbed}};
    doc["ports"] = set.ports;
    nlohmann::json records = nlohmann::json::array();
    for (const CorrelationRecord& rec : set.records) {
        nlohmann::json r = {{"l", rec.l},       {"s", rec.signs}, {"p_modes", rec.output_modes},
                            {"re", rec.value.real()}, {"im", rec.value.imag()}};
        if (rec.shots)
            r["shots"] = *rec.shots;
        else
            r["shots"] = "exact";
        records.push_back(std::move(r));
    }
    doc["records"] = std::move(records);
    return doc.dump(2);
}

RecordSet record_set_from_json(const std::string& text) {
    const nlohmann::json doc = nlohmann::json::parse(text);
    RecordSet set;
    const auto& plan = doc.at("plan");
    const std::string kind = plan.at("kind").get<std::string>();
    const int M = plan.at("M").get<int>();
    auto magnitudes = plan.at("magnitudes").get<std::vector<double>>();
    if (kind == "general")
        set.plan = build_input_plan_general(M, magnitudes);
    else if (kind == "elastic")
        set.plan = build_input_plan_elastic(M, magnitudes);
    else
        throw std::invalid_argument("protocol: unknown plan kind '" + kind + "'");
    set.plan.perturbed = plan.value("perturbed", false);
    set.ports = doc.at("ports").get<int>();
    for (const auto& r : doc.at("records")) {
        CorrelationRecord rec;
        rec.l = r.at("l").get<int>();
        rec.signs = r.at("s").get<std::vector<int>>();
        rec.output_modes = r.at("p_modes").get<std::vector<int>>();
        rec.value = cplx(r.at("re").get<double>(), r.at("im").get<double>());
        if (r.contains("shots") && r.at("shots").is_number_integer())
            rec.shots = r.at("shots").get<std::int64_t>();
        set.records.push_back(std::move(rec));
    }
    return set;
}

}  // namespace scattomo
