#include <doctest.h>

#include <cmath>
#include <complex>

#include "scattomo/protocol.hpp"

using namespace scattomo;

namespace {

TruncatedUnitary standard_oracle(std::uint64_t seed, int cutoff = 6) {
    return random_unitary(make_basis({2, cutoff}), UnitaryKind::elastic, seed);
}

cplx record_value(const RecordSet& set, int l, const std::vector<int>& signs,
                  const std::vector<int>& p_modes) {
    for (const auto& rec : set.records)
        if (rec.l == l && rec.signs == signs && rec.output_modes == p_modes) return rec.value;
    throw std::runtime_error("record not found");
}

}  // namespace

TEST_CASE("general plan layout") {
    auto plan1 = build_input_plan_general(1, {0.1});
    REQUIRE(plan1.entries.size() == 2);
    CHECK(plan1.phase(1) == doctest::Approx(3.14159265358979));
    CHECK(plan1.phase(2) == doctest::Approx(2 * 3.14159265358979));
    CHECK(plan1.entries[0].signs == std::vector<int>{1});

    auto plan2 = build_input_plan_general(2, equal_magnitudes(2, 0.01));
    CHECK(plan2.entries.size() == 8);
    for (const auto& entry : plan2.entries) {
        CHECK(entry.signs[0] == 1);
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(entry.amplitudes[static_cast<std::size_t>(j)] -
                           plan2.ideal_amplitude(entry, j)) < 1e-15);
    }

    CHECK_THROWS_AS(build_input_plan_general(2, {0.1, 0.0}), std::invalid_argument);
}

TEST_CASE("elastic plan layout") {
    CHECK(build_input_plan_elastic(1, {0.1}).entries.size() == 1);
    auto plan = build_input_plan_elastic(2, {0.1, 0.2});
    REQUIRE(plan.entries.size() == 2);
    CHECK(plan.entries[0].signs == std::vector<int>{1, 1});
    CHECK(plan.entries[1].signs == std::vector<int>{1, -1});
    CHECK(build_input_plan_elastic(3, {0.1, 0.1, 0.1}).entries.size() == 4);
}

TEST_CASE("exact records carry the beam-splitter scale") {
    auto basis = make_basis({1, 6});
    TruncatedUnitary id = random_unitary(basis, UnitaryKind::identity, 0);
    auto plan = build_input_plan_elastic(1, {0.1});
    auto records = simulate_records(id, plan, {0}, 4, {});
    REQUIRE(records.size() == 1);
    CHECK(std::abs(records[0].value - cplx(0.05, 0.0)) < 1e-12);

    CHECK_THROWS_WITH_AS(simulate_records(id, plan, {0, 0, 0}, 2, {}),
                         doctest::Contains("not enough ports"), std::invalid_argument);
}

TEST_CASE("noisy simulation is seeded and unbiased") {
    TruncatedUnitary oracle = standard_oracle(7);
    auto plan = build_input_plan_elastic(2, equal_magnitudes(2, 0.01));

    NoiseConfig noise;
    noise.shots = 1000;
    noise.detector_noise_std = 1.0;
    noise.seed = 99;
    auto a = simulate_records(oracle, plan, {0, 1}, 2, noise);
    auto b = simulate_records(oracle, plan, {0, 1}, 2, noise);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value == b[i].value);

    noise.seed = 100;
    auto c = simulate_records(oracle, plan, {0, 1}, 2, noise);
    CHECK(a[0].value != c[0].value);

    // Sample mean of repeated noisy records converges on the exact value.
    auto exact = simulate_records(oracle, plan, {0, 1}, 2, {});
    NoiseConfig heavy;
    heavy.shots = 1'000'000;
    heavy.detector_noise_std = 1.0;
    const int reps = 64;
    cplx mean = 0.0;
    double var = 0.0;
    std::vector<cplx> samples;
    for (int r = 0; r < reps; ++r) {
        heavy.seed = static_cast<std::uint64_t>(r);
        samples.push_back(simulate_records(oracle, plan, {0, 1}, 2, heavy)[0].value);
        mean += samples.back();
    }
    mean /= static_cast<double>(reps);
    for (const cplx& s : samples) var += std::norm(s - mean);
    var /= static_cast<double>(reps - 1);
    const double standard_error = std::sqrt(var / reps);
    CHECK(std::abs(mean - exact[0].value) < 3.0 * standard_error);
}

TEST_CASE("general reconstruction on the identity evolution") {
    auto basis = make_basis({1, 6});
    TruncatedUnitary id = random_unitary(basis, UnitaryKind::identity, 0);
    auto plan = build_input_plan_general(1, {0.1});
    RecordSet set = simulate_record_set(id, plan, {{0}}, 1, {});
    Estimate est = reconstruct_general(set, {{0}, {0}});
    const double err = std::abs(est.value - cplx(1.0, 0.0));
    CHECK(err <= std::expm1(0.01) + 1e-14);
    CHECK(est.first_order_bound == doctest::Approx(std::expm1(0.01)));
    CHECK(est.bound_is_heuristic);
}

TEST_CASE("one record set reconstructs every sector within its bound") {
    TruncatedUnitary oracle = standard_oracle(7);
    auto plan = build_input_plan_general(2, equal_magnitudes(2, 0.01));
    RecordSet set = simulate_record_set(oracle, plan, {{0}, {1}, {0, 1}}, 2, {});

    for (const TargetSpec& target : {TargetSpec{{0}, {0}}, TargetSpec{{1}, {0}},
                                     TargetSpec{{0}, {1}}, TargetSpec{{1}, {1}},
                                     TargetSpec{{0, 1}, {0, 1}}}) {
        Estimate est = reconstruct_general(set, target);
        const cplx truth = exact_s_element(oracle, target.out_modes, target.in_modes);
        CHECK(std::abs(est.value - truth) <= est.first_order_bound);
    }
}

TEST_CASE("elastic reconstruction matches the explicit two-mode formula") {
    TruncatedUnitary oracle = standard_oracle(11);
    auto magnitudes = equal_magnitudes(2, 0.01);
    auto plan = build_input_plan_elastic(2, magnitudes);
    RecordSet set = simulate_record_set(oracle, plan, {{0, 1}}, 2, {});

    Estimate est = reconstruct_elastic(set, {{0, 1}, {0, 1}});
    const cplx f_pp = record_value(set, 0, {1, 1}, {0, 1});
    const cplx f_pm = record_value(set, 0, {1, -1}, {0, 1});
    const cplx explicit_value =
        std::exp(0.01) * (f_pp - f_pm) / (magnitudes[0] * magnitudes[1]);
    CHECK(std::abs(est.value - explicit_value) < 1e-13);

    const cplx truth = exact_s_element(oracle, {0, 1}, {0, 1});
    CHECK(std::abs(est.value - truth) <= est.first_order_bound);
    CHECK_FALSE(est.bound_is_heuristic);
}

TEST_CASE("elastic identity estimate and sector guard") {
    auto basis = make_basis({1, 6});
    TruncatedUnitary id = random_unitary(basis, UnitaryKind::identity, 0);
    auto plan = build_input_plan_elastic(1, {0.1});
    RecordSet set = simulate_record_set(id, plan, {{0}}, 1, {});
    Estimate est = reconstruct_elastic(set, {{0}, {0}});
    CHECK(std::abs(est.value - cplx(1.0, 0.0)) <= est.first_order_bound + 1e-14);

    CHECK_THROWS_AS(reconstruct_elastic(set, {{0}, {0, 0}}), std::invalid_argument);
}

TEST_CASE("elastic and general reconstructions agree") {
    for (std::uint64_t seed : {3ull, 7ull, 21ull}) {
        TruncatedUnitary oracle = standard_oracle(seed);
        auto magnitudes = equal_magnitudes(2, 0.01);
        RecordSet elastic = simulate_record_set(
            oracle, build_input_plan_elastic(2, magnitudes), {{0, 1}}, 2, {});
        RecordSet general = simulate_record_set(
            oracle, build_input_plan_general(2, magnitudes), {{0, 1}}, 2, {});
        TargetSpec target{{0, 1}, {0, 1}};
        Estimate a = reconstruct_elastic(elastic, target);
        Estimate b = reconstruct_general(general, target);
        CHECK(std::abs(a.value - b.value) <= a.first_order_bound + b.first_order_bound);
    }
}

TEST_CASE("exact-record identity over many seeds") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        TruncatedUnitary oracle = standard_oracle(seed);
        auto plan = build_input_plan_elastic(2, equal_magnitudes(2, 0.01));
        RecordSet set = simulate_record_set(oracle, plan, {{0}, {1}, {0, 1}}, 2, {});
        for (const TargetSpec& target : {TargetSpec{{0}, {0}}, TargetSpec{{1}, {1}},
                                         TargetSpec{{0, 1}, {0, 1}}}) {
            Estimate est = reconstruct_elastic(set, target);
            const cplx truth = exact_s_element(oracle, target.out_modes, target.in_modes);
            CHECK(std::abs(est.value - truth) <= est.first_order_bound);
        }
    }
}

TEST_CASE("reconstruction error scales linearly in the power") {
    TruncatedUnitary oracle = standard_oracle(7);
    auto estimate_error = [&](double power) {
        auto plan = build_input_plan_elastic(2, equal_magnitudes(2, power));
        RecordSet set = simulate_record_set(oracle, plan, {{0, 1}}, 2, {});
        Estimate est = reconstruct_elastic(set, {{0, 1}, {0, 1}});
        return std::abs(est.value - exact_s_element(oracle, {0, 1}, {0, 1}));
    };
    const double ratio = estimate_error(0.02) / estimate_error(0.01);
    CHECK(ratio > 1.6);
    CHECK(ratio < 2.4);
}

TEST_CASE("repeated input modes carry their multiplicity factor") {
    auto basis = make_basis({1, 8});
    TruncatedUnitary id = random_unitary(basis, UnitaryKind::identity, 0);
    auto plan = build_input_plan_elastic(1, {0.1});
    RecordSet set = simulate_record_set(id, plan, {{0, 0}}, 2, {});
    Estimate est = reconstruct_elastic(set, {{0, 0}, {0, 0}});
    // <0|a a U adag adag|0> = 2 for the identity evolution.
    CHECK(std::abs(est.value - cplx(2.0, 0.0)) <= est.first_order_bound + 1e-14);
}

TEST_CASE("missing records are reported by entry") {
    TruncatedUnitary oracle = standard_oracle(7);
    auto plan = build_input_plan_elastic(2, equal_magnitudes(2, 0.01));
    RecordSet set = simulate_record_set(oracle, plan, {{0, 1}}, 2, {});
    set.records.pop_back();
    CHECK_THROWS_WITH_AS(reconstruct_elastic(set, {{0, 1}, {0, 1}}),
                         doctest::Contains("(l=0, s=+-)"), std::invalid_argument);
}

TEST_CASE("first-order bound formula") {
    CHECK(first_order_bound(2, 2, 0.0) == 0.0);
    CHECK(first_order_bound(2, 2, 0.01) == doctest::Approx(8.0 * std::expm1(0.01)));
    CHECK(first_order_bound(2, 2, 0.01) == doctest::Approx(0.0804013).epsilon(1e-5));
    CHECK(first_order_bound(1, 1, 1.0) == doctest::Approx(1.718281828459045));
}

TEST_CASE("discrete Fourier delta") {
    CHECK(std::abs(phase_delta_check(4, 3, 3) - cplx(1.0, 0.0)) < 1e-12);
    CHECK(std::abs(phase_delta_check(4, 4, 3)) < 1e-12);
    CHECK(std::abs(phase_delta_check(4, 7, 3) - cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("record sets round-trip through JSON") {
    TruncatedUnitary oracle = standard_oracle(7);
    auto plan = build_input_plan_elastic(2, equal_magnitudes(2, 0.01));
    NoiseConfig noise;
    noise.shots = 5000;
    noise.detector_noise_std = 0.5;
    noise.seed = 4;
    RecordSet set = simulate_record_set(oracle, plan, {{0, 1}, {0}}, 2, noise);

    RecordSet loaded = record_set_from_json(record_set_to_json(set));
    REQUIRE(loaded.records.size() == set.records.size());
    for (std::size_t i = 0; i < set.records.size(); ++i) {
        CHECK(loaded.records[i].value == set.records[i].value);
        CHECK(loaded.records[i].output_modes == set.records[i].output_modes);
    }
    Estimate a = reconstruct_elastic(set, {{0, 1}, {0, 1}});
    Estimate b = reconstruct_elastic(loaded, {{0, 1}, {0, 1}});
    CHECK(a.value == b.value);
}
