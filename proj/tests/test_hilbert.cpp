#include <doctest.h>

#include <complex>
#include <vector>

#include "scattomo/hilbert.hpp"

using namespace scattomo;

namespace {

// Brute-force basis size: count all occupation tuples with sum <= cutoff.
std::size_t count_states_bruteforce(int modes, int cutoff) {
    std::vector<int> occ(static_cast<std::size_t>(modes), 0);
    std::size_t count = 0;
    auto rec = [&](auto&& self, int j, int used) -> void {
        if (j == modes) {
            ++count;
            return;
        }
        for (int v = 0; v + used <= cutoff; ++v) self(self, j + 1, used + v);
    };
    rec(rec, 0, 0);
    return count;
}

// Independent dense realization of the mode-lowering operator.
Eigen::MatrixXcd annihilation_matrix(const Basis& basis, int mode) {
    const Eigen::Index dim = static_cast<Eigen::Index>(basis.dimension());
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
    std::vector<int> occ(static_cast<std::size_t>(basis.mode_count()));
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        auto src = basis.occupation(i);
        if (src[static_cast<std::size_t>(mode)] == 0) continue;
        std::copy(src.begin(), src.end(), occ.begin());
        const int n = occ[static_cast<std::size_t>(mode)]--;
        op(static_cast<Eigen::Index>(basis.index_of(occ)), static_cast<Eigen::Index>(i)) =
            std::sqrt(static_cast<double>(n));
    }
    return op;
}

}  // namespace

TEST_CASE("basis enumeration is sector ordered and deterministic") {
    Basis b1({1, 2});
    REQUIRE(b1.dimension() == 3);
    CHECK(b1.occupation(0)[0] == 0);
    CHECK(b1.occupation(1)[0] == 1);
    CHECK(b1.occupation(2)[0] == 2);

    Basis b2({2, 1});
    REQUIRE(b2.dimension() == 3);
    CHECK(b2.occupation(0)[0] == 0);
    CHECK(b2.occupation(0)[1] == 0);
    CHECK(b2.occupation(1)[0] == 1);
    CHECK(b2.occupation(1)[1] == 0);
    CHECK(b2.occupation(2)[0] == 0);
    CHECK(b2.occupation(2)[1] == 1);

    CHECK(Basis({2, 2}).dimension() == 6);
    for (int modes : {1, 2, 3, 4}) {
        for (int cutoff : {1, 2, 3, 5}) {
            Basis b({modes, cutoff});
            CHECK(b.dimension() == count_states_bruteforce(modes, cutoff));
        }
    }
}

TEST_CASE("index_of inverts the enumeration") {
    for (BasisSpec spec : {BasisSpec{1, 6}, BasisSpec{2, 5}, BasisSpec{3, 4}, BasisSpec{5, 3}}) {
        Basis b(spec);
        for (std::size_t i = 0; i < b.dimension(); ++i) {
            auto occ = b.occupation(i);
            CHECK(b.index_of(occ) == i);
        }
    }
}

TEST_CASE("basis refuses oversized requests with a sizing message") {
    CHECK_THROWS_WITH_AS(Basis({8, 40}), doctest::Contains("state cap"), std::invalid_argument);
    CHECK_THROWS_AS(Basis({0, 2}), std::invalid_argument);
    CHECK_THROWS_AS(Basis({2, 0}), std::invalid_argument);
}

TEST_CASE("coherent state amplitudes and tail accounting") {
    auto basis = make_basis({1, 6});

    SUBCASE("zero displacement gives the vacuum") {
        StateVector vac = coherent_state(basis, {cplx(0.0, 0.0)});
        CHECK(std::abs(vac.amplitudes(0) - cplx(1.0, 0.0)) < 1e-15);
        CHECK(vac.amplitudes.tail(vac.amplitudes.size() - 1).norm() == 0.0);
        CHECK(vac.discarded_tail == 0.0);
    }

    SUBCASE("closed-form single-photon coefficient") {
        StateVector s = coherent_state(basis, {cplx(0.1, 0.0)});
        const double expected = 0.1 * std::exp(-0.005);
        CHECK(std::abs(s.amplitudes(1).real() - expected) < 1e-12);
        CHECK(std::abs(s.amplitudes.norm() - 1.0) < 1e-14);
    }

    SUBCASE("tail violation names the required cutoff") {
        auto small = make_basis({1, 2});
        CHECK_THROWS_WITH_AS(coherent_state(small, {cplx(1.5, 0.0)}),
                             doctest::Contains("photon_cutoff >="), std::invalid_argument);
    }
}

TEST_CASE("ladder operators") {
    auto basis = make_basis({1, 4});

    StateVector vac = vacuum_state(basis);
    CHECK(apply_annihilation(vac, 0).amplitudes.norm() == 0.0);

    StateVector two = vacuum_state(basis);
    two.amplitudes.setZero();
    two.amplitudes(2) = 1.0;  // |2>
    StateVector lowered = apply_annihilation(two, 0);
    CHECK(std::abs(lowered.amplitudes(1) - cplx(std::sqrt(2.0), 0.0)) < 1e-15);

    StateVector raised = apply_creation(lowered, 0);
    CHECK(std::abs(raised.amplitudes(2) - cplx(2.0, 0.0)) < 1e-15);
}

TEST_CASE("coherent eigenvalue property") {
    // Cutoff chosen with headroom: the defect lives at the cutoff boundary
    // and scales like sqrt of the boundary occupancy, not like the tail.
    auto basis = make_basis({2, 8});
    std::vector<cplx> alphas{cplx(0.07, 0.02), cplx(-0.03, 0.05)};
    StateVector s = coherent_state(basis, alphas);
    for (int mode = 0; mode < 2; ++mode) {
        StateVector lowered = apply_annihilation(s, mode);
        lowered.amplitudes -= alphas[static_cast<std::size_t>(mode)] * s.amplitudes;
        CHECK(lowered.amplitudes.norm() < 10.0 * 1e-10);
    }
}

TEST_CASE("random unitaries meet their construction contract") {
    auto basis = make_basis({2, 3});

    SUBCASE("identity kind") {
        TruncatedUnitary u = random_unitary(basis, UnitaryKind::identity, 3);
        CHECK(unitarity_defect(u) == 0.0);
        CHECK(u.matrix(1, 1) == cplx(1.0, 0.0));
    }

    SUBCASE("unitarity and exact vacuum fixing") {
        for (std::uint64_t seed : {1ull, 7ull, 42ull}) {
            for (auto kind : {UnitaryKind::elastic, UnitaryKind::general_vacuum_fixing}) {
                TruncatedUnitary u = random_unitary(basis, kind, seed);
                CHECK(unitarity_defect(u) < 1e-12);
                CHECK(u.matrix(0, 0) == cplx(1.0, 0.0));
                CHECK(u.matrix.col(0).tail(u.matrix.rows() - 1).norm() == 0.0);
                CHECK(u.matrix.row(0).tail(u.matrix.cols() - 1).norm() == 0.0);
            }
        }
    }

    SUBCASE("elastic blocks commute with the total number operator") {
        auto b22 = make_basis({2, 2});
        TruncatedUnitary u = random_unitary(b22, UnitaryKind::elastic, 7);
        const Eigen::Index dim = u.matrix.rows();
        Eigen::MatrixXcd number = Eigen::MatrixXcd::Zero(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i)
            number(i, i) = static_cast<double>(b22->total_photons(static_cast<std::size_t>(i)));
        Eigen::MatrixXcd comm = u.matrix * number - number * u.matrix;
        CHECK(comm.cwiseAbs().maxCoeff() < 1e-12);

        // Cross-sector elements are exactly zero, not merely small.
        for (Eigen::Index r = 0; r < dim; ++r)
            for (Eigen::Index c = 0; c < dim; ++c)
                if (b22->total_photons(static_cast<std::size_t>(r)) !=
                    b22->total_photons(static_cast<std::size_t>(c)))
                    CHECK(u.matrix(r, c) == cplx(0.0, 0.0));
    }

    SUBCASE("seeded construction is bit identical") {
        TruncatedUnitary a = random_unitary(basis, UnitaryKind::elastic, 7);
        TruncatedUnitary b = random_unitary(basis, UnitaryKind::elastic, 7);
        TruncatedUnitary c = random_unitary(basis, UnitaryKind::elastic, 8);
        CHECK((a.matrix.array() == b.matrix.array()).all());
        CHECK_FALSE((a.matrix.array() == c.matrix.array()).all());
    }
}

TEST_CASE("correlation on coherent inputs") {
    auto basis = make_basis({2, 8});
    std::vector<cplx> alphas{cplx(0.08, 0.01), cplx(0.03, -0.06)};
    StateVector input = coherent_state(basis, alphas);
    TruncatedUnitary id = random_unitary(basis, UnitaryKind::identity, 0);

    CHECK(std::abs(correlation(id, input, {0}) - alphas[0]) < 1e-9);
    CHECK(std::abs(correlation(id, input, {1, 1}) - alphas[1] * alphas[1]) < 1e-9);

    SUBCASE("matches an independently coded dense evaluation") {
        auto b26 = make_basis({2, 6});
        std::vector<cplx> small{cplx(0.0707, 0.0), cplx(0.0, 0.0707)};  // |alpha|^2 = 0.01
        StateVector in = coherent_state(b26, small);
        TruncatedUnitary u = random_unitary(b26, UnitaryKind::elastic, 7);
        Eigen::VectorXcd evolved = u.matrix * in.amplitudes;
        Eigen::MatrixXcd a0 = annihilation_matrix(*b26, 0);
        Eigen::MatrixXcd a1 = annihilation_matrix(*b26, 1);
        const cplx dense = evolved.dot(a0 * (a1 * evolved));
        CHECK(std::abs(correlation(u, in, {0, 1}) - dense) < 1e-13);
        const double dense_m2 = (a0 * (a1 * evolved)).squaredNorm();
        CHECK(correlation_second_moment(u, in, {0, 1}) == doctest::Approx(dense_m2).epsilon(1e-12));
    }
}

TEST_CASE("exact scattering elements for the identity evolution") {
    auto basis = make_basis({2, 4});
    TruncatedUnitary id = random_unitary(basis, UnitaryKind::identity, 0);
    CHECK(std::abs(exact_s_element(id, {0}, {0}) - cplx(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(exact_s_element(id, {0, 0}, {0, 0}) - cplx(2.0, 0.0)) < 1e-15);
    CHECK(std::abs(exact_s_element(id, {0}, {1})) < 1e-15);
    CHECK_THROWS_AS(exact_s_element(id, {0, 0, 0, 0, 0}, {0}), std::invalid_argument);
}

TEST_CASE("cutoff guidance tracks the Poisson tail") {
    CHECK(recommended_cutoff(0.0, 2) == 4);
    const int n = recommended_cutoff(0.01, 2);
    CHECK(poisson_tail(0.01, n) < 1e-10);
    CHECK(n >= 4);
    const int big = recommended_cutoff(1.0, 2);
    CHECK(poisson_tail(1.0, big) < 1e-10);
    CHECK(poisson_tail(1.0, big - 1) >= 1e-10);
}
