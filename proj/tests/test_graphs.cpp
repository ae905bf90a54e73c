#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ericson/error.hpp"
#include "ericson/graphs.hpp"

using namespace ericson;

namespace {

constexpr double kPi = std::numbers::pi;

} // namespace

TEST_CASE("first primes") {
    CHECK(first_primes(8) == std::vector<int>{2, 3, 5, 7, 11, 13, 17, 19});
    CHECK(first_primes(0).empty());
}

TEST_CASE("tetrahedron has six bonds with square-root prime lengths") {
    const GraphSpec g = make_tetrahedron(1.0, {0, 1});
    CHECK(g.vertices() == 4);
    REQUIRE(g.bonds().size() == 6);
    CHECK(g.degrees() == std::vector<int>{3, 3, 3, 3});
    CHECK(g.connected());
    const std::vector<int> primes{2, 3, 5, 7, 11, 13};
    double total = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(g.bonds()[k].length == doctest::Approx(std::sqrt(primes[k])).epsilon(1e-15));
        total += std::sqrt(primes[k]);
    }
    CHECK(g.total_length() == doctest::Approx(total));
    CHECK(g.channels() == 2);
    CHECK_THROWS_AS(make_tetrahedron(1.0, {2, 2}), DomainError);
}

TEST_CASE("random regular graphs are simple, connected and deterministic") {
    for (int degree : {3, 4}) {
        const GraphSpec g = make_random_regular(60, degree, RngPlan{31, 0}, 5);
        CHECK(g.vertices() == 60);
        CHECK(g.bonds().size() == static_cast<std::size_t>(60 * degree / 2));
        for (int d : g.degrees()) CHECK(d == degree);
        CHECK(g.connected());
        CHECK(g.channels() == 5);
        for (const auto& b : g.bonds()) CHECK(b.i < b.j);
        const GraphSpec again = make_random_regular(60, degree, RngPlan{31, 0}, 5);
        CHECK(graph_to_json(g) == graph_to_json(again));
    }
    const GraphSpec other = make_random_regular(60, 3, RngPlan{31, 1}, 5);
    CHECK(graph_to_json(other) != graph_to_json(make_random_regular(60, 3, RngPlan{31, 0}, 5)));
    CHECK_THROWS_AS(make_random_regular(7, 3, RngPlan{}, 2), DomainError);
}

TEST_CASE("graph matrix is Hermitian with hopping 1/|sin|") {
    const GraphSpec g = make_tetrahedron(1.0, {0, 1}).with_uniform_potential(0.5);
    for (double f : {0.37, 1.91, 5.123}) {
        const auto v = graph_hamiltonian(g, f);
        CHECK((v.h - v.h.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
        for (const auto& b : g.bonds()) {
            const double s = std::sin(2.0 * kPi * f * b.length);
            CHECK(std::abs(v.h(b.i, b.j)) == doctest::Approx(1.0 / std::abs(s)).epsilon(1e-12));
        }
    }
}

TEST_CASE("single bond matrix is periodic in f with period 1/L") {
    const double length = std::sqrt(3.0);
    const GraphSpec g(2, {{0, 1, length, 0.0}}, {0}, 1.0);
    for (double f : {0.1, 0.23, 0.4}) {
        const auto a = graph_hamiltonian(g, f);
        const auto b = graph_hamiltonian(g, f + 1.0 / length);
        CHECK((a.h - b.h).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("singular frequencies raise and are skipped in sweeps") {
    const GraphSpec g = make_tetrahedron(1.0, {0, 1});
    const double f_singular = 1.0 / (2.0 * g.bonds()[0].length);
    CHECK_THROWS_AS(graph_hamiltonian(g, f_singular), SingularityError);
    std::vector<double> grid;
    for (int i = -100; i <= 100; ++i) grid.push_back(f_singular + 1e-3 * i);
    grid[100] = f_singular;
    const SMatrixSpectrum s = graph_sweep(g, grid);
    CHECK(s.metadata.skipped.size() == 1);
    CHECK(s.size() == grid.size() - 1);
}

TEST_CASE("graph S-matrix is unitary, and reciprocal only without potential") {
    const GraphSpec plain = make_random_regular(30, 3, RngPlan{32, 0}, 4, 1.2);
    const GraphSpec magnetic = plain.with_uniform_potential(0.5);
    CounterRng pick({32, 1}, Stream::noise);
    double worst = 0.0, recip = 0.0, broken = 0.0;
    int evaluated = 0;
    while (evaluated < 1000) {
        const double f = 50.0 * pick.uniform();
        try {
            const Eigen::MatrixXcd s = graph_s_matrix(plain, f);
            const Eigen::MatrixXcd sm = graph_s_matrix(magnetic, f);
            worst = std::max({worst, unitarity_defect(s), unitarity_defect(sm)});
            recip = std::max(recip, reciprocity_defect(s));
            broken = std::max(broken, reciprocity_defect(sm));
            ++evaluated;
        } catch (const SingularityError&) {
        }
    }
    CHECK(worst < 1e-10);
    CHECK(recip < 1e-10);
    CHECK(broken > 1e-3);
}

TEST_CASE("resonance density is twice the total bond length") {
    const GraphSpec g = make_tetrahedron(1.0, {0, 1});
    const double rho = measure_resonance_density(g, 10.0, 40.0, 60000);
    CHECK(rho == doctest::Approx(2.0 * g.total_length()).epsilon(0.1));
}

TEST_CASE("graph JSON round trip") {
    const GraphSpec g = make_random_regular(20, 3, RngPlan{33, 0}, 3, 0.8).with_uniform_potential(0.25);
    const std::string text = graph_to_json(g);
    const GraphSpec back = graph_from_json(text);
    CHECK(graph_to_json(back) == text);
    CHECK(back.coupling() == g.coupling());
    CHECK(back.leads() == g.leads());
    CHECK_THROWS_AS(graph_from_json("{\"vertices\": 3}"), ConfigError);
}

TEST_CASE("graph validation") {
    CHECK_THROWS_AS(GraphSpec(2, {{0, 0, 1.0, 0.0}}, {0}, 1.0), DomainError);
    CHECK_THROWS_AS(GraphSpec(2, {{0, 1, -1.0, 0.0}}, {0}, 1.0), DomainError);
    CHECK_THROWS_AS(GraphSpec(2, {{0, 1, 1.0, 0.0}}, {0, 0}, 1.0), DomainError);
    CHECK_THROWS_AS(GraphSpec(2, {{0, 1, 1.0, 0.0}}, {0}, 3.0), DomainError);
}
