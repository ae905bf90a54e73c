#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ericson/error.hpp"
#include "ericson/ensembles.hpp"

using namespace ericson;

namespace {

std::vector<double> eigenvalues(const Hamiltonian& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.entries, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

// Sup distance between the empirical distribution of `levels` and the
// normalised semicircle staircase.
double semicircle_distance(std::vector<double> levels, Eigen::Index n) {
    std::sort(levels.begin(), levels.end());
    double worst = 0.0;
    const double total = static_cast<double>(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double model = semicircle_staircase(n, levels[i]) / static_cast<double>(n);
        worst = std::max({worst, std::abs(model - i / total), std::abs(model - (i + 1) / total)});
    }
    return worst;
}

// Fraction of unfolded nearest-neighbour spacings below 0.3 in the central
// half of the spectrum.
double small_spacing_fraction(const std::vector<Hamiltonian>& hs) {
    long small = 0, total = 0;
    for (const auto& h : hs) {
        const auto ev = eigenvalues(h);
        const auto n = h.dim();
        for (std::size_t i = n / 4; i + 1 < static_cast<std::size_t>(3 * n / 4); ++i) {
            const double s = semicircle_staircase(n, ev[i + 1]) - semicircle_staircase(n, ev[i]);
            small += s < 0.3 ? 1 : 0;
            ++total;
        }
    }
    return static_cast<double>(small) / static_cast<double>(total);
}

} // namespace

TEST_CASE("semicircle density integrates to N and the staircase is its primitive") {
    const Eigen::Index n = 80;
    const double r = kSemicircleRadius;
    CHECK(semicircle_staircase(n, -r) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(semicircle_staircase(n, r) == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(semicircle_staircase(n, 0.0) == doctest::Approx(40.0).epsilon(1e-12));
    for (double e : {-1.2, -0.5, 0.0, 0.3, 1.1}) {
        const double h = 1e-5;
        const double numeric = (semicircle_staircase(n, e + h) - semicircle_staircase(n, e - h)) / (2 * h);
        CHECK(numeric == doctest::Approx(semicircle_density(n, e)).epsilon(1e-6));
    }
    CHECK(semicircle_mean_spacing(n) == doctest::Approx(std::numbers::pi * r / (2.0 * n)).epsilon(1e-12));
}

TEST_CASE("GOE samples are real symmetric with the stated variances") {
    const Eigen::Index n = 200;
    const Hamiltonian h = sample_goe(n, RngPlan{11, 0});
    CHECK(h.is_real());
    CHECK((h.entries - h.entries.transpose()).norm() == 0.0);
    const double v2 = 1.0 / (2.0 * n);
    double off = 0.0, diag = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        diag += std::norm(h.entries(i, i));
        for (Eigen::Index j = i + 1; j < n; ++j) off += std::norm(h.entries(i, j));
    }
    CHECK(off / (n * (n - 1) / 2.0) == doctest::Approx(v2).epsilon(0.03));
    CHECK(diag / n == doctest::Approx(2.0 * v2).epsilon(0.25));
}

TEST_CASE("GOE eigenvalues follow the semicircle") {
    const Eigen::Index n = 200;
    std::vector<double> levels;
    for (std::uint64_t r = 0; r < 500; ++r) {
        const auto ev = eigenvalues(sample_goe(n, RngPlan{12, r}));
        levels.insert(levels.end(), ev.begin(), ev.end());
    }
    CHECK(semicircle_distance(levels, n) < 0.05);
}

TEST_CASE("GUE samples are Hermitian and follow the semicircle") {
    const Eigen::Index n = 100;
    std::vector<double> levels;
    for (std::uint64_t r = 0; r < 200; ++r) {
        const Hamiltonian h = sample_gue(n, RngPlan{13, r});
        REQUIRE((h.entries - h.entries.adjoint()).norm() < 1e-14);
        const auto ev = eigenvalues(h);
        levels.insert(levels.end(), ev.begin(), ev.end());
    }
    CHECK(semicircle_distance(levels, n) < 0.02);
}

TEST_CASE("partial_t at xi = 0 reproduces the GOE draw") {
    const RngPlan plan{14, 3};
    const Hamiltonian goe = sample_goe(60, plan);
    const Hamiltonian pt = sample_partial_t(60, 0.0, plan);
    CHECK((goe.entries - pt.entries).norm() == 0.0);
}

TEST_CASE("partial_t at xi = 1 has GUE-like level repulsion") {
    const Eigen::Index n = 100;
    std::vector<Hamiltonian> goe, gue, pt;
    for (std::uint64_t r = 0; r < 60; ++r) {
        goe.push_back(sample_goe(n, RngPlan{15, r}));
        gue.push_back(sample_gue(n, RngPlan{15, r}));
        const Hamiltonian h = sample_partial_t(n, 1.0, RngPlan{15, r});
        REQUIRE((h.entries - h.entries.adjoint()).norm() < 1e-14);
        pt.push_back(h);
    }
    const double f_goe = small_spacing_fraction(goe);
    const double f_gue = small_spacing_fraction(gue);
    const double f_pt = small_spacing_fraction(pt);
    CHECK(f_gue < f_goe);
    CHECK(std::abs(f_pt - f_gue) < std::abs(f_pt - f_goe));
}

TEST_CASE("parametric family interpolates the pair and is 2 pi periodic") {
    const ParametricPair pair = sample_parametric_pair(40, RngPlan{16, 0});
    CHECK((parametric_matrix(pair, 0.0) - pair.first.entries.real()).norm() == 0.0);
    CHECK((parametric_matrix(pair, std::numbers::pi / 2) - pair.second.entries.real()).norm() < 1e-15);
    CHECK((pair.first.entries - pair.second.entries).norm() > 1.0);
    for (double mu : {0.1, 0.7, 2.0}) {
        const Eigen::MatrixXd a = parametric_matrix(pair, mu);
        const Eigen::MatrixXd b = parametric_matrix(pair, mu + 2 * std::numbers::pi);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((parametric_hamiltonian(pair, mu).entries.real() - a).norm() == 0.0);
    }
}

TEST_CASE("parametric family is continuous in mu") {
    const ParametricPair pair = sample_parametric_pair(40, RngPlan{17, 0});
    const double bound = pair.first.entries.norm() + pair.second.entries.norm();
    for (double delta : {1e-2, 1e-4, 1e-6}) {
        const double jump = (parametric_matrix(pair, 0.4 + delta) - parametric_matrix(pair, 0.4)).norm();
        CHECK(jump <= bound * delta * 1.0001);
    }
}

TEST_CASE("invalid dimensions are rejected") {
    CHECK_THROWS(sample_goe(0, RngPlan{}));
    CHECK_THROWS(sample_partial_t(10, -1.0, RngPlan{}));
}
