#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ericson/error.hpp"
#include "ericson/fits.hpp"
#include "ericson/rng.hpp"

using namespace ericson;

namespace {

std::vector<ProductPoint> sample(const AnsatzModel& m, double sigma, std::uint64_t seed, int n = 30) {
    CounterRng rng({seed, 0}, Stream::noise);
    std::vector<ProductPoint> out;
    for (int i = 0; i < n; ++i) {
        ProductPoint p;
        p.gamma = 0.1 + 1.8 * i / (n - 1);
        p.product = eval_ansatz(m, p.gamma) + sigma * rng.normal();
        p.std_error = sigma;
        out.push_back(p);
    }
    return out;
}

} // namespace

TEST_CASE("ansatz values at reference parameters") {
    const AnsatzModel lor = AnsatzModel::reference(AnsatzFamily::freq_lorentzian);
    CHECK(lor.params == std::vector<double>{1.0, 1.0 / 3.0});
    CHECK(eval_ansatz(lor, 0.0) == 0.0);
    CHECK(eval_ansatz(lor, 1.0) == doctest::Approx(0.4774).epsilon(1e-4));
    CHECK(eval_ansatz(lor, 1.0) == doctest::Approx(kLorentzianPlateau / std::sqrt(4.0 / 3.0)).epsilon(1e-14));
    CHECK(eval_ansatz(lor, 1e9) == doctest::Approx(0.5513).epsilon(1e-4));

    const AnsatzModel par = AnsatzModel::reference(AnsatzFamily::parametric);
    CHECK(par.asymptote() == doctest::Approx(0.6752).epsilon(1e-4));
    CHECK(eval_ansatz(par, 1e9) == doctest::Approx(0.6752).epsilon(1e-4));

    const AnsatzModel two = AnsatzModel::reference(AnsatzFamily::two_channel);
    CHECK(two.asymptote() == doctest::Approx(0.39));
    CHECK(two.param_names() == std::vector<std::string>{"d0", "d1", "d2"});

    CHECK_THROWS_AS(eval_ansatz(AnsatzModel{AnsatzFamily::freq_lorentzian, {1.0, -1.0}}, 0.5), DomainError);
    CHECK_THROWS_AS(eval_ansatz(AnsatzModel{AnsatzFamily::freq_lorentzian, {1.0}}, 0.5), DomainError);
}

TEST_CASE("asymptotes are approached at large argument") {
    for (AnsatzFamily f : {AnsatzFamily::freq_lorentzian, AnsatzFamily::two_channel, AnsatzFamily::parametric}) {
        AnsatzModel m = AnsatzModel::reference(f);
        m.params[0] = 1.3;
        CHECK(eval_ansatz(m, 1e6) / m.asymptote() == doctest::Approx(1.3).epsilon(1e-4));
    }
}

TEST_CASE("Lorentzian ansatz is increasing and bounded") {
    const AnsatzModel m{AnsatzFamily::freq_lorentzian, {0.9, 0.4}};
    double prev = -1.0;
    for (double x = 0.0; x < 50.0; x += 0.05) {
        const double v = eval_ansatz(m, x);
        CHECK(v > prev);
        CHECK(v < 0.9 * kLorentzianPlateau);
        prev = v;
    }
}

TEST_CASE("quantum-dot predictions") {
    const AnsatzModel sq{AnsatzFamily::qd_squared_lorentzian, {}};
    CHECK(eval_qd(sq, 1.0) == doctest::Approx(3.0 / (std::numbers::pi * std::numbers::sqrt2)).epsilon(1e-14));
    CHECK(eval_qd(sq, 1e-9) == doctest::Approx(0.6752).epsilon(1e-4));
    for (double kappa : {0.0, 5.0, 10.0}) {
        const AnsatzModel l{AnsatzFamily::qd_lorentzian, {kappa}};
        CHECK(eval_qd(l, 1.0) == doctest::Approx(kLorentzianPlateau * std::sqrt(1.0 / (11.0 - kappa))).epsilon(1e-14));
    }
    CHECK(eval_qd(AnsatzModel{AnsatzFamily::qd_lorentzian, {10.0}}, 1.0) == doctest::Approx(kLorentzianPlateau));
    CHECK_THROWS_AS(eval_qd(AnsatzModel{AnsatzFamily::qd_lorentzian, {12.0}}, 1.0), DomainError);
    CHECK_THROWS_AS(eval_qd(sq, 0.0), DomainError);
    CHECK_THROWS_AS(eval_qd(sq, 1.5), DomainError);
    CHECK_THROWS_AS(eval_qd(AnsatzModel::reference(AnsatzFamily::parametric), 0.5), DomainError);
}

TEST_CASE("noisy fit recovers the generating parameters") {
    const AnsatzModel truth = AnsatzModel::reference(AnsatzFamily::freq_lorentzian);
    const FitResult r = fit_ansatz(sample(truth, 0.005, 51), AnsatzFamily::freq_lorentzian);
    CHECK(r.converged);
    CHECK(r.params[0] == doctest::Approx(1.0).epsilon(0.03));
    CHECK(std::abs(r.params[1] - 1.0 / 3.0) < 0.05);
    CHECK(r.param_stderr[0] > 0.0);
    CHECK(r.n_points == 30);
}

TEST_CASE("noiseless fits interpolate their own model") {
    for (AnsatzFamily f : {AnsatzFamily::freq_lorentzian, AnsatzFamily::two_channel, AnsatzFamily::parametric}) {
        const AnsatzModel truth = AnsatzModel::reference(f);
        auto pts = sample(truth, 0.0, 52);
        const FitResult r = fit_ansatz(pts, f);
        CHECK(r.converged);
        CHECK(r.residual_norm < 1e-10);
        for (std::size_t i = 0; i < truth.params.size(); ++i)
            CHECK(r.params[i] == doctest::Approx(truth.params[i]).epsilon(1e-6));
    }
}

TEST_CASE("refitting from the optimum is idempotent") {
    const auto pts = sample(AnsatzModel::reference(AnsatzFamily::freq_lorentzian), 0.01, 53);
    const FitResult a = fit_ansatz(pts, AnsatzFamily::freq_lorentzian);
    const FitResult b = fit_ansatz(pts, AnsatzFamily::freq_lorentzian, a.params);
    for (std::size_t i = 0; i < a.params.size(); ++i) CHECK(std::abs(a.params[i] - b.params[i]) < 1e-10);
}

TEST_CASE("scaling the products scales the amplitude only") {
    auto pts = sample(AnsatzModel::reference(AnsatzFamily::freq_lorentzian), 0.01, 54);
    const FitResult a = fit_ansatz(pts, AnsatzFamily::freq_lorentzian);
    for (auto& p : pts) {
        p.product *= 1.7;
        p.std_error *= 1.7;
    }
    const FitResult b = fit_ansatz(pts, AnsatzFamily::freq_lorentzian);
    CHECK(b.params[0] == doctest::Approx(1.7 * a.params[0]).epsilon(1e-8));
    CHECK(std::abs(b.params[1] - a.params[1]) < 1e-8);
}

TEST_CASE("fit preconditions") {
    const auto pts = sample(AnsatzModel::reference(AnsatzFamily::freq_lorentzian), 0.0, 55, 3);
    CHECK_THROWS_AS(fit_ansatz(pts, AnsatzFamily::freq_lorentzian), DomainError);
    const auto more = sample(AnsatzModel::reference(AnsatzFamily::freq_lorentzian), 0.0, 55, 8);
    CHECK_THROWS_AS(fit_ansatz(more, AnsatzFamily::qd_lorentzian), DomainError);
    CHECK_THROWS_AS(fit_ansatz(more, AnsatzFamily::freq_lorentzian, std::vector<double>{1.0}), DomainError);
}

TEST_CASE("chi ratio against a quantum-dot model") {
    const AnsatzModel qd{AnsatzFamily::qd_squared_lorentzian, {}};
    std::vector<ProductPoint> pts;
    for (double g : {0.2, 0.5, 1.0}) {
        ProductPoint p;
        p.gamma = 0.3;
        p.product = eval_qd(qd, g);
        p.tunneling = g;
        pts.push_back(p);
    }
    for (const auto& [g, chi] : chi_ratio(pts, qd)) CHECK(chi == doctest::Approx(1.0).epsilon(1e-14));
    pts[0].tunneling.reset();
    CHECK_THROWS(chi_ratio(pts, qd));
}

TEST_CASE("fit results round-trip through JSON") {
    const auto pts = sample(AnsatzModel::reference(AnsatzFamily::parametric), 0.01, 56);
    const FitResult r = fit_ansatz(pts, AnsatzFamily::parametric);
    const auto j = to_json(r);
    CHECK(j.at("family") == "parametric");
    CHECK(j.at("params").contains("c1"));
    CHECK(j.at("stderr").contains("c2"));
    const FitResult back = fit_result_from_json(j);
    CHECK(back.params == r.params);
    CHECK(back.converged == r.converged);
    CHECK(back.n_points == r.n_points);
    CHECK(to_json(back) == j);
    CHECK(ansatz_family_from_string(to_string(AnsatzFamily::two_channel)) == AnsatzFamily::two_channel);
    CHECK_THROWS(ansatz_family_from_string("cubic"));
}
