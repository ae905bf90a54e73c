#include "ericson/fits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ericson/error.hpp"
#include "least_squares.hpp"

namespace ericson {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_params(const AnsatzModel& m, std::size_t n) {
    if (m.params.size() != n)
        throw DomainError(std::string("family ") + to_string(m.family) + " expects " +
                          std::to_string(n) + " parameters");
}

// Prefactor times x / sqrt(x^2 + b x + c) and its gradient in (amp, b, c).
double saturating(double prefactor, double amp, double b, double c, double x, double grad[3]) {
    const double radicand = x * x + b * x + c;
    if (!(radicand > 0.0)) throw DomainError("ansatz radicand is not positive");
    const double r = std::sqrt(radicand);
    const double base = prefactor * x / r;
    if (grad) {
        const double d = -0.5 * prefactor * amp * x / (radicand * r);
        grad[0] = base;
        grad[1] = d * x;
        grad[2] = d;
    }
    return amp * base;
}

} // namespace

const char* to_string(AnsatzFamily f) {
    switch (f) {
    case AnsatzFamily::freq_lorentzian: return "freq_lorentzian";
    case AnsatzFamily::two_channel: return "two_channel";
    case AnsatzFamily::parametric: return "parametric";
    case AnsatzFamily::qd_lorentzian: return "qd_lorentzian";
    case AnsatzFamily::qd_squared_lorentzian: return "qd_squared_lorentzian";
    }
    return "?";
}

AnsatzFamily ansatz_family_from_string(const std::string& s) {
    for (auto f : {AnsatzFamily::freq_lorentzian, AnsatzFamily::two_channel, AnsatzFamily::parametric,
                   AnsatzFamily::qd_lorentzian, AnsatzFamily::qd_squared_lorentzian})
        if (s == to_string(f)) return f;
    throw ConfigError("unknown ansatz family '" + s + "'");
}

double AnsatzModel::asymptote() const {
    switch (family) {
    case AnsatzFamily::freq_lorentzian: return kLorentzianPlateau;
    case AnsatzFamily::two_channel: return kTwoChannelPlateau;
    case AnsatzFamily::parametric: return kParametricPlateau;
    case AnsatzFamily::qd_lorentzian: return kLorentzianPlateau;
    case AnsatzFamily::qd_squared_lorentzian: return kParametricPlateau;
    }
    return 0.0;
}

std::vector<std::string> AnsatzModel::param_names() const {
    switch (family) {
    case AnsatzFamily::freq_lorentzian: return {"a0", "a1"};
    case AnsatzFamily::two_channel: return {"d0", "d1", "d2"};
    case AnsatzFamily::parametric: return {"c0", "c1", "c2"};
    case AnsatzFamily::qd_lorentzian: return {"kappa"};
    case AnsatzFamily::qd_squared_lorentzian: return {};
    }
    return {};
}

bool AnsatzModel::is_quantum_dot() const {
    return family == AnsatzFamily::qd_lorentzian || family == AnsatzFamily::qd_squared_lorentzian;
}

AnsatzModel AnsatzModel::initial(AnsatzFamily family) {
    switch (family) {
    case AnsatzFamily::freq_lorentzian: return {family, {1.0, 0.3}};
    case AnsatzFamily::two_channel:
    case AnsatzFamily::parametric: return {family, {1.0, 0.3, 0.3}};
    case AnsatzFamily::qd_lorentzian: return {family, {10.0}};
    case AnsatzFamily::qd_squared_lorentzian: return {family, {}};
    }
    return {family, {}};
}

AnsatzModel AnsatzModel::reference(AnsatzFamily family) {
    switch (family) {
    case AnsatzFamily::freq_lorentzian: return {family, {1.0, 1.0 / 3.0}};
    case AnsatzFamily::two_channel: return {family, {1.0, -1.0 / 3.0, 1.0 / 6.0}};
    case AnsatzFamily::parametric: return {family, {1.0, -0.5, 1.0 / 3.0}};
    default: return initial(family);
    }
}

double eval_ansatz(const AnsatzModel& m, double x) {
    if (!(x >= 0.0)) throw DomainError("ansatz abscissa must be non-negative");
    switch (m.family) {
    case AnsatzFamily::freq_lorentzian:
        require_params(m, 2);
        return saturating(kLorentzianPlateau, m.params[0], 0.0, m.params[1], x, nullptr);
    case AnsatzFamily::two_channel:
        require_params(m, 3);
        return saturating(kTwoChannelPlateau, m.params[0], m.params[1], m.params[2], x, nullptr);
    case AnsatzFamily::parametric:
        require_params(m, 3);
        return saturating(kParametricPlateau, m.params[0], m.params[1], m.params[2], x, nullptr);
    case AnsatzFamily::qd_lorentzian:
    case AnsatzFamily::qd_squared_lorentzian:
        return eval_qd(m, x);
    }
    return 0.0;
}

double eval_qd(const AnsatzModel& m, double g) {
    if (!(g > 0.0 && g <= 1.0)) throw DomainError("tunneling probability must lie in (0, 1]");
    double num = 0.0, den = 0.0, pre = 0.0;
    if (m.family == AnsatzFamily::qd_lorentzian) {
        require_params(m, 1);
        num = 9.0 * g * g - 18.0 * g + 10.0;
        den = 5.0 * g * g - m.params[0] * g + 6.0;
        pre = kLorentzianPlateau;
    } else if (m.family == AnsatzFamily::qd_squared_lorentzian) {
        num = 7.0 * g * g - 10.0 * g + 6.0;
        den = 2.0 * g * g - 3.0 * g + 2.0;
        pre = std::sqrt(3.0) / (std::numbers::pi * std::sqrt(2.0));
    } else {
        throw DomainError(std::string("family ") + to_string(m.family) + " is not a quantum-dot model");
    }
    if (!(den > 0.0)) throw DomainError("quantum-dot denominator is not positive");
    return pre * std::sqrt(num / den);
}

FitResult fit_ansatz(std::span<const ProductPoint> points, AnsatzFamily family,
                     std::optional<std::vector<double>> start) {
    AnsatzModel init = AnsatzModel::initial(family);
    if (init.is_quantum_dot()) throw DomainError("quantum-dot predictions are not fitted");
    const std::size_t k = init.params.size();
    if (start) {
        if (start->size() != k) throw DomainError("start vector has the wrong length");
        init.params = *start;
    }
    if (points.size() < 2 * k) throw DomainError("need at least twice as many points as parameters");

    std::vector<double> x, y, w;
    bool weighted = true;
    double min_x2 = kInf;
    for (const auto& p : points) {
        if (!(p.gamma > 0.0)) throw DomainError("correlation widths must be positive");
        x.push_back(p.gamma);
        y.push_back(p.product);
        w.push_back(p.std_error > 0.0 ? 1.0 / (p.std_error * p.std_error) : 0.0);
        weighted = weighted && p.std_error > 0.0;
        min_x2 = std::min(min_x2, p.gamma * p.gamma);
    }

    detail::LeastSquaresProblem pr;
    pr.x = x;
    pr.y = y;
    if (weighted) pr.weights = w;
    double prefactor = 0.0;
    if (family == AnsatzFamily::freq_lorentzian) {
        prefactor = kLorentzianPlateau;
        pr.lower = {1e-12, -0.99 * min_x2};
        pr.upper = {10.0, 100.0};
        pr.model = [prefactor](double xv, std::span<const double> p, std::span<double> g) {
            double full[3];
            const double v = saturating(prefactor, p[0], 0.0, p[1], xv, full);
            g[0] = full[0];
            g[1] = full[2];
            return v;
        };
    } else {
        prefactor = family == AnsatzFamily::two_channel ? kTwoChannelPlateau : kParametricPlateau;
        pr.lower = {1e-12, -2.0, 1e-12};
        pr.upper = {10.0, 2.0, 2.0};
        pr.model = [prefactor](double xv, std::span<const double> p, std::span<double> g) {
            return saturating(prefactor, p[0], p[1], p[2], xv, g.data());
        };
    }

    const auto res = detail::levenberg_marquardt(pr, init.params);
    FitResult out;
    out.family = family;
    out.params = res.params;
    out.param_stderr = res.stderr_;
    out.residual_norm = res.rms;
    out.converged = res.converged;
    out.iterations = res.iterations;
    out.n_points = static_cast<int>(points.size());
    return out;
}

std::vector<std::pair<double, double>> chi_ratio(std::span<const ProductPoint> points,
                                                 const AnsatzModel& qd_model) {
    std::vector<std::pair<double, double>> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        if (!p.tunneling) throw DomainError("product point carries no tunneling probability");
        out.emplace_back(*p.tunneling, p.product / eval_qd(qd_model, *p.tunneling));
    }
    return out;
}

nlohmann::json to_json(const FitResult& r) {
    const auto names = r.model().param_names();
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json errs = nlohmann::json::object();
    for (std::size_t i = 0; i < names.size() && i < r.params.size(); ++i) {
        params[names[i]] = r.params[i];
        const double e = i < r.param_stderr.size() ? r.param_stderr[i] : kInf;
        if (std::isfinite(e)) errs[names[i]] = e;
        else errs[names[i]] = nullptr;
    }
    return {{"family", to_string(r.family)}, {"params", params},         {"stderr", errs},
            {"residual_norm", r.residual_norm}, {"converged", r.converged}, {"n_points", r.n_points}};
}

FitResult fit_result_from_json(const nlohmann::json& j) {
    try {
        FitResult r;
        r.family = ansatz_family_from_string(j.at("family").get<std::string>());
        const auto names = r.model().param_names();
        for (const auto& n : names) {
            r.params.push_back(j.at("params").at(n).get<double>());
            const auto& e = j.at("stderr").at(n);
            r.param_stderr.push_back(e.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                 : e.get<double>());
        }
        r.residual_norm = j.at("residual_norm").get<double>();
        r.converged = j.at("converged").get<bool>();
        r.n_points = j.at("n_points").get<int>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed fit result: ") + e.what());
    }
}

} // namespace ericson
