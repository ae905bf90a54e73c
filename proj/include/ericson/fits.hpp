#pragma once

#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ericson/analysis.hpp"

namespace ericson {

enum class AnsatzFamily {
    freq_lorentzian,      // sqrt(3)/pi a0 x / sqrt(x^2 + a1)
    two_channel,          // 0.39 d0 x / sqrt(x^2 + d1 x + d2)
    parametric,           // 3/(pi sqrt 2) c0 x / sqrt(x^2 + c1 x + c2)
    qd_lorentzian,        // quantum-dot prediction for frequency correlations
    qd_squared_lorentzian // quantum-dot prediction for parametric correlations
};

const char* to_string(AnsatzFamily f);
AnsatzFamily ansatz_family_from_string(const std::string& s);

/// Saturation value of each ansatz family at unit amplitude.
inline constexpr double kLorentzianPlateau = std::numbers::sqrt3 / std::numbers::pi;
inline constexpr double kTwoChannelPlateau = 0.39;
inline constexpr double kParametricPlateau = 3.0 / (std::numbers::pi * std::numbers::sqrt2);

struct AnsatzModel {
    AnsatzFamily family = AnsatzFamily::freq_lorentzian;
    /// freq_lorentzian {a0, a1}; two_channel {d0, d1, d2}; parametric {c0, c1, c2};
    /// qd_lorentzian {kappa}; qd_squared_lorentzian {}.
    std::vector<double> params;

    double asymptote() const;
    std::vector<std::string> param_names() const;
    bool is_quantum_dot() const;

    /// Deterministic fit start: leading amplitude 1, interior parameters 0.3.
    static AnsatzModel initial(AnsatzFamily family);
    /// Reference coefficients of the published simulations.
    static AnsatzModel reference(AnsatzFamily family);
};

/// Value of an ansatz family at x >= 0. Throws DomainError when the radicand
/// is not positive.
double eval_ansatz(const AnsatzModel& model, double x);

/// Quantum-dot prediction at Gamma in (0, 1]. The linear denominator
/// coefficient of qd_lorentzian is params[0].
double eval_qd(const AnsatzModel& model, double gamma);

struct FitResult {
    AnsatzFamily family = AnsatzFamily::freq_lorentzian;
    std::vector<double> params;
    std::vector<double> param_stderr;
    double residual_norm = 0.0; // rms of model - data
    bool converged = false;
    int iterations = 0;
    int n_points = 0;

    AnsatzModel model() const { return {family, params}; }
};

/// Weighted least squares of an ansatz through (gamma, product) points.
/// Weights are 1/stderr^2 when every stderr is positive, else uniform.
FitResult fit_ansatz(std::span<const ProductPoint> points, AnsatzFamily family,
                     std::optional<std::vector<double>> start = std::nullopt);

/// Pointwise ratio of observed product to the quantum-dot prediction at the
/// point's tunneling probability.
std::vector<std::pair<double, double>> chi_ratio(std::span<const ProductPoint> points,
                                                 const AnsatzModel& qd_model);

nlohmann::json to_json(const FitResult& r);
FitResult fit_result_from_json(const nlohmann::json& j);

} // namespace ericson
