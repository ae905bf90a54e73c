#include "ericson/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ericson/error.hpp"

namespace ericson {

namespace {

void require_dim(Eigen::Index n) {
    if (n < 1) throw DimensionError("Hamiltonian dimension must be positive");
}

// Real symmetric GOE matrix with off-diagonal variance 1/(2N).
Eigen::MatrixXd draw_goe(Eigen::Index n, CounterRng& rng) {
    const double v = std::sqrt(1.0 / (2.0 * static_cast<double>(n)));
    Eigen::MatrixXd h(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h(i, i) = std::sqrt(2.0) * v * rng.normal();
        for (Eigen::Index j = i + 1; j < n; ++j) {
            h(i, j) = v * rng.normal();
            h(j, i) = h(i, j);
        }
    }
    return h;
}

} // namespace

const char* to_string(SymmetryClass c) {
    switch (c) {
    case SymmetryClass::goe: return "goe";
    case SymmetryClass::partial_t: return "partial_t";
    case SymmetryClass::gue: return "gue";
    case SymmetryClass::parametric: return "parametric";
    }
    return "unknown";
}

bool Hamiltonian::is_real() const {
    return (entries.imag().array() == 0.0).all();
}

double semicircle_density(Eigen::Index n, double energy) {
    const double r = kSemicircleRadius;
    if (std::abs(energy) >= r) return 0.0;
    return static_cast<double>(n) * 2.0 / (std::numbers::pi * r * r) *
           std::sqrt(r * r - energy * energy);
}

double semicircle_mean_spacing(Eigen::Index n, double energy) {
    const double rho = semicircle_density(n, energy);
    if (rho <= 0.0) throw DomainError("energy outside the semicircle support");
    return 1.0 / rho;
}

double semicircle_staircase(Eigen::Index n, double energy) {
    const double x = std::clamp(energy / kSemicircleRadius, -1.0, 1.0);
    const double frac = 0.5 + (x * std::sqrt(1.0 - x * x) + std::asin(x)) / std::numbers::pi;
    return static_cast<double>(n) * frac;
}

Hamiltonian sample_goe(Eigen::Index n, CounterRng& rng) {
    require_dim(n);
    return {draw_goe(n, rng).cast<std::complex<double>>(), SymmetryClass::goe, 0.0};
}

Hamiltonian sample_goe(Eigen::Index n, const RngPlan& plan) {
    CounterRng rng(plan, Stream::hamiltonian);
    return sample_goe(n, rng);
}

Hamiltonian sample_partial_t(Eigen::Index n, double xi, CounterRng& rng) {
    require_dim(n);
    if (!(xi >= 0.0)) throw DomainError("T-breaking parameter xi must be non-negative");
    const Eigen::MatrixXd sym = draw_goe(n, rng);
    Hamiltonian h{sym.cast<std::complex<double>>(), SymmetryClass::partial_t, xi};
    if (xi == 0.0) return h;

    const double v = std::sqrt(1.0 / (2.0 * static_cast<double>(n)));
    const double scale = std::numbers::pi * xi / std::sqrt(static_cast<double>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double a = scale * v * rng.normal();
            // i * scale * A with A antisymmetric: (i,j) gets +i a, (j,i) gets -i a.
            h.entries(i, j) = {sym(i, j), a};
            h.entries(j, i) = {sym(i, j), -a};
        }
    }
    return h;
}

Hamiltonian sample_partial_t(Eigen::Index n, double xi, const RngPlan& plan) {
    CounterRng rng(plan, Stream::hamiltonian);
    return sample_partial_t(n, xi, rng);
}

Hamiltonian sample_gue(Eigen::Index n, CounterRng& rng) {
    require_dim(n);
    const double v = std::sqrt(1.0 / (2.0 * static_cast<double>(n)));
    const double part = v / std::sqrt(2.0);
    Eigen::MatrixXcd h(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h(i, i) = {v * rng.normal(), 0.0};
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double re = part * rng.normal();
            const double im = part * rng.normal();
            h(i, j) = {re, im};
            h(j, i) = {re, -im};
        }
    }
    return {std::move(h), SymmetryClass::gue, 0.0};
}

Hamiltonian sample_gue(Eigen::Index n, const RngPlan& plan) {
    CounterRng rng(plan, Stream::hamiltonian);
    return sample_gue(n, rng);
}

ParametricPair sample_parametric_pair(Eigen::Index n, const RngPlan& plan) {
    CounterRng first(plan, Stream::hamiltonian);
    CounterRng second(plan, Stream::hamiltonian_second);
    return {sample_goe(n, first), sample_goe(n, second)};
}

Eigen::MatrixXd parametric_matrix(const ParametricPair& pair, double mu) {
    if (pair.first.dim() != pair.second.dim())
        throw DimensionError("parametric pair dimensions differ");
    // Exact values at multiples of pi/2 so that mu = 0 and mu = pi/2 return
    // H1 and H2 bit-for-bit.
    double c = std::cos(mu);
    double s = std::sin(mu);
    const double quarter = mu / (std::numbers::pi / 2.0);
    if (quarter == std::round(quarter)) {
        const auto k = static_cast<long long>(std::round(quarter)) % 4;
        const long long m = (k + 4) % 4;
        c = (m == 0) ? 1.0 : (m == 2) ? -1.0 : 0.0;
        s = (m == 1) ? 1.0 : (m == 3) ? -1.0 : 0.0;
    }
    return c * pair.first.entries.real() + s * pair.second.entries.real();
}

Hamiltonian parametric_hamiltonian(const ParametricPair& pair, double mu) {
    return {parametric_matrix(pair, mu).cast<std::complex<double>>(), SymmetryClass::parametric, mu};
}

} // namespace ericson
