#pragma once

#include <Eigen/Dense>

#include "ericson/rng.hpp"

namespace ericson {

enum class SymmetryClass { goe, partial_t, gue, parametric };

const char* to_string(SymmetryClass c);

/// Dense Hermitian model of the closed system.
///
/// Samplers use the variance convention v^2 = 1/(2N): off-diagonal entries
/// have variance v^2, GOE diagonal entries 2v^2, and the semicircle support is
/// [-sqrt(2), sqrt(2)] independent of N.
struct Hamiltonian {
    Eigen::MatrixXcd entries;
    SymmetryClass symmetry = SymmetryClass::goe;
    double parameter = 0.0; // xi for partial_t, mu for parametric

    Eigen::Index dim() const { return entries.rows(); }
    /// True when every imaginary part is exactly zero.
    bool is_real() const;
    Eigen::MatrixXd real_part() const { return entries.real(); }
};

/// Independent GOE pair for H(mu) = H1 cos(mu) + H2 sin(mu).
struct ParametricPair {
    Hamiltonian first;
    Hamiltonian second;

    Eigen::Index dim() const { return first.dim(); }
};

/// Semicircle radius for the v^2 = 1/(2N) convention.
inline constexpr double kSemicircleRadius = 1.4142135623730951;

/// Mean level density rho(E) = N (2 / (pi R^2)) sqrt(R^2 - E^2).
double semicircle_density(Eigen::Index n, double energy);
/// 1 / semicircle_density(n, energy).
double semicircle_mean_spacing(Eigen::Index n, double energy = 0.0);
/// Cumulative level count N * F(E/R); derivative is semicircle_density.
double semicircle_staircase(Eigen::Index n, double energy);

Hamiltonian sample_goe(Eigen::Index n, CounterRng& rng);
Hamiltonian sample_goe(Eigen::Index n, const RngPlan& plan);

/// H^S + i pi xi / sqrt(N) H^A with H^S from the GOE and H^A real antisymmetric.
/// H^S is drawn first from the same stream, so xi = 0 reproduces sample_goe.
Hamiltonian sample_partial_t(Eigen::Index n, double xi, CounterRng& rng);
Hamiltonian sample_partial_t(Eigen::Index n, double xi, const RngPlan& plan);

Hamiltonian sample_gue(Eigen::Index n, CounterRng& rng);
Hamiltonian sample_gue(Eigen::Index n, const RngPlan& plan);

/// H1 from Stream::hamiltonian, H2 from Stream::hamiltonian_second.
ParametricPair sample_parametric_pair(Eigen::Index n, const RngPlan& plan);

Hamiltonian parametric_hamiltonian(const ParametricPair& pair, double mu);
/// Real-valued H1 cos(mu) + H2 sin(mu) without the complex wrapper.
Eigen::MatrixXd parametric_matrix(const ParametricPair& pair, double mu);

} // namespace ericson
