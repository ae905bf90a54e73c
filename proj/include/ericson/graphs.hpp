#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ericson/rng.hpp"
#include "ericson/scattering.hpp"

namespace ericson {

/// One bond between vertices i < j.
struct Bond {
    int i = 0;
    int j = 0;
    double length = 1.0;
    double potential = 0.0; // A_ij for i < j; A_ji = -A_ij
};

/// Open quantum graph: V vertices, bonds with lengths and vector potentials,
/// leads attached to distinct vertices with common coupling w.
///
/// Vertex indices are zero-based. The speed of light is set to one, so the
/// phase along a bond is 2 pi f L.
class GraphSpec {
public:
    GraphSpec() = default;
    /// Validates and stores bonds sorted by (i, j).
    GraphSpec(int vertices, std::vector<Bond> bonds, std::vector<int> leads, double coupling);

    int vertices() const { return vertices_; }
    const std::vector<Bond>& bonds() const { return bonds_; }
    const std::vector<int>& leads() const { return leads_; }
    double coupling() const { return coupling_; }
    int channels() const { return static_cast<int>(leads_.size()); }

    double total_length() const;
    std::vector<int> degrees() const;
    bool connected() const;

    Eigen::MatrixXi connectivity() const;
    Eigen::MatrixXd lengths() const;
    Eigen::MatrixXd potentials() const;

    /// Copy with a different lead coupling w.
    GraphSpec with_coupling(double w) const;
    /// Copy with A_ij = value on every bond (i < j).
    GraphSpec with_uniform_potential(double value) const;
    GraphSpec with_leads(std::vector<int> leads) const;

private:
    int vertices_ = 0;
    std::vector<Bond> bonds_;
    std::vector<int> leads_;
    double coupling_ = 1.0;
};

/// The first `count` primes.
std::vector<int> first_primes(std::size_t count);

/// Complete graph K4 with bond lengths sqrt(primes[k]) assigned in the
/// order (0,1), (0,2), (0,3), (1,2), (1,3), (2,3).
GraphSpec make_tetrahedron(double w, std::pair<int, int> leads,
                           std::span<const int> primes = {});

/// Connected simple `degree`-regular graph on V vertices from the pairing
/// model. Lengths are square roots of every other prime among the first
/// 2B primes, shuffled onto the bonds; leads are drawn without replacement.
GraphSpec make_random_regular(int vertices, int degree, const RngPlan& plan, int lead_count,
                              double w = 1.0, int max_attempts = 1000);

/// Closed-graph matrix h(f) of the secular equation.
struct GraphHamiltonianValue {
    double f = 0.0;
    Eigen::MatrixXcd h;
};

/// Phase guard: |sin(2 pi f L)| below this is treated as singular.
inline constexpr double kSingularityGuard = 1e-8;

GraphHamiltonianValue graph_hamiltonian(const GraphSpec& spec, double f);

/// S(f) = 1 - 2 pi i W (h(f) + i pi W^T W)^{-1} W^T with W_{m, lead m} = w / sqrt(pi).
Eigen::MatrixXcd graph_s_matrix(const GraphSpec& spec, double f);

/// Grid points at singular frequencies are skipped and listed in
/// metadata.skipped; more than 1% skipped is an error.
SMatrixSpectrum graph_sweep(const GraphSpec& spec, std::span<const double> fgrid,
                            std::vector<ChannelPair> channels = {});

/// Resonances per unit frequency, from the winding of arg det S(f) over
/// [f_lo, f_hi] sampled at `samples` points.
double measure_resonance_density(const GraphSpec& spec, double f_lo, double f_hi,
                                 std::size_t samples);

/// Canonical JSON text (bonds sorted, fixed key order).
std::string graph_to_json(const GraphSpec& spec);
GraphSpec graph_from_json(const std::string& text);

} // namespace ericson
