#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ericson/ensembles.hpp"
#include "ericson/rng.hpp"

namespace ericson {

using cdouble = std::complex<double>;

/// Real M x N channel coupling matrix with W W^T diagonal.
///
/// Row c has squared norm x_c N d / pi^2 where d is the mean level spacing at
/// the band centre and x_c <= 1 solves T_c = 4 x_c / (1 + x_c)^2.
struct CouplingMatrix {
    Eigen::MatrixXd entries;
    std::vector<double> transmission;
    std::vector<double> strength; // x_c
    double mean_spacing = 0.0;

    Eigen::Index channels() const { return entries.rows(); }
    Eigen::Index dim() const { return entries.cols(); }
};

/// T = 4x / (1 + x)^2.
double transmission_from_strength(double x);
/// Sub-critical (x <= 1) inverse of transmission_from_strength.
double strength_from_transmission(double t);

CouplingMatrix build_coupling(Eigen::Index n, Eigen::Index m, std::span<const double> transmission,
                              double mean_spacing, CounterRng& rng);
CouplingMatrix build_coupling(Eigen::Index n, Eigen::Index m, std::span<const double> transmission,
                              double mean_spacing, const RngPlan& plan);

/// Same directions, rows rescaled to new target transmissions.
CouplingMatrix rescale_coupling(const CouplingMatrix& w, std::span<const double> transmission);

/// Heidelberg S-matrix 1 - 2 pi i W (f - H + i pi W^T W)^{-1} W^T via LU solve.
Eigen::MatrixXcd s_matrix(const Hamiltonian& h, const CouplingMatrix& w, double f);

/// Resonance-pole representation of the same S-matrix.
///
/// Diagonalizes H_eff = H - i pi W^T W once; afterwards every element costs
/// O(N) per frequency: S_ab(f) = delta_ab - 2 pi i sum_n B_an Y_nb / (f - E_n).
class PoleExpansion {
public:
    PoleExpansion(const Hamiltonian& h, const CouplingMatrix& w);

    const Eigen::VectorXcd& poles() const { return poles_; }
    Eigen::Index channels() const { return left_.rows(); }

    cdouble element(Eigen::Index a, Eigen::Index b, double f) const;
    Eigen::MatrixXcd s_matrix(double f) const;

private:
    Eigen::VectorXcd poles_;
    Eigen::MatrixXcd left_;  // W R, M x N
    Eigen::MatrixXcd right_; // R^{-1} W^T, N x M
};

/// Pre-diagonalized Hermitian H: S = (1 - i pi G)(1 + i pi G)^{-1} with the
/// M x M K-matrix G(f) = W U diag(1/(f - lambda)) U^dagger W^T.
class SpectralResolvent {
public:
    SpectralResolvent(const Hamiltonian& h, const CouplingMatrix& w);
    /// Real symmetric fast path; `h` must be symmetric.
    SpectralResolvent(const Eigen::MatrixXd& h, const CouplingMatrix& w);

    const Eigen::VectorXd& levels() const { return levels_; }

    Eigen::MatrixXcd s_matrix(double f) const;
    /// Column b of S(f).
    Eigen::VectorXcd column(Eigen::Index b, double f) const;
    /// The M x M K-matrix G(f).
    Eigen::MatrixXcd k_matrix(double f) const;

private:
    Eigen::VectorXd levels_;
    Eigen::MatrixXd projected_real_; // used when H is real
    Eigen::MatrixXcd projected_;     // used otherwise
    bool real_ = false;
};

enum class SolveMethod { direct, poles, spectral };
const char* to_string(SolveMethod m);
SolveMethod solve_method_from_string(const std::string& s);

enum class AbscissaUnit { frequency, parameter, unfolded };
const char* to_string(AbscissaUnit u);
AbscissaUnit abscissa_unit_from_string(const std::string& s);

/// Zero-based (row, column) index of a stored S-matrix element.
using ChannelPair = std::pair<int, int>;

/// S21, S11, S22.
std::vector<ChannelPair> default_channels();
/// Every (a, b) for an M-channel matrix, row-major.
std::vector<ChannelPair> all_channels(int m);
/// "s21" style label (1-based).
std::string channel_label(const ChannelPair& c);

struct SpectrumMetadata {
    std::uint64_t seed = 0;
    std::uint64_t realization = 0;
    std::string model;
    double window_lo = 0.0;
    double window_hi = 0.0;
    bool external = false;
    std::vector<double> skipped; // abscissae dropped at singularities
    std::map<std::string, std::string> extra;
};

/// Sampled S-matrix elements on a strictly increasing grid.
struct SMatrixSpectrum {
    std::vector<double> grid;
    AbscissaUnit unit = AbscissaUnit::frequency;
    int channel_count = 0; // M
    std::vector<ChannelPair> channels;
    std::vector<cdouble> values; // grid.size() x channels.size(), row-major
    SpectrumMetadata metadata;

    std::size_t size() const { return grid.size(); }
    cdouble at(std::size_t point, std::size_t channel) const {
        return values[point * channels.size() + channel];
    }
    /// Column position of `c` in `channels`; throws if absent.
    std::size_t channel_index(const ChannelPair& c) const;
    std::vector<cdouble> element(const ChannelPair& c) const;
    /// |S_ab|^2 along the grid.
    std::vector<double> cross_section(const ChannelPair& c = {1, 0}) const;
    /// Full M x M matrix at a grid point; requires all channels stored.
    Eigen::MatrixXcd matrix(std::size_t point) const;
};

/// Frequency sweep of S(f) for fixed H.
SMatrixSpectrum sweep(const Hamiltonian& h, const CouplingMatrix& w, std::span<const double> grid,
                      std::vector<ChannelPair> channels = {},
                      SolveMethod method = SolveMethod::poles);

/// Parameter sweep of S at fixed f with H(mu) = H1 cos mu + H2 sin mu.
SMatrixSpectrum sweep(const ParametricPair& pair, const CouplingMatrix& w,
                      std::span<const double> mu_grid, double f,
                      std::vector<ChannelPair> channels = {},
                      SolveMethod method = SolveMethod::spectral);

struct ParametricSweep {
    std::vector<SMatrixSpectrum> spectra; // one per fixed frequency
    Eigen::MatrixXd levels;               // N x grid, sorted eigenvalues of H(mu)
};

/// Parameter sweep at several fixed frequencies sharing one
/// diagonalization of H(mu) per grid point.
ParametricSweep sweep_parametric(const ParametricPair& pair, const CouplingMatrix& w,
                                 std::span<const double> mu_grid,
                                 std::span<const double> frequencies,
                                 std::vector<ChannelPair> channels = {});

/// max |S^dagger S - 1|.
double unitarity_defect(const Eigen::MatrixXcd& s);
/// max |S - S^T|.
double reciprocity_defect(const Eigen::MatrixXcd& s);

} // namespace ericson
