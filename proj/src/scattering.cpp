#include "ericson/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "ericson/error.hpp"

namespace ericson {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cdouble kI{0.0, 1.0};
// Below this reciprocal condition number a solve is reported as singular.
constexpr double kMinRcond = 1e-15;

void require_grid(std::span<const double> grid) {
    if (grid.empty()) throw DomainError("sweep grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1]))
            throw DomainError("sweep grid must be strictly increasing");
    }
}

void require_compatible(Eigen::Index n, const CouplingMatrix& w) {
    if (w.dim() != n) {
        std::ostringstream msg;
        msg << "coupling matrix has " << w.dim() << " columns but H has dimension " << n;
        throw DimensionError(msg.str());
    }
}

std::vector<ChannelPair> resolve_channels(std::vector<ChannelPair> channels, int m) {
    if (channels.empty()) return all_channels(m);
    for (const auto& [a, b] : channels) {
        if (a < 0 || b < 0 || a >= m || b >= m)
            throw DomainError("channel index outside the S-matrix");
    }
    return channels;
}

SMatrixSpectrum make_spectrum(std::span<const double> grid, AbscissaUnit unit, int m,
                              std::vector<ChannelPair> channels) {
    SMatrixSpectrum out;
    out.grid.assign(grid.begin(), grid.end());
    out.unit = unit;
    out.channel_count = m;
    out.channels = std::move(channels);
    out.values.resize(out.grid.size() * out.channels.size());
    return out;
}

void store(SMatrixSpectrum& out, std::size_t point, const Eigen::MatrixXcd& s) {
    for (std::size_t k = 0; k < out.channels.size(); ++k) {
        const auto [a, b] = out.channels[k];
        out.values[point * out.channels.size() + k] = s(a, b);
    }
}

[[noreturn]] void rethrow_at(const SolverError& e, std::size_t index, double x) {
    std::ostringstream msg;
    msg << e.what() << " (grid index " << index << ", abscissa " << x << ")";
    throw SolverError(msg.str(), e.rcond());
}

// Solves (1 + i pi G) x = e_b for each distinct column b requested and
// returns S = 2 A^{-1} - 1 restricted to `channels`.
std::vector<cdouble> select_from_k(const Eigen::MatrixXcd& g,
                                   const std::vector<ChannelPair>& channels) {
    const Eigen::Index m = g.rows();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(m, m) + kI * kPi * g;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
    std::vector<cdouble> out(channels.size());
    std::map<int, Eigen::VectorXcd> columns;
    for (std::size_t k = 0; k < channels.size(); ++k) {
        const auto [row, col] = channels[k];
        auto it = columns.find(col);
        if (it == columns.end()) {
            Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(m);
            rhs(col) = 1.0;
            Eigen::VectorXcd x = 2.0 * lu.solve(rhs);
            x(col) -= 1.0;
            it = columns.emplace(col, std::move(x)).first;
        }
        out[k] = it->second(row);
    }
    return out;
}

} // namespace

double transmission_from_strength(double x) {
    return 4.0 * x / ((1.0 + x) * (1.0 + x));
}

double strength_from_transmission(double t) {
    if (!(t > 0.0 && t <= 1.0)) throw DomainError("transmission coefficient must lie in (0, 1]");
    return (2.0 - t - 2.0 * std::sqrt(1.0 - t)) / t;
}

CouplingMatrix build_coupling(Eigen::Index n, Eigen::Index m, std::span<const double> transmission,
                              double mean_spacing, CounterRng& rng) {
    if (n < 1 || m < 1) throw DimensionError("coupling matrix dimensions must be positive");
    if (m > n) throw DimensionError("more channels than Hamiltonian dimension");
    if (static_cast<Eigen::Index>(transmission.size()) != m)
        throw DimensionError("need one transmission coefficient per channel");
    if (!(mean_spacing > 0.0)) throw DomainError("mean spacing must be positive");

    std::vector<double> strength(transmission.size());
    for (std::size_t c = 0; c < transmission.size(); ++c)
        strength[c] = strength_from_transmission(transmission[c]);

    Eigen::MatrixXd raw(n, m);
    for (Eigen::Index c = 0; c < m; ++c)
        for (Eigen::Index j = 0; j < n; ++j) raw(j, c) = rng.normal();

    // Orthonormal columns spanning the raw Gaussian rows.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);

    CouplingMatrix out;
    out.entries.resize(m, n);
    for (Eigen::Index c = 0; c < m; ++c) {
        const double norm = std::sqrt(strength[c] * static_cast<double>(n) * mean_spacing) / kPi;
        out.entries.row(c) = norm * q.col(c).transpose();
    }
    out.transmission.assign(transmission.begin(), transmission.end());
    out.strength = std::move(strength);
    out.mean_spacing = mean_spacing;
    return out;
}

CouplingMatrix build_coupling(Eigen::Index n, Eigen::Index m, std::span<const double> transmission,
                              double mean_spacing, const RngPlan& plan) {
    CounterRng rng(plan, Stream::coupling);
    return build_coupling(n, m, transmission, mean_spacing, rng);
}

CouplingMatrix rescale_coupling(const CouplingMatrix& w, std::span<const double> transmission) {
    if (static_cast<Eigen::Index>(transmission.size()) != w.channels())
        throw DimensionError("need one transmission coefficient per channel");
    CouplingMatrix out = w;
    const double n = static_cast<double>(w.dim());
    for (Eigen::Index c = 0; c < w.channels(); ++c) {
        const double x = strength_from_transmission(transmission[c]);
        const double norm = std::sqrt(x * n * w.mean_spacing) / kPi;
        const double current = w.entries.row(c).norm();
        out.entries.row(c) *= norm / current;
        out.strength[c] = x;
        out.transmission[c] = transmission[c];
    }
    return out;
}

Eigen::MatrixXcd s_matrix(const Hamiltonian& h, const CouplingMatrix& w, double f) {
    const Eigen::Index n = h.dim();
    require_compatible(n, w);
    const Eigen::Index m = w.channels();
    const Eigen::MatrixXd wtw = w.entries.transpose() * w.entries;
    Eigen::MatrixXcd a = -h.entries;
    a.diagonal().array() += f;
    a += kI * kPi * wtw.cast<cdouble>();

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
    const double rcond = lu.rcond();
    if (!(rcond > kMinRcond)) {
        std::ostringstream msg;
        msg << "effective Hamiltonian is singular (rcond " << rcond << ")";
        throw SolverError(msg.str(), rcond);
    }
    const Eigen::MatrixXcd x = lu.solve(w.entries.transpose().cast<cdouble>());
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(m, m);
    s -= 2.0 * kPi * kI * (w.entries.cast<cdouble>() * x);
    return s;
}

PoleExpansion::PoleExpansion(const Hamiltonian& h, const CouplingMatrix& w) {
    const Eigen::Index n = h.dim();
    require_compatible(n, w);
    Eigen::MatrixXcd heff = h.entries;
    heff -= kI * kPi * (w.entries.transpose() * w.entries).cast<cdouble>();

    poles_.resize(n);
    Eigen::MatrixXcd vectors(n, n);
    const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', static_cast<lapack_int>(n),
                                          heff.data(), static_cast<lapack_int>(n), poles_.data(),
                                          nullptr, 1, vectors.data(), static_cast<lapack_int>(n));
    if (info != 0) {
        std::ostringstream msg;
        msg << "zgeev failed with info " << info;
        throw SolverError(msg.str());
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(vectors);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-13)) {
        std::ostringstream msg;
        msg << "resonance eigenvectors are numerically dependent (rcond " << rcond << ")";
        throw SolverError(msg.str(), rcond);
    }
    const Eigen::MatrixXcd wc = w.entries.cast<cdouble>();
    left_ = wc * vectors;
    right_ = lu.solve(wc.transpose());
}

cdouble PoleExpansion::element(Eigen::Index a, Eigen::Index b, double f) const {
    cdouble sum = 0.0;
    const Eigen::Index n = poles_.size();
    for (Eigen::Index k = 0; k < n; ++k) sum += left_(a, k) * right_(k, b) / (f - poles_(k));
    const cdouble s = -2.0 * kPi * kI * sum;
    return a == b ? 1.0 + s : s;
}

Eigen::MatrixXcd PoleExpansion::s_matrix(double f) const {
    const Eigen::VectorXcd d = (f - poles_.array()).inverse();
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(left_.rows(), left_.rows());
    s -= 2.0 * kPi * kI * (left_ * d.asDiagonal() * right_);
    return s;
}

SpectralResolvent::SpectralResolvent(const Hamiltonian& h, const CouplingMatrix& w) {
    require_compatible(h.dim(), w);
    if (h.is_real()) {
        *this = SpectralResolvent(Eigen::MatrixXd(h.entries.real()), w);
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.entries);
    if (es.info() != Eigen::Success) throw SolverError("Hermitian eigendecomposition failed");
    levels_ = es.eigenvalues();
    projected_ = w.entries.cast<cdouble>() * es.eigenvectors();
    real_ = false;
}

SpectralResolvent::SpectralResolvent(const Eigen::MatrixXd& h, const CouplingMatrix& w) {
    require_compatible(h.rows(), w);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw SolverError("symmetric eigendecomposition failed");
    levels_ = es.eigenvalues();
    projected_real_ = w.entries * es.eigenvectors();
    real_ = true;
}

Eigen::MatrixXcd SpectralResolvent::k_matrix(double f) const {
    const Eigen::VectorXd d = (f - levels_.array()).inverse();
    if (real_) {
        const Eigen::MatrixXd scaled = projected_real_ * d.asDiagonal();
        return (scaled * projected_real_.transpose()).cast<cdouble>();
    }
    const Eigen::MatrixXcd scaled = projected_ * d.asDiagonal();
    return scaled * projected_.adjoint();
}

Eigen::MatrixXcd SpectralResolvent::s_matrix(double f) const {
    const Eigen::MatrixXcd g = k_matrix(f);
    const Eigen::Index m = g.rows();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(m, m) + kI * kPi * g;
    Eigen::MatrixXcd s = 2.0 * a.partialPivLu().inverse();
    s.diagonal().array() -= 1.0;
    return s;
}

Eigen::VectorXcd SpectralResolvent::column(Eigen::Index b, double f) const {
    const Eigen::MatrixXcd g = k_matrix(f);
    const Eigen::Index m = g.rows();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(m, m) + kI * kPi * g;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(m);
    rhs(b) = 1.0;
    Eigen::VectorXcd x = 2.0 * a.partialPivLu().solve(rhs);
    x(b) -= 1.0;
    return x;
}

const char* to_string(SolveMethod m) {
    switch (m) {
    case SolveMethod::direct: return "direct";
    case SolveMethod::poles: return "poles";
    case SolveMethod::spectral: return "spectral";
    }
    return "unknown";
}

SolveMethod solve_method_from_string(const std::string& s) {
    if (s == "direct") return SolveMethod::direct;
    if (s == "poles") return SolveMethod::poles;
    if (s == "spectral") return SolveMethod::spectral;
    throw ConfigError("unknown solve method '" + s + "'");
}

const char* to_string(AbscissaUnit u) {
    switch (u) {
    case AbscissaUnit::frequency: return "frequency";
    case AbscissaUnit::parameter: return "parameter";
    case AbscissaUnit::unfolded: return "unfolded";
    }
    return "unknown";
}

AbscissaUnit abscissa_unit_from_string(const std::string& s) {
    if (s == "frequency") return AbscissaUnit::frequency;
    if (s == "parameter") return AbscissaUnit::parameter;
    if (s == "unfolded") return AbscissaUnit::unfolded;
    throw ConfigError("unknown abscissa unit '" + s + "'");
}

std::vector<ChannelPair> default_channels() { return {{1, 0}, {0, 0}, {1, 1}}; }

std::vector<ChannelPair> all_channels(int m) {
    std::vector<ChannelPair> out;
    out.reserve(static_cast<std::size_t>(m) * m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) out.emplace_back(a, b);
    return out;
}

std::string channel_label(const ChannelPair& c) {
    std::ostringstream s;
    s << 's' << c.first + 1;
    if (c.first >= 9 || c.second >= 9) s << '_';
    s << c.second + 1;
    return s.str();
}

std::size_t SMatrixSpectrum::channel_index(const ChannelPair& c) const {
    const auto it = std::find(channels.begin(), channels.end(), c);
    if (it == channels.end())
        throw DomainError("spectrum does not store channel " + channel_label(c));
    return static_cast<std::size_t>(it - channels.begin());
}

std::vector<cdouble> SMatrixSpectrum::element(const ChannelPair& c) const {
    const std::size_t k = channel_index(c);
    std::vector<cdouble> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = at(i, k);
    return out;
}

std::vector<double> SMatrixSpectrum::cross_section(const ChannelPair& c) const {
    const std::size_t k = channel_index(c);
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = std::norm(at(i, k));
    return out;
}

Eigen::MatrixXcd SMatrixSpectrum::matrix(std::size_t point) const {
    const int m = channel_count;
    if (channels.size() != static_cast<std::size_t>(m) * m)
        throw DomainError("spectrum does not store the full S-matrix");
    Eigen::MatrixXcd s(m, m);
    for (std::size_t k = 0; k < channels.size(); ++k)
        s(channels[k].first, channels[k].second) = at(point, k);
    return s;
}

SMatrixSpectrum sweep(const Hamiltonian& h, const CouplingMatrix& w, std::span<const double> grid,
                      std::vector<ChannelPair> channels, SolveMethod method) {
    require_grid(grid);
    require_compatible(h.dim(), w);
    const int m = static_cast<int>(w.channels());
    SMatrixSpectrum out =
        make_spectrum(grid, AbscissaUnit::frequency, m, resolve_channels(std::move(channels), m));
    out.metadata.model = std::string("heidelberg/") + to_string(h.symmetry);
    out.metadata.extra["solve_method"] = to_string(method);
    const bool full = out.channels.size() == static_cast<std::size_t>(m) * m;

    switch (method) {
    case SolveMethod::direct:
        for (std::size_t i = 0; i < grid.size(); ++i) {
            try {
                store(out, i, s_matrix(h, w, grid[i]));
            } catch (const SolverError& e) {
                rethrow_at(e, i, grid[i]);
            }
        }
        break;
    case SolveMethod::poles: {
        const PoleExpansion poles(h, w);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (full) {
                store(out, i, poles.s_matrix(grid[i]));
                continue;
            }
            for (std::size_t k = 0; k < out.channels.size(); ++k) {
                const auto [a, b] = out.channels[k];
                out.values[i * out.channels.size() + k] = poles.element(a, b, grid[i]);
            }
        }
        break;
    }
    case SolveMethod::spectral: {
        const SpectralResolvent resolvent(h, w);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (full) {
                store(out, i, resolvent.s_matrix(grid[i]));
                continue;
            }
            const auto sel = select_from_k(resolvent.k_matrix(grid[i]), out.channels);
            std::copy(sel.begin(), sel.end(),
                      out.values.begin() + static_cast<std::ptrdiff_t>(i * out.channels.size()));
        }
        break;
    }
    }
    return out;
}

SMatrixSpectrum sweep(const ParametricPair& pair, const CouplingMatrix& w,
                      std::span<const double> mu_grid, double f, std::vector<ChannelPair> channels,
                      SolveMethod method) {
    require_grid(mu_grid);
    require_compatible(pair.dim(), w);
    const int m = static_cast<int>(w.channels());
    if (method == SolveMethod::spectral) {
        const double fs[] = {f};
        auto result = sweep_parametric(pair, w, mu_grid, fs, std::move(channels));
        return std::move(result.spectra.front());
    }
    SMatrixSpectrum out =
        make_spectrum(mu_grid, AbscissaUnit::parameter, m, resolve_channels(std::move(channels), m));
    out.metadata.model = "heidelberg/parametric";
    out.metadata.extra["solve_method"] = to_string(method);
    out.metadata.extra["frequency"] = std::to_string(f);
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        const Hamiltonian h = parametric_hamiltonian(pair, mu_grid[i]);
        try {
            if (method == SolveMethod::direct) {
                store(out, i, s_matrix(h, w, f));
            } else {
                store(out, i, PoleExpansion(h, w).s_matrix(f));
            }
        } catch (const SolverError& e) {
            rethrow_at(e, i, mu_grid[i]);
        }
    }
    return out;
}

ParametricSweep sweep_parametric(const ParametricPair& pair, const CouplingMatrix& w,
                                 std::span<const double> mu_grid,
                                 std::span<const double> frequencies,
                                 std::vector<ChannelPair> channels) {
    require_grid(mu_grid);
    require_compatible(pair.dim(), w);
    if (frequencies.empty()) throw DomainError("no fixed frequencies given");
    const int m = static_cast<int>(w.channels());
    channels = resolve_channels(std::move(channels), m);

    ParametricSweep out;
    out.levels.resize(pair.dim(), static_cast<Eigen::Index>(mu_grid.size()));
    out.spectra.reserve(frequencies.size());
    for (double f : frequencies) {
        SMatrixSpectrum s = make_spectrum(mu_grid, AbscissaUnit::parameter, m, channels);
        s.metadata.model = "heidelberg/parametric";
        s.metadata.extra["solve_method"] = "spectral";
        std::ostringstream fstr;
        fstr.precision(17);
        fstr << f;
        s.metadata.extra["frequency"] = fstr.str();
        out.spectra.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        const SpectralResolvent resolvent(parametric_matrix(pair, mu_grid[i]), w);
        out.levels.col(static_cast<Eigen::Index>(i)) = resolvent.levels();
        for (std::size_t j = 0; j < frequencies.size(); ++j) {
            auto& spec = out.spectra[j];
            const auto sel = select_from_k(resolvent.k_matrix(frequencies[j]), channels);
            std::copy(sel.begin(), sel.end(),
                      spec.values.begin() + static_cast<std::ptrdiff_t>(i * channels.size()));
        }
    }
    return out;
}

double unitarity_defect(const Eigen::MatrixXcd& s) {
    const Eigen::MatrixXcd d = s.adjoint() * s - Eigen::MatrixXcd::Identity(s.rows(), s.cols());
    return d.cwiseAbs().maxCoeff();
}

double reciprocity_defect(const Eigen::MatrixXcd& s) {
    return (s - s.transpose()).cwiseAbs().maxCoeff();
}

} // namespace ericson
