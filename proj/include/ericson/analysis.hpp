#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ericson/scattering.hpp"

namespace ericson {

/// Cross-section |S21|^2 on an abscissa unfolded to unit mean spacing.
struct UnfoldedSeries {
    std::vector<double> abscissa;
    std::vector<double> values;
    int window_id = 0;

    std::size_t size() const { return values.size(); }
    double span() const { return abscissa.empty() ? 0.0 : abscissa.back() - abscissa.front(); }
    /// Throws unless abscissa is strictly increasing, sizes match and values >= 0.
    void validate() const;
    /// Contiguous sub-range [first, first + count).
    UnfoldedSeries slice(std::size_t first, std::size_t count) const;
};

enum class CorrelationShape { lorentzian, squared_lorentzian };
const char* to_string(CorrelationShape s);
CorrelationShape correlation_shape_from_string(const std::string& s);
/// 0.5 for a Lorentzian, 0.25 for a squared Lorentzian.
double threshold_fraction(CorrelationShape s);

struct CorrelationCurve {
    std::vector<double> lags;
    std::vector<double> values;
    double c0 = 0.0;
    CorrelationShape shape = CorrelationShape::lorentzian;
    double width = 0.0; // zero until correlation_width has been applied
};

struct MaximaStats {
    int window_id = 0;
    long n_max = 0;
    double span = 0.0;
    double density = 0.0;
};

struct ProductPoint {
    double gamma = 0.0;     // correlation width
    double product = 0.0;   // density x width
    double std_error = 0.0; // written as "stderr" in product tables
    std::string model_tag;
    std::optional<double> tunneling; // (T1 + T2) / 2 when known
};

// ---------------------------------------------------------------- unfolding

inline constexpr double kSpeedOfLight = 299792458.0;

/// Smooth Weyl count N(f) = A pi f^2 / (4 c^2) of a flat billiard.
std::vector<double> unfold_billiard(std::span<const double> fgrid, double area,
                                    double c = kSpeedOfLight);
/// f -> f * density for spectra with constant mean density.
std::vector<double> unfold_graph(std::span<const double> fgrid, double density);
/// E -> N F(E / R), the semicircle staircase of an N x N random matrix.
std::vector<double> unfold_semicircle(std::span<const double> egrid, Eigen::Index n);

struct Unfolding {
    enum class Kind { identity, billiard, graph, semicircle };
    Kind kind = Kind::identity;
    double area = 0.0;
    double c = kSpeedOfLight;
    double density = 1.0;
    Eigen::Index dim = 0;

    std::vector<double> apply(std::span<const double> grid) const;
};

// ---------------------------------------------------------- autocorrelation

/// Accumulates C(k) = <(x_i - m)(x_{i+k} - m)> over several uniformly sampled
/// series with the same step. Products never wrap around a series end; the
/// mean m is taken jointly over all samples added.
class AutocorrelationAccumulator {
public:
    AutocorrelationAccumulator(std::size_t max_lag_steps, double step);

    void add(std::span<const double> values);
    CorrelationCurve curve(CorrelationShape shape) const;
    std::size_t samples() const { return count_; }

private:
    std::size_t max_lag_;
    double step_;
    std::vector<double> products_;
    std::vector<double> left_;
    std::vector<double> right_;
    std::vector<std::size_t> pairs_;
    double shift_ = 0.0;
    double sum_ = 0.0;
    std::size_t count_ = 0;
};

/// Uniform step of an abscissa; throws if not uniform to 1e-6 relative.
double uniform_step(std::span<const double> abscissa);

/// True when the abscissa steps agree to 1e-6 relative.
bool is_uniform(std::span<const double> abscissa);
/// Linear interpolation onto an equally spaced grid with the same end points
/// and number of samples.
UnfoldedSeries resample_uniform(const UnfoldedSeries& series);

/// Autocovariance of one series; C(0) is the biased variance.
CorrelationCurve autocorrelation(const UnfoldedSeries& series, double max_lag,
                                 CorrelationShape shape = CorrelationShape::lorentzian);

/// Same definition with the average running jointly over all series.
/// Non-uniformly sampled series are resampled first; steps must then agree
/// to 1e-3 relative.
CorrelationCurve ensemble_autocorrelation(std::span<const UnfoldedSeries> series, double max_lag,
                                          CorrelationShape shape);

/// Correlation over the parameter at several fixed frequencies, averaged
/// jointly over parameter and frequencies. Shape is squared Lorentzian.
CorrelationCurve parametric_autocorrelation(std::span<const UnfoldedSeries> series_at_frequencies,
                                            double max_lag);

enum class WidthMethod { threshold, fit };

/// Threshold rule: first lag where C drops to fraction * C(0), linearly
/// interpolated. Fit rule: least squares of C0 / (1 + (e/w)^2)^p.
double correlation_width(const CorrelationCurve& curve, WidthMethod method = WidthMethod::threshold);

/// Residual RMS of the best fit of a given shape (used to tell shapes apart).
double shape_fit_residual(const CorrelationCurve& curve, CorrelationShape shape);

// ------------------------------------------------------------------- maxima

/// values[i-1] < values[i] >= values[i+1]; a plateau bounded by strictly
/// smaller neighbours counts once; endpoints never count. With
/// min_prominence > 0 only peaks at least that prominent are kept.
MaximaStats count_maxima(const UnfoldedSeries& series, double min_prominence = 0.0);

// ------------------------------------------------------------------ windows

struct WindowSpec {
    int subintervals = 10;
    CorrelationShape shape = CorrelationShape::lorentzian;
    WidthMethod method = WidthMethod::threshold;
    double max_lag = 0.0;     // 0: span of a sub-interval / 2.5
    bool pool = false;        // pool sub-interval correlations over realizations
    int max_unresolved = 3;   // per realization
    double min_prominence = 0.0;
    std::string model_tag;
};

struct WindowResult {
    int window_id = 0;
    bool dropped = false;
    std::string reason;
    long n_max = 0;
    double span = 0.0;
    double density = 0.0;
    double density_stderr = 0.0;
    double width = 0.0;
    double width_stderr = 0.0;
    int unresolved = 0;
    int realizations = 0;
    std::optional<ProductPoint> point;
};

/// Maxima density over whole series, width averaged over sub-intervals,
/// product with propagated standard error.
WindowResult ensemble_product(std::span<const UnfoldedSeries> realizations, const WindowSpec& spec,
                              int window_id = 0);

struct WindowBounds {
    double lo = 0.0;
    double hi = 0.0;
};

/// Splits one spectrum into unfolded windows and evaluates each.
std::vector<WindowResult> windowed_products(const SMatrixSpectrum& spectrum,
                                            const Unfolding& unfolding,
                                            std::span<const WindowBounds> windows,
                                            const WindowSpec& spec,
                                            ChannelPair channel = {1, 0});

/// Cross-section of one channel with the spectrum grid unfolded.
UnfoldedSeries unfolded_series(const SMatrixSpectrum& spectrum, const Unfolding& unfolding,
                               ChannelPair channel = {1, 0});

// --------------------------------------------------------------- parametric

struct ParametricScale {
    std::vector<double> x;
    double mean_square_velocity = 0.0;
};

/// X = sqrt(<v^2>) alpha with v = de_i/dalpha from finite differences over
/// the level tracks (rows: levels, columns: parameter values).
ParametricScale parametric_rescale(const Eigen::MatrixXd& tracks, std::span<const double> alphas);

} // namespace ericson
