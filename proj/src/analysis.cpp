#include "ericson/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ericson/ensembles.hpp"
#include "ericson/error.hpp"
#include "least_squares.hpp"

namespace ericson {

namespace {

constexpr std::size_t kMinSeriesLength = 100;

double mean(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard error of the mean; zero for fewer than two values.
double standard_error(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

struct ShapeFit {
    double c0 = 0.0;
    double width = 0.0;
    double rms = 0.0;
};

ShapeFit fit_shape(const CorrelationCurve& curve, CorrelationShape shape, double width_guess) {
    // Fit range: lags up to three widths, at least eight points.
    std::size_t count = curve.lags.size();
    if (width_guess > 0.0) {
        const auto it = std::upper_bound(curve.lags.begin(), curve.lags.end(), 3.0 * width_guess);
        count = std::max<std::size_t>(static_cast<std::size_t>(it - curve.lags.begin()),
                                      std::min<std::size_t>(8, curve.lags.size()));
    }
    const std::span<const double> x(curve.lags.data(), count);
    const std::span<const double> y(curve.values.data(), count);
    const double power = shape == CorrelationShape::lorentzian ? 1.0 : 2.0;

    detail::LeastSquaresProblem pr;
    pr.x = x;
    pr.y = y;
    pr.model = [power](double e, std::span<const double> p, std::span<double> g) {
        const double u = e / p[1];
        const double base = 1.0 / (1.0 + u * u);
        const double l = std::pow(base, power);
        g[0] = l;
        // d/dw of (1 + e^2/w^2)^-power
        g[1] = p[0] * power * std::pow(base, power + 1.0) * 2.0 * e * e / (p[1] * p[1] * p[1]);
        return p[0] * l;
    };
    const double guess = width_guess > 0.0 ? width_guess : curve.lags.back() / 4.0;
    pr.lower = {-std::numeric_limits<double>::infinity(), 1e-9};
    pr.upper = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    const auto res = detail::levenberg_marquardt(pr, {curve.c0, guess});
    return {res.params[0], res.params[1], res.rms};
}

} // namespace

void UnfoldedSeries::validate() const {
    if (abscissa.size() != values.size()) throw DimensionError("abscissa and values differ in length");
    for (std::size_t i = 1; i < abscissa.size(); ++i)
        if (!(abscissa[i] > abscissa[i - 1])) throw DomainError("abscissa must be strictly increasing");
    for (double v : values)
        if (!(v >= 0.0)) throw DomainError("cross-section values must be non-negative");
}

UnfoldedSeries UnfoldedSeries::slice(std::size_t first, std::size_t count) const {
    if (first + count > values.size()) throw DomainError("slice exceeds series");
    UnfoldedSeries out;
    out.window_id = window_id;
    out.abscissa.assign(abscissa.begin() + static_cast<std::ptrdiff_t>(first),
                        abscissa.begin() + static_cast<std::ptrdiff_t>(first + count));
    out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(first),
                      values.begin() + static_cast<std::ptrdiff_t>(first + count));
    return out;
}

const char* to_string(CorrelationShape s) {
    return s == CorrelationShape::lorentzian ? "lorentzian" : "squared_lorentzian";
}

CorrelationShape correlation_shape_from_string(const std::string& s) {
    if (s == "lorentzian") return CorrelationShape::lorentzian;
    if (s == "squared_lorentzian") return CorrelationShape::squared_lorentzian;
    throw ConfigError("unknown correlation shape '" + s + "'");
}

double threshold_fraction(CorrelationShape s) {
    return s == CorrelationShape::lorentzian ? 0.5 : 0.25;
}

std::vector<double> unfold_billiard(std::span<const double> fgrid, double area, double c) {
    if (!(area > 0.0)) throw DomainError("billiard area must be positive");
    if (!(c > 0.0)) throw DomainError("speed of light must be positive");
    std::vector<double> out(fgrid.size());
    const double k = area * std::numbers::pi / (4.0 * c * c);
    for (std::size_t i = 0; i < fgrid.size(); ++i) out[i] = k * fgrid[i] * fgrid[i];
    return out;
}

std::vector<double> unfold_graph(std::span<const double> fgrid, double density) {
    if (!(density > 0.0)) throw DomainError("resonance density must be positive");
    std::vector<double> out(fgrid.size());
    for (std::size_t i = 0; i < fgrid.size(); ++i) out[i] = fgrid[i] * density;
    return out;
}

std::vector<double> unfold_semicircle(std::span<const double> egrid, Eigen::Index n) {
    if (n < 1) throw DimensionError("matrix dimension must be positive");
    std::vector<double> out(egrid.size());
    for (std::size_t i = 0; i < egrid.size(); ++i) out[i] = semicircle_staircase(n, egrid[i]);
    return out;
}

std::vector<double> Unfolding::apply(std::span<const double> grid) const {
    switch (kind) {
    case Kind::identity: return {grid.begin(), grid.end()};
    case Kind::billiard: return unfold_billiard(grid, area, c);
    case Kind::graph: return unfold_graph(grid, density);
    case Kind::semicircle: return unfold_semicircle(grid, dim);
    }
    return {};
}

AutocorrelationAccumulator::AutocorrelationAccumulator(std::size_t max_lag_steps, double step)
    : max_lag_(max_lag_steps), step_(step), products_(max_lag_steps + 1, 0.0),
      left_(max_lag_steps + 1, 0.0), right_(max_lag_steps + 1, 0.0), pairs_(max_lag_steps + 1, 0) {}

void AutocorrelationAccumulator::add(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return;
    if (count_ == 0) {
        // Working origin near the data keeps the sums well conditioned.
        double first = 0.0;
        for (double v : x) first += v;
        shift_ = first / static_cast<double>(n);
    }
    std::vector<double> y(x.begin(), x.end());
    for (double& v : y) v -= shift_;
    for (std::size_t k = 0; k <= max_lag_ && k < n; ++k) {
        double s = 0.0, l = 0.0, r = 0.0;
        const std::size_t len = n - k;
        for (std::size_t i = 0; i < len; ++i) {
            s += y[i] * y[i + k];
            l += y[i];
            r += y[i + k];
        }
        products_[k] += s;
        left_[k] += l;
        right_[k] += r;
        pairs_[k] += len;
    }
    for (double v : y) sum_ += v;
    count_ += n;
}

CorrelationCurve AutocorrelationAccumulator::curve(CorrelationShape shape) const {
    CorrelationCurve out;
    out.shape = shape;
    const double m = count_ ? sum_ / static_cast<double>(count_) : 0.0;
    for (std::size_t k = 0; k <= max_lag_; ++k) {
        if (pairs_[k] == 0) break;
        const double p = static_cast<double>(pairs_[k]);
        // Mean of (y_i - m)(y_{i+k} - m) over the pairs at this lag.
        const double c = (products_[k] - m * (left_[k] + right_[k])) / p + m * m;
        out.lags.push_back(static_cast<double>(k) * step_);
        out.values.push_back(c);
    }
    out.c0 = out.values.empty() ? 0.0 : out.values.front();
    return out;
}

double uniform_step(std::span<const double> a) {
    if (a.size() < 2) throw DomainError("need at least two samples");
    const double step = (a.back() - a.front()) / static_cast<double>(a.size() - 1);
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (std::abs((a[i] - a[i - 1]) - step) > 1e-6 * step)
            throw DomainError("abscissa is not uniformly sampled");
    }
    return step;
}

CorrelationCurve autocorrelation(const UnfoldedSeries& series, double max_lag, CorrelationShape shape) {
    const UnfoldedSeries one[] = {series};
    return ensemble_autocorrelation(one, max_lag, shape);
}

bool is_uniform(std::span<const double> a) {
    if (a.size() < 2) return false;
    const double step = (a.back() - a.front()) / static_cast<double>(a.size() - 1);
    for (std::size_t i = 1; i < a.size(); ++i)
        if (std::abs((a[i] - a[i - 1]) - step) > 1e-6 * step) return false;
    return true;
}

UnfoldedSeries resample_uniform(const UnfoldedSeries& s) {
    s.validate();
    if (s.size() < 2) throw DomainError("need at least two samples");
    UnfoldedSeries out;
    out.window_id = s.window_id;
    const std::size_t n = s.size();
    const double lo = s.abscissa.front();
    const double step = s.span() / static_cast<double>(n - 1);
    out.abscissa.resize(n);
    out.values.resize(n);
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i + 1 == n ? s.abscissa.back() : lo + static_cast<double>(i) * step;
        while (j + 2 < n && s.abscissa[j + 1] < x) ++j;
        const double t = (x - s.abscissa[j]) / (s.abscissa[j + 1] - s.abscissa[j]);
        out.abscissa[i] = x;
        out.values[i] = (1.0 - t) * s.values[j] + t * s.values[j + 1];
    }
    return out;
}

CorrelationCurve ensemble_autocorrelation(std::span<const UnfoldedSeries> series, double max_lag,
                                          CorrelationShape shape) {
    if (series.empty()) throw DomainError("no series given");
    if (!(max_lag > 0.0)) throw DomainError("max_lag must be positive");
    std::vector<UnfoldedSeries> resampled;
    std::vector<const UnfoldedSeries*> use;
    resampled.reserve(series.size());
    double step = 0.0;
    for (const auto& s : series) {
        s.validate();
        if (s.size() < kMinSeriesLength) throw DomainError("series too short for autocorrelation");
        if (!(max_lag < 0.5 * s.span())) throw DomainError("max_lag must be below half the series span");
        const UnfoldedSeries* u = &s;
        if (!is_uniform(s.abscissa)) {
            resampled.push_back(resample_uniform(s));
            u = &resampled.back();
        }
        use.push_back(u);
        const double st = u->span() / static_cast<double>(u->size() - 1);
        if (step == 0.0) step = st;
        else if (std::abs(st - step) > 1e-3 * step)
            throw DomainError("series have different sampling steps");
    }
    const auto steps = static_cast<std::size_t>(std::floor(max_lag / step + 1e-9));
    AutocorrelationAccumulator acc(steps, step);
    for (const auto* s : use) acc.add(s->values);
    return acc.curve(shape);
}

CorrelationCurve parametric_autocorrelation(std::span<const UnfoldedSeries> series, double max_lag) {
    return ensemble_autocorrelation(series, max_lag, CorrelationShape::squared_lorentzian);
}

double correlation_width(const CorrelationCurve& curve, WidthMethod method) {
    if (curve.values.size() < 2 || !(curve.c0 > 0.0))
        throw WidthNotResolved("correlation curve has no positive variance");
    const double level = threshold_fraction(curve.shape) * curve.c0;
    double crossing = 0.0;
    bool found = false;
    for (std::size_t k = 1; k < curve.values.size(); ++k) {
        if (curve.values[k] <= level) {
            const double y0 = curve.values[k - 1], y1 = curve.values[k];
            const double t = (y0 - level) / (y0 - y1);
            crossing = curve.lags[k - 1] + t * (curve.lags[k] - curve.lags[k - 1]);
            found = true;
            break;
        }
    }
    if (method == WidthMethod::threshold) {
        if (!found) throw WidthNotResolved("correlation never reaches the threshold within max_lag");
        return crossing;
    }
    const ShapeFit fit = fit_shape(curve, curve.shape, found ? crossing : 0.0);
    if (!(fit.width > 0.0) || !std::isfinite(fit.width))
        throw WidthNotResolved("shape fit did not yield a positive width");
    return fit.width;
}

double shape_fit_residual(const CorrelationCurve& curve, CorrelationShape shape) {
    CorrelationCurve as = curve;
    as.shape = shape;
    double guess = 0.0;
    try {
        guess = correlation_width(as, WidthMethod::threshold);
    } catch (const WidthNotResolved&) {
    }
    return fit_shape(as, shape, guess).rms;
}

MaximaStats count_maxima(const UnfoldedSeries& series, double min_prominence) {
    const auto& v = series.values;
    MaximaStats out;
    out.window_id = series.window_id;
    out.span = series.span();
    const std::size_t n = v.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (!(v[i] > v[i - 1])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && v[j + 1] == v[i]) ++j;
        if (j + 1 < n && v[j + 1] < v[i]) {
            bool keep = true;
            if (min_prominence > 0.0) {
                const double peak = v[i];
                double left_min = peak, right_min = peak;
                for (std::size_t k = i; k-- > 0;) {
                    if (v[k] > peak) break;
                    left_min = std::min(left_min, v[k]);
                }
                for (std::size_t k = j + 1; k < n; ++k) {
                    if (v[k] > peak) break;
                    right_min = std::min(right_min, v[k]);
                }
                keep = peak - std::max(left_min, right_min) >= min_prominence;
            }
            if (keep) ++out.n_max;
        }
        i = j + 1;
    }
    out.density = out.span > 0.0 ? static_cast<double>(out.n_max) / out.span : 0.0;
    return out;
}

WindowResult ensemble_product(std::span<const UnfoldedSeries> realizations, const WindowSpec& spec,
                              int window_id) {
    if (realizations.empty()) throw DomainError("window has no realizations");
    if (spec.subintervals < 1) throw DomainError("need at least one sub-interval");
    WindowResult out;
    out.window_id = window_id;
    out.realizations = static_cast<int>(realizations.size());

    std::vector<double> densities;
    for (const auto& r : realizations) {
        r.validate();
        const MaximaStats st = count_maxima(r, spec.min_prominence);
        out.n_max += st.n_max;
        out.span += st.span;
        densities.push_back(st.density);
    }
    out.density = out.span > 0.0 ? static_cast<double>(out.n_max) / out.span : 0.0;
    out.density_stderr = standard_error(densities);

    // Sub-interval slices for every realization, cut from a uniform grid.
    const auto k = static_cast<std::size_t>(spec.subintervals);
    std::vector<std::vector<UnfoldedSeries>> slices(k);
    for (const auto& r : realizations) {
        const UnfoldedSeries u = is_uniform(r.abscissa) ? r : resample_uniform(r);
        const std::size_t len = u.size() / k;
        for (std::size_t s = 0; s < k; ++s) slices[s].push_back(u.slice(s * len, len));
    }
    double max_lag = spec.max_lag;
    if (max_lag <= 0.0) max_lag = slices[0][0].span() / 2.5;

    auto width_of = [&](std::span<const UnfoldedSeries> group) {
        const CorrelationCurve c = ensemble_autocorrelation(group, max_lag, spec.shape);
        return correlation_width(c, spec.method);
    };

    std::vector<double> widths;
    if (spec.pool) {
        for (std::size_t s = 0; s < k; ++s) {
            try {
                widths.push_back(width_of(slices[s]));
            } catch (const WidthNotResolved&) {
                ++out.unresolved;
            }
        }
        if (k == 1 && !widths.empty()) {
            // Batch means over realizations for the width uncertainty.
            const std::size_t batches = std::min<std::size_t>(10, realizations.size());
            std::vector<double> batch_widths;
            if (batches >= 2) {
                const std::size_t per = realizations.size() / batches;
                for (std::size_t b = 0; b < batches; ++b) {
                    try {
                        batch_widths.push_back(
                            width_of(std::span(slices[0]).subspan(b * per, per)));
                    } catch (const WidthNotResolved&) {
                    }
                }
            }
            out.width = widths.front();
            out.width_stderr = standard_error(batch_widths);
        }
    } else {
        for (std::size_t s = 0; s < k; ++s) {
            for (const auto& piece : slices[s]) {
                try {
                    widths.push_back(width_of(std::span(&piece, 1)));
                } catch (const WidthNotResolved&) {
                    ++out.unresolved;
                }
            }
        }
    }
    if (!(spec.pool && k == 1)) {
        out.width = mean(widths);
        out.width_stderr = standard_error(widths);
    }

    const int budget = spec.pool ? spec.max_unresolved : spec.max_unresolved * out.realizations;
    if (widths.empty() || out.unresolved > budget) {
        out.dropped = true;
        std::ostringstream msg;
        msg << "correlation width not resolved in " << out.unresolved << " sub-intervals";
        out.reason = msg.str();
        return out;
    }

    ProductPoint p;
    p.gamma = out.width;
    p.product = out.density * out.width;
    const double rd = out.density > 0.0 ? out.density_stderr / out.density : 0.0;
    const double rw = out.width > 0.0 ? out.width_stderr / out.width : 0.0;
    p.std_error = p.product * std::sqrt(rd * rd + rw * rw);
    p.model_tag = spec.model_tag;
    out.point = p;
    return out;
}

UnfoldedSeries unfolded_series(const SMatrixSpectrum& spectrum, const Unfolding& unfolding,
                               ChannelPair channel) {
    UnfoldedSeries s;
    s.abscissa = unfolding.apply(spectrum.grid);
    s.values = spectrum.cross_section(channel);
    return s;
}

std::vector<WindowResult> windowed_products(const SMatrixSpectrum& spectrum,
                                            const Unfolding& unfolding,
                                            std::span<const WindowBounds> windows,
                                            const WindowSpec& spec, ChannelPair channel) {
    const UnfoldedSeries full = unfolded_series(spectrum, unfolding, channel);
    std::vector<WindowResult> out;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const auto lo = std::lower_bound(full.abscissa.begin(), full.abscissa.end(), windows[w].lo);
        const auto hi = std::upper_bound(full.abscissa.begin(), full.abscissa.end(), windows[w].hi);
        const auto first = static_cast<std::size_t>(lo - full.abscissa.begin());
        const auto last = static_cast<std::size_t>(hi - full.abscissa.begin());
        WindowResult r;
        r.window_id = static_cast<int>(w);
        if (last <= first + 3) {
            r.dropped = true;
            r.reason = "window contains too few points";
            out.push_back(std::move(r));
            continue;
        }
        UnfoldedSeries piece = full.slice(first, last - first);
        piece.window_id = static_cast<int>(w);
        try {
            out.push_back(ensemble_product(std::span(&piece, 1), spec, static_cast<int>(w)));
        } catch (const DomainError& e) {
            r.dropped = true;
            r.reason = e.what();
            out.push_back(std::move(r));
        }
    }
    return out;
}

ParametricScale parametric_rescale(const Eigen::MatrixXd& tracks, std::span<const double> alphas) {
    const auto p = static_cast<Eigen::Index>(alphas.size());
    if (p < 2) throw DomainError("need at least two parameter values");
    if (tracks.cols() != p) throw DimensionError("track columns must match parameter values");
    if (tracks.rows() < 1) throw DimensionError("no level tracks given");
    if (!tracks.allFinite()) throw DomainError("level tracks have missing entries");
    for (Eigen::Index j = 1; j < p; ++j)
        if (!(alphas[j] > alphas[j - 1])) throw DomainError("parameter values must increase");

    double sum = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        const Eigen::Index a = j == 0 ? 0 : j - 1;
        const Eigen::Index b = j == p - 1 ? p - 1 : j + 1;
        const Eigen::VectorXd v = (tracks.col(b) - tracks.col(a)) / (alphas[b] - alphas[a]);
        sum += v.squaredNorm();
    }
    ParametricScale out;
    out.mean_square_velocity = sum / static_cast<double>(tracks.rows() * p);
    if (!(out.mean_square_velocity > 0.0))
        throw DomainError("level velocities vanish; parameter cannot be rescaled");
    const double root = std::sqrt(out.mean_square_velocity);
    out.x.resize(alphas.size());
    for (std::size_t j = 0; j < alphas.size(); ++j) out.x[j] = root * alphas[j];
    return out;
}

} // namespace ericson
