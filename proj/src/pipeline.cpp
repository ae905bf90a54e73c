#include "ericson/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ericson/io.hpp"

#ifndef ERICSON_VERSION
#define ERICSON_VERSION "0.0.0"
#endif

namespace ericson {

using nlohmann::json;

const char* version() { return ERICSON_VERSION; }

PipelineError::PipelineError(const std::string& stage, int window, long realization,
                             const std::string& what)
    : Error(stage + " failed (window " + std::to_string(window) + ", realization " +
            std::to_string(realization) + "): " + what),
      stage_(stage), window_(window), realization_(realization) {}

const char* to_string(ModelKind m) {
    switch (m) {
    case ModelKind::rmt_billiard: return "rmt_billiard";
    case ModelKind::rmt_parametric: return "rmt_parametric";
    case ModelKind::graph: return "graph";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "rmt_billiard") return ModelKind::rmt_billiard;
    if (s == "rmt_parametric") return ModelKind::rmt_parametric;
    if (s == "graph") return ModelKind::graph;
    throw ConfigError("unknown model '" + s + "'");
}

namespace {

// ------------------------------------------------------------ config parsing

SymmetryClass symmetry_from_string(const std::string& s) {
    if (s == "goe") return SymmetryClass::goe;
    if (s == "partial_t") return SymmetryClass::partial_t;
    if (s == "gue") return SymmetryClass::gue;
    throw ConfigError("unknown symmetry '" + s + "' (expected goe, partial_t or gue)");
}

const char* width_method_name(WidthMethod m) { return m == WidthMethod::fit ? "fit" : "threshold"; }

WidthMethod width_method_from_string(const std::string& s) {
    if (s == "threshold") return WidthMethod::threshold;
    if (s == "fit") return WidthMethod::fit;
    throw ConfigError("unknown width method '" + s + "'");
}

// Reads keys from one JSON object and rejects any key it was not asked for.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError(name_ + " must be a JSON object");
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return fallback;
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(name_ + "." + key + " has the wrong type");
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError("unknown key " + name_ + "." + k);
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

void check_transmission(double t, const std::string& where) {
    require(t > 0.0 && t <= 1.0, where + " must lie in (0, 1]");
}

BilliardConfig parse_billiard(const json& j) {
    Section s(j, "rmt_billiard");
    BilliardConfig c;
    c.n = s.get<long>("N", c.n);
    c.m = s.get<long>("M", c.m);
    c.real_channels = s.get<int>("real_channels", c.real_channels);
    c.symmetry = symmetry_from_string(s.get<std::string>("symmetry", "goe"));
    c.method = solve_method_from_string(s.get<std::string>("method", "poles"));
    c.center = s.get<double>("center", c.center);
    c.half_width = s.get<double>("half_width", c.half_width);
    if (s.has("windows")) {
        for (const auto& w : s.raw("windows")) {
            Section ws(w, "rmt_billiard.windows[]");
            BilliardWindow b;
            b.t_real = ws.get<double>("t_real", b.t_real);
            b.t_fictitious = ws.get<double>("t_fictitious", b.t_real);
            b.xi = ws.get<double>("xi", 0.0);
            ws.finish();
            c.windows.push_back(b);
        }
    }
    s.finish();
    return c;
}

ParametricConfig parse_parametric(const json& j) {
    Section s(j, "rmt_parametric");
    ParametricConfig c;
    c.n = s.get<long>("N", c.n);
    c.m = s.get<long>("M", c.m);
    c.real_channels = s.get<int>("real_channels", c.real_channels);
    c.mu_lo = s.get<double>("mu_lo", c.mu_lo);
    c.mu_hi = s.get<double>("mu_hi", c.mu_hi);
    c.mu_points = s.get<int>("mu_points", c.mu_points);
    c.frequencies = s.get<int>("frequencies", c.frequencies);
    c.velocity_fraction = s.get<double>("velocity_fraction", c.velocity_fraction);
    if (s.has("windows")) {
        for (const auto& w : s.raw("windows")) {
            Section ws(w, "rmt_parametric.windows[]");
            ParametricWindow p;
            p.t_real = ws.get<double>("t_real", p.t_real);
            p.t_fictitious = ws.get<double>("t_fictitious", p.t_real);
            ws.finish();
            c.windows.push_back(p);
        }
    }
    s.finish();
    return c;
}

GraphConfig parse_graph(const json& j) {
    Section s(j, "graph");
    GraphConfig c;
    c.kind = s.get<std::string>("kind", c.kind);
    c.file = s.get<std::string>("file", "");
    c.vertices = s.get<int>("V", c.vertices);
    c.degree = s.get<int>("degree", c.degree);
    c.leads = s.get<std::vector<int>>("leads", c.leads);
    c.spacings_per_segment = s.get<double>("spacings_per_segment", c.spacings_per_segment);
    c.f_start = s.get<double>("f_start", c.f_start);
    c.density = s.get<double>("density", c.density);
    c.density_spacings = s.get<double>("density_spacings", c.density_spacings);
    c.density_samples = s.get<double>("density_samples", c.density_samples);
    if (s.has("windows")) {
        for (const auto& w : s.raw("windows")) {
            Section ws(w, "graph.windows[]");
            GraphWindow g;
            g.w = ws.get<double>("w", g.w);
            g.lead_count = ws.get<int>("lead_count", static_cast<int>(c.leads.size()));
            g.potential = ws.get<double>("A", g.potential);
            ws.finish();
            c.windows.push_back(g);
        }
    }
    s.finish();
    return c;
}

// ------------------------------------------------------------- scheduling

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Each index is
// processed exactly once; callers store results by index.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    unsigned threads = jobs > 0 ? static_cast<unsigned>(jobs) : std::thread::hardware_concurrency();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

// Per-realization outcome of one window.
struct Sample {
    bool ok = false;
    std::string stage;
    std::string message;
    std::vector<UnfoldedSeries> series;
    cdouble s11{0.0, 0.0};
    cdouble s22{0.0, 0.0};
    std::size_t points = 0;
    double mean_square_velocity = 0.0; // parametric only
    std::vector<double> mu;            // parametric only
    std::vector<SMatrixSpectrum> spectra;
};

void accumulate_diagonal(Sample& s, const SMatrixSpectrum& sp) {
    const std::size_t c11 = sp.channel_index({0, 0});
    const std::size_t c22 = sp.channel_index({1, 1});
    for (std::size_t i = 0; i < sp.size(); ++i) {
        s.s11 += sp.at(i, c11);
        s.s22 += sp.at(i, c22);
    }
    s.points += sp.size();
}

std::vector<double> channel_transmissions(Eigen::Index m, int real, double t_real, double t_fict) {
    std::vector<double> t(static_cast<std::size_t>(m), t_fict);
    for (int c = 0; c < real && c < m; ++c) t[static_cast<std::size_t>(c)] = t_real;
    return t;
}

Hamiltonian sample_hamiltonian(const BilliardConfig& b, double xi, const RngPlan& plan) {
    switch (b.symmetry) {
    case SymmetryClass::partial_t: return sample_partial_t(b.n, xi, plan);
    case SymmetryClass::gue: return sample_gue(b.n, plan);
    default: return sample_goe(b.n, plan);
    }
}

void billiard_sample(Sample& s, const RunConfig& c, int window, std::uint64_t r, std::span<const double> egrid) {
    const auto& b = c.billiard;
    const auto& w = b.windows[static_cast<std::size_t>(window)];
    const RngPlan plan{c.seed, r};
    s.stage = "sample";
    const Hamiltonian h = sample_hamiltonian(b, w.xi, plan);
    s.stage = "coupling";
    const auto t = channel_transmissions(b.m, b.real_channels, w.t_real, w.t_fictitious);
    const CouplingMatrix cm = build_coupling(b.n, b.m, t, semicircle_mean_spacing(b.n, 0.0), plan);
    s.stage = "sweep";
    SMatrixSpectrum sp = sweep(h, cm, egrid, default_channels(), b.method);
    sp.metadata.seed = c.seed;
    sp.metadata.realization = r;
    sp.metadata.model = std::string("rmt_billiard/") + to_string(b.symmetry);
    sp.metadata.window_lo = egrid.front();
    sp.metadata.window_hi = egrid.back();
    s.stage = "unfold";
    Unfolding u;
    u.kind = Unfolding::Kind::semicircle;
    u.dim = b.n;
    UnfoldedSeries series = unfolded_series(sp, u, {1, 0});
    series.window_id = window;
    s.series.push_back(std::move(series));
    accumulate_diagonal(s, sp);
    if (c.keep_spectra) s.spectra.push_back(std::move(sp));
    s.ok = true;
}

std::vector<double> central_midpoints(const Eigen::VectorXd& sorted, int count) {
    const Eigen::Index n = sorted.size();
    const Eigen::Index k = std::min<Eigen::Index>(count, n - 1);
    const Eigen::Index first = std::max<Eigen::Index>(0, (n - 1 - k) / 2);
    std::vector<double> out;
    for (Eigen::Index i = first; i < first + k; ++i) out.push_back(0.5 * (sorted(i) + sorted(i + 1)));
    return out;
}

void parametric_sample(Sample& s, const RunConfig& c, int window, std::uint64_t r, std::span<const double> mu) {
    const auto& p = c.parametric;
    const auto& w = p.windows[static_cast<std::size_t>(window)];
    const RngPlan plan{c.seed, r};
    s.stage = "sample";
    const ParametricPair pair = sample_parametric_pair(p.n, plan);
    s.stage = "coupling";
    const auto t = channel_transmissions(p.m, p.real_channels, w.t_real, w.t_fictitious);
    const CouplingMatrix cm = build_coupling(p.n, p.m, t, semicircle_mean_spacing(p.n, 0.0), plan);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(parametric_matrix(pair, mu.front()),
                                                      Eigen::EigenvaluesOnly);
    const auto freqs = central_midpoints(es.eigenvalues(), p.frequencies);
    s.stage = "sweep";
    ParametricSweep ps = sweep_parametric(pair, cm, mu, freqs, default_channels());
    s.stage = "unfold";
    Eigen::MatrixXd unfolded = ps.levels;
    for (Eigen::Index i = 0; i < unfolded.rows(); ++i)
        for (Eigen::Index j = 0; j < unfolded.cols(); ++j)
            unfolded(i, j) = semicircle_staircase(p.n, unfolded(i, j));
    const auto keep = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::lround(p.velocity_fraction * static_cast<double>(p.n))));
    const Eigen::Index first = (p.n - keep) / 2;
    const ParametricScale scale = parametric_rescale(unfolded.middleRows(first, keep), mu);
    s.mean_square_velocity = scale.mean_square_velocity;
    s.mu.assign(mu.begin(), mu.end());
    for (auto& sp : ps.spectra) {
        sp.metadata.seed = c.seed;
        sp.metadata.realization = r;
        UnfoldedSeries series;
        series.abscissa.assign(mu.begin(), mu.end()); // rescaled once the ensemble is complete
        series.values = sp.cross_section({1, 0});
        series.window_id = window;
        s.series.push_back(std::move(series));
        accumulate_diagonal(s, sp);
        if (c.keep_spectra) s.spectra.push_back(std::move(sp));
    }
    s.ok = true;
}

GraphSpec window_graph(const RunConfig& c, int window) {
    const auto& g = c.graph;
    const auto& w = g.windows[static_cast<std::size_t>(window)];
    GraphSpec spec;
    if (g.kind == "tetrahedron") {
        spec = make_tetrahedron(w.w, {g.leads.at(0), g.leads.at(1)});
    } else if (g.kind == "random_regular") {
        spec = make_random_regular(g.vertices, g.degree, RngPlan{c.seed, 0}, w.lead_count, w.w);
    } else {
        spec = graph_from_json(read_text_file(g.file)).with_coupling(w.w);
        if (!g.leads.empty()) spec = spec.with_leads(g.leads);
    }
    if (w.potential != 0.0) spec = spec.with_uniform_potential(w.potential);
    return spec;
}

void graph_sample(Sample& s, const RunConfig& c, int window, std::uint64_t r, const GraphSpec& spec,
                    double density) {
    const auto& g = c.graph;
    s.stage = "sweep";
    const double length = g.spacings_per_segment / density;
    const double lo = g.f_start + static_cast<double>(r) * length;
    const auto n = static_cast<std::size_t>(std::llround(g.spacings_per_segment * c.analysis.points_per_spacing));
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = lo + length * static_cast<double>(i) / static_cast<double>(n);
    SMatrixSpectrum sp = graph_sweep(spec, grid, default_channels());
    sp.metadata.seed = c.seed;
    sp.metadata.realization = r;
    s.stage = "unfold";
    Unfolding u;
    u.kind = Unfolding::Kind::graph;
    u.density = density;
    UnfoldedSeries series = unfolded_series(sp, u, {1, 0});
    series.window_id = window;
    s.series.push_back(std::move(series));
    accumulate_diagonal(s, sp);
    if (c.keep_spectra) s.spectra.push_back(std::move(sp));
    s.ok = true;
}

AnsatzFamily default_family(const RunConfig& c) {
    switch (c.model) {
    case ModelKind::rmt_parametric: return AnsatzFamily::parametric;
    case ModelKind::graph: {
        bool two = true;
        for (const auto& w : c.graph.windows) two = two && w.lead_count == 2;
        return two ? AnsatzFamily::two_channel : AnsatzFamily::freq_lorentzian;
    }
    default: return AnsatzFamily::freq_lorentzian;
    }
}

std::string window_tag(const RunConfig& c) {
    if (!c.analysis.window.model_tag.empty()) return c.analysis.window.model_tag;
    switch (c.model) {
    case ModelKind::rmt_billiard: return std::string("rmt_billiard_") + to_string(c.billiard.symmetry);
    case ModelKind::rmt_parametric: return "rmt_parametric";
    case ModelKind::graph: return "graph_" + c.graph.kind;
    }
    return "";
}

std::size_t window_count(const RunConfig& c) {
    switch (c.model) {
    case ModelKind::rmt_billiard: return c.billiard.windows.size();
    case ModelKind::rmt_parametric: return c.parametric.windows.size();
    case ModelKind::graph: return c.graph.windows.size();
    }
    return 0;
}

CorrelationCurve window_curve(std::span<const UnfoldedSeries> series, const WindowSpec& spec) {
    const double span = series.front().span();
    const double max_lag = spec.max_lag > 0.0 ? spec.max_lag
                                              : span / static_cast<double>(std::max(1, spec.subintervals)) / 2.5;
    CorrelationCurve curve = ensemble_autocorrelation(series, std::min(max_lag, 0.49 * span), spec.shape);
    try {
        curve.width = correlation_width(curve, spec.method);
    } catch (const WidthNotResolved&) {
        curve.width = 0.0;
    }
    return curve;
}

std::string pad(int v, int width) {
    std::string s = std::to_string(v);
    return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

void finish_fit(const RunConfig& c, RunReport& report) {
    const AnsatzFamily family = c.fit_family.value_or(default_family(c));
    const std::size_t need = 2 * AnsatzModel::initial(family).params.size();
    if (report.products.size() < need) {
        report.fit_note = "fit skipped: " + std::to_string(report.products.size()) +
                          " product points, need " + std::to_string(need);
    } else {
        try {
            report.fit = fit_ansatz(report.products, family);
            if (!report.fit->converged) report.fit_note = "fit did not converge";
        } catch (const DomainError& e) {
            report.fit_note = std::string("fit skipped: ") + e.what();
        }
    }
    std::optional<QdConfig> qd = c.qd;
    if (!qd && c.model == ModelKind::rmt_parametric) qd = QdConfig{};
    if (qd) {
        AnsatzModel model{qd->family, {}};
        if (qd->family == AnsatzFamily::qd_lorentzian) model.params = {qd->kappa};
        for (const auto& p : report.products) {
            if (!p.tunneling || !(*p.tunneling > 0.0 && *p.tunneling <= 1.0)) continue;
            report.chi.emplace_back(*p.tunneling, p.product / eval_qd(model, *p.tunneling));
        }
    }
}

} // namespace

// ------------------------------------------------------------------ config

std::vector<int> parse_window_list(const std::string& text) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        if (part.empty()) continue;
        try {
            const auto dash = part.find('-');
            if (dash == std::string::npos) {
                std::size_t used = 0;
                out.push_back(std::stoi(part, &used));
                if (used != part.size()) throw ConfigError("");
            } else {
                const int a = std::stoi(part.substr(0, dash));
                const int b = std::stoi(part.substr(dash + 1));
                if (b < a) throw ConfigError("");
                for (int i = a; i <= b; ++i) out.push_back(i);
            }
        } catch (const std::exception&) {
            throw ConfigError("bad window list '" + text + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty window list");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

RunConfig parse_config(const json& j) {
    Section s(j, "config");
    RunConfig c;
    c.model = model_kind_from_string(s.get<std::string>("model", "rmt_billiard"));
    c.seed = s.get<std::uint64_t>("seed", c.seed);
    c.ensemble_size = s.get<int>("ensemble_size", c.ensemble_size);
    c.jobs = s.get<int>("jobs", c.jobs);
    c.output = s.get<std::string>("output", c.output.string());
    c.keep_spectra = s.get<bool>("keep_spectra", c.keep_spectra);
    if (s.has("windows")) c.window_subset = s.get<std::vector<int>>("windows", {});

    c.analysis.window.shape = c.model == ModelKind::rmt_parametric ? CorrelationShape::squared_lorentzian
                                                                   : CorrelationShape::lorentzian;
    if (c.model != ModelKind::graph) {
        c.analysis.window.subintervals = 1;
        c.analysis.window.pool = true;
    } else {
        c.analysis.window.pool = true;
    }
    if (s.has("analysis")) {
        Section a(s.raw("analysis"), "analysis");
        auto& w = c.analysis.window;
        w.subintervals = a.get<int>("subintervals", w.subintervals);
        if (a.has("shape")) w.shape = correlation_shape_from_string(a.get<std::string>("shape", ""));
        if (a.has("width_method")) w.method = width_method_from_string(a.get<std::string>("width_method", ""));
        w.max_lag = a.get<double>("max_lag", w.max_lag);
        w.pool = a.get<bool>("pool", w.pool);
        w.max_unresolved = a.get<int>("max_unresolved", w.max_unresolved);
        w.min_prominence = a.get<double>("min_prominence", w.min_prominence);
        w.model_tag = a.get<std::string>("model_tag", w.model_tag);
        c.analysis.points_per_spacing = a.get<double>("points_per_spacing", c.analysis.points_per_spacing);
        a.finish();
    }
    if (s.has("fit")) {
        Section f(s.raw("fit"), "fit");
        if (f.has("family")) c.fit_family = ansatz_family_from_string(f.get<std::string>("family", ""));
        f.finish();
    }
    if (s.has("qd")) {
        Section q(s.raw("qd"), "qd");
        QdConfig qd;
        qd.family = ansatz_family_from_string(q.get<std::string>("family", to_string(qd.family)));
        qd.kappa = q.get<double>("kappa", qd.kappa);
        q.finish();
        c.qd = qd;
    }
    if (s.has("rmt_billiard")) c.billiard = parse_billiard(s.raw("rmt_billiard"));
    if (s.has("rmt_parametric")) c.parametric = parse_parametric(s.raw("rmt_parametric"));
    if (s.has("graph")) c.graph = parse_graph(s.raw("graph"));
    s.finish();
    validate(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j);
}

void validate(const RunConfig& c) {
    require(c.ensemble_size >= 1, "ensemble_size must be at least 1");
    require(c.jobs >= 0, "jobs must be non-negative");
    const auto& a = c.analysis;
    require(a.window.subintervals >= 1, "analysis.subintervals must be at least 1");
    require(a.window.max_lag >= 0.0, "analysis.max_lag must be non-negative");
    require(a.window.max_unresolved >= 0, "analysis.max_unresolved must be non-negative");
    require(a.window.min_prominence >= 0.0, "analysis.min_prominence must be non-negative");
    require(a.points_per_spacing >= 2.0, "analysis.points_per_spacing must be at least 2");
    if (c.qd) {
        require(c.qd->family == AnsatzFamily::qd_lorentzian ||
                    c.qd->family == AnsatzFamily::qd_squared_lorentzian,
                "qd.family must be a quantum-dot family");
    }
    if (c.fit_family) require(!AnsatzModel{*c.fit_family, {}}.is_quantum_dot(), "fit.family must be an ansatz family");

    const std::size_t windows = window_count(c);
    require(windows >= 1, std::string(to_string(c.model)) + ".windows must list at least one window");
    if (c.window_subset) {
        require(!c.window_subset->empty(), "windows subset is empty");
        for (std::size_t i = 0; i < c.window_subset->size(); ++i) {
            const int k = (*c.window_subset)[i];
            require(k >= 0 && static_cast<std::size_t>(k) < windows, "window index out of range");
            require(i == 0 || k > (*c.window_subset)[i - 1], "window subset must be strictly increasing");
        }
    }

    switch (c.model) {
    case ModelKind::rmt_billiard: {
        const auto& b = c.billiard;
        require(b.n >= 2, "rmt_billiard.N must be at least 2");
        require(b.m >= 2 && b.m <= b.n, "rmt_billiard.M must lie in [2, N]");
        require(b.real_channels >= 2 && b.real_channels <= b.m, "rmt_billiard.real_channels must lie in [2, M]");
        require(b.half_width > 0.0 && std::abs(b.center) + b.half_width < 1.0,
                "rmt_billiard window must lie inside the semicircle");
        for (const auto& w : b.windows) {
            check_transmission(w.t_real, "rmt_billiard.windows[].t_real");
            check_transmission(w.t_fictitious, "rmt_billiard.windows[].t_fictitious");
            require(w.xi >= 0.0, "rmt_billiard.windows[].xi must be non-negative");
        }
        break;
    }
    case ModelKind::rmt_parametric: {
        const auto& p = c.parametric;
        require(p.n >= 3, "rmt_parametric.N must be at least 3");
        require(p.m >= 2 && p.m <= p.n, "rmt_parametric.M must lie in [2, N]");
        require(p.real_channels >= 2 && p.real_channels <= p.m, "rmt_parametric.real_channels must lie in [2, M]");
        require(p.mu_hi > p.mu_lo, "rmt_parametric.mu_hi must exceed mu_lo");
        require(p.mu_points >= 100, "rmt_parametric.mu_points must be at least 100");
        require(p.frequencies >= 1, "rmt_parametric.frequencies must be positive");
        require(p.velocity_fraction > 0.0 && p.velocity_fraction <= 1.0,
                "rmt_parametric.velocity_fraction must lie in (0, 1]");
        for (const auto& w : p.windows) {
            check_transmission(w.t_real, "rmt_parametric.windows[].t_real");
            check_transmission(w.t_fictitious, "rmt_parametric.windows[].t_fictitious");
        }
        break;
    }
    case ModelKind::graph: {
        const auto& g = c.graph;
        require(g.kind == "tetrahedron" || g.kind == "random_regular" || g.kind == "file",
                "graph.kind must be tetrahedron, random_regular or file");
        if (g.kind == "file")
            require(std::filesystem::exists(g.file), "graph.file does not exist: " + g.file.string());
        if (g.kind == "tetrahedron") require(g.leads.size() == 2, "tetrahedron needs exactly two leads");
        require(g.spacings_per_segment >= 10.0, "graph.spacings_per_segment must be at least 10");
        require(g.density >= 0.0, "graph.density must be non-negative");
        require(g.density_spacings >= 10.0, "graph.density_spacings must be at least 10");
        require(g.density_samples >= 10.0, "graph.density_samples must be at least 10");
        for (const auto& w : g.windows) {
            require(w.w > 0.0 && w.w <= 1.7724538509055159, "graph.windows[].w must lie in (0, sqrt(pi)]");
            require(w.lead_count >= 2, "graph.windows[].lead_count must be at least 2");
            if (g.kind == "random_regular")
                require(w.lead_count <= g.vertices, "graph.windows[].lead_count exceeds V");
        }
        break;
    }
    }
}

json config_to_json(const RunConfig& c) {
    json j;
    j["model"] = to_string(c.model);
    j["seed"] = c.seed;
    j["ensemble_size"] = c.ensemble_size;
    j["jobs"] = c.jobs;
    j["output"] = c.output.string();
    j["keep_spectra"] = c.keep_spectra;
    if (c.window_subset) j["windows"] = *c.window_subset;
    const auto& w = c.analysis.window;
    j["analysis"] = {{"subintervals", w.subintervals},
                     {"shape", to_string(w.shape)},
                     {"width_method", width_method_name(w.method)},
                     {"max_lag", w.max_lag},
                     {"pool", w.pool},
                     {"max_unresolved", w.max_unresolved},
                     {"min_prominence", w.min_prominence},
                     {"model_tag", w.model_tag},
                     {"points_per_spacing", c.analysis.points_per_spacing}};
    if (c.fit_family) j["fit"] = {{"family", to_string(*c.fit_family)}};
    if (c.qd) j["qd"] = {{"family", to_string(c.qd->family)}, {"kappa", c.qd->kappa}};
    switch (c.model) {
    case ModelKind::rmt_billiard: {
        const auto& b = c.billiard;
        json ws = json::array();
        for (const auto& x : b.windows) ws.push_back({{"t_real", x.t_real}, {"t_fictitious", x.t_fictitious}, {"xi", x.xi}});
        j["rmt_billiard"] = {{"N", b.n},           {"M", b.m},
                             {"real_channels", b.real_channels},
                             {"symmetry", to_string(b.symmetry)},
                             {"method", to_string(b.method)},
                             {"center", b.center}, {"half_width", b.half_width},
                             {"windows", ws}};
        break;
    }
    case ModelKind::rmt_parametric: {
        const auto& p = c.parametric;
        json ws = json::array();
        for (const auto& x : p.windows) ws.push_back({{"t_real", x.t_real}, {"t_fictitious", x.t_fictitious}});
        j["rmt_parametric"] = {{"N", p.n},
                               {"M", p.m},
                               {"real_channels", p.real_channels},
                               {"mu_lo", p.mu_lo},
                               {"mu_hi", p.mu_hi},
                               {"mu_points", p.mu_points},
                               {"frequencies", p.frequencies},
                               {"velocity_fraction", p.velocity_fraction},
                               {"windows", ws}};
        break;
    }
    case ModelKind::graph: {
        const auto& g = c.graph;
        json ws = json::array();
        for (const auto& x : g.windows) ws.push_back({{"w", x.w}, {"lead_count", x.lead_count}, {"A", x.potential}});
        j["graph"] = {{"kind", g.kind},
                      {"file", g.file.string()},
                      {"V", g.vertices},
                      {"degree", g.degree},
                      {"leads", g.leads},
                      {"spacings_per_segment", g.spacings_per_segment},
                      {"f_start", g.f_start},
                      {"density", g.density},
                      {"density_spacings", g.density_spacings},
                      {"density_samples", g.density_samples},
                      {"windows", ws}};
        break;
    }
    }
    return j;
}

std::string config_hash(const RunConfig& c) {
    json j = config_to_json(c);
    // Scheduling and destination do not change results.
    j.erase("jobs");
    j.erase("output");
    j.erase("keep_spectra");
    const std::string text = j.dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<double> semicircle_grid(Eigen::Index n, double lo, double hi, double points_per_spacing) {
    if (!(hi > lo)) throw DomainError("empty energy window");
    if (!(lo > -kSemicircleRadius && hi < kSemicircleRadius))
        throw DomainError("energy window must lie inside the semicircle");
    const double ulo = semicircle_staircase(n, lo);
    const double uhi = semicircle_staircase(n, hi);
    const auto count = static_cast<std::size_t>(std::llround((uhi - ulo) * points_per_spacing)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double u = ulo + (uhi - ulo) * static_cast<double>(i) / static_cast<double>(count - 1);
        double a = lo, b = hi;
        for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
            const double mid = 0.5 * (a + b);
            (semicircle_staircase(n, mid) < u ? a : b) = mid;
        }
        grid[i] = 0.5 * (a + b);
    }
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

int RunReport::exit_code() const {
    if (!skipped.empty()) return exit_partial;
    for (const auto& w : windows)
        if (w.dropped) return exit_partial;
    return exit_ok;
}

RunReport run_pipeline(const RunConfig& c, bool write, const ProgressFn& progress) {
    validate(c);
    RunReport report;
    const std::size_t total = window_count(c);
    std::vector<int> selected;
    if (c.window_subset) selected = *c.window_subset;
    else
        for (std::size_t k = 0; k < total; ++k) selected.push_back(static_cast<int>(k));

    const auto realizations = static_cast<std::size_t>(c.ensemble_size);
    WindowSpec spec = c.analysis.window;
    spec.model_tag = window_tag(c);

    std::vector<double> egrid, mu;
    if (c.model == ModelKind::rmt_billiard) {
        const double r = kSemicircleRadius;
        egrid = semicircle_grid(c.billiard.n, (c.billiard.center - c.billiard.half_width) * r,
                                (c.billiard.center + c.billiard.half_width) * r, c.analysis.points_per_spacing);
    } else if (c.model == ModelKind::rmt_parametric) {
        const auto& p = c.parametric;
        mu.resize(static_cast<std::size_t>(p.mu_points));
        for (int i = 0; i < p.mu_points; ++i)
            mu[static_cast<std::size_t>(i)] = p.mu_lo + (p.mu_hi - p.mu_lo) * i / (p.mu_points - 1);
    }

    int done = 0;
    for (int k : selected) {
        GraphSpec graph;
        double density = 0.0;
        if (c.model == ModelKind::graph) {
            try {
                graph = window_graph(c, k);
                density = c.graph.density;
                if (density <= 0.0) {
                    const double estimate = 2.0 * graph.total_length();
                    const double hi = c.graph.f_start + c.graph.density_spacings / estimate;
                    const auto samples = static_cast<std::size_t>(c.graph.density_spacings * c.graph.density_samples);
                    density = measure_resonance_density(graph, c.graph.f_start, hi, samples);
                }
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                throw PipelineError("graph", k, -1, e.what());
            }
            report.resonance_density.push_back(density);
        }

        std::vector<Sample> samples(realizations);
        parallel_for(realizations, c.jobs, [&](std::size_t r) {
            Sample& s = samples[r];
            try {
                switch (c.model) {
                case ModelKind::rmt_billiard: billiard_sample(s, c, k, r, egrid); break;
                case ModelKind::rmt_parametric: parametric_sample(s, c, k, r, mu); break;
                case ModelKind::graph: graph_sample(s, c, k, r, graph, density); break;
                }
            } catch (const std::exception& e) {
                s.ok = false;
                if (s.stage.empty()) s.stage = "sample";
                s.message = e.what();
            }
        });

        std::vector<UnfoldedSeries> pooled;
        cdouble s11{0.0, 0.0}, s22{0.0, 0.0};
        std::size_t points = 0;
        double velocity = 0.0;
        int good = 0;
        for (std::size_t r = 0; r < realizations; ++r) {
            Sample& s = samples[r];
            if (!s.ok) {
                report.skipped.push_back({s.stage, k, static_cast<long>(r), s.message});
                continue;
            }
            ++good;
            s11 += s.s11;
            s22 += s.s22;
            points += s.points;
            velocity += s.mean_square_velocity;
            for (auto& series : s.series) pooled.push_back(std::move(series));
        }
        if (c.model == ModelKind::rmt_parametric && good > 0) {
            // One rescaling for the whole ensemble, as for a single measured system.
            const double root = std::sqrt(velocity / good);
            for (auto& series : pooled)
                for (auto& x : series.abscissa) x *= root;
        }

        WindowResult result;
        result.window_id = k;
        CorrelationCurve curve;
        if (pooled.empty()) {
            result.dropped = true;
            result.reason = "no realization succeeded";
        } else {
            try {
                result = ensemble_product(pooled, spec, k);
                result.realizations = good;
                curve = window_curve(pooled, spec);
            } catch (const DomainError& e) {
                result.window_id = k;
                result.dropped = true;
                result.reason = e.what();
            }
        }
        if (result.point && points > 0) {
            const double n = static_cast<double>(points);
            const double t1 = 1.0 - std::norm(s11 / n);
            const double t2 = 1.0 - std::norm(s22 / n);
            result.point->tunneling = 0.5 * (t1 + t2);
        }
        if (result.point) report.products.push_back(*result.point);
        report.windows.push_back(result);
        report.curves.push_back(std::move(curve));

        if (write && c.keep_spectra) {
            for (std::size_t r = 0; r < realizations; ++r) {
                const auto& s = samples[r];
                for (std::size_t f = 0; f < s.spectra.size(); ++f) {
                    std::string name = "w" + pad(k, 3) + "_r" + pad(static_cast<int>(r), 4);
                    if (s.spectra.size() > 1) name += "_f" + pad(static_cast<int>(f), 3);
                    write_spectrum(c.output / "spectra" / (name + ".csv"), s.spectra[f]);
                }
            }
        }
        if (progress) progress(++done, static_cast<int>(selected.size()));
    }

    finish_fit(c, report);

    if (write) {
        write_report(c.output, report);
        write_text_file(c.output / "config.json", config_to_json(c).dump(2) + "\n");
        json skipped = json::array();
        for (const auto& s : report.skipped)
            skipped.push_back({{"stage", s.stage}, {"window", s.window}, {"realization", s.realization},
                               {"message", s.message}});
        json dropped = json::array();
        for (const auto& w : report.windows)
            if (w.dropped) dropped.push_back({{"window", w.window_id}, {"reason", w.reason}});
        json manifest = {{"config_hash", config_hash(c)},
                         {"seed", c.seed},
                         {"rng", kRngAlgorithm},
                         {"version", version()},
                         {"model", to_string(c.model)},
                         {"realizations", c.ensemble_size},
                         {"windows", selected},
                         {"product_rows", report.products.size()},
                         {"skipped", skipped},
                         {"dropped_windows", dropped},
                         {"fit", report.fit ? json("fit.json") : json(report.fit_note)},
                         {"exit_code", report.exit_code()}};
        if (c.model == ModelKind::rmt_billiard || c.model == ModelKind::rmt_parametric)
            manifest["coupling_branch"] = "sub-critical (x <= 1)";
        if (!report.resonance_density.empty()) manifest["resonance_density"] = report.resonance_density;
        write_text_file(c.output / "manifest.json", manifest.dump(2) + "\n");
    }
    return report;
}

RunReport analyze_spectra(const std::vector<SMatrixSpectrum>& spectra, const Unfolding& unfolding,
                          const std::vector<WindowBounds>& windows, const AnalysisConfig& analysis,
                          ChannelPair channel) {
    if (spectra.empty()) throw DomainError("no spectra to analyze");
    RunReport report;
    std::vector<UnfoldedSeries> full;
    for (const auto& s : spectra) full.push_back(unfolded_series(s, unfolding, channel));

    std::vector<WindowBounds> bounds = windows;
    if (bounds.empty()) {
        double lo = full.front().abscissa.front(), hi = full.front().abscissa.back();
        for (const auto& f : full) {
            lo = std::max(lo, f.abscissa.front());
            hi = std::min(hi, f.abscissa.back());
        }
        bounds.push_back({lo, hi});
    }
    for (std::size_t k = 0; k < bounds.size(); ++k) {
        const int id = static_cast<int>(k);
        std::vector<UnfoldedSeries> pieces;
        for (std::size_t r = 0; r < full.size(); ++r) {
            const auto& f = full[r];
            const auto lo = std::lower_bound(f.abscissa.begin(), f.abscissa.end(), bounds[k].lo);
            const auto hi = std::upper_bound(f.abscissa.begin(), f.abscissa.end(), bounds[k].hi);
            const auto first = static_cast<std::size_t>(lo - f.abscissa.begin());
            const auto last = static_cast<std::size_t>(hi - f.abscissa.begin());
            if (last <= first + 3) {
                report.skipped.push_back({"window", id, static_cast<long>(r), "window contains too few points"});
                continue;
            }
            UnfoldedSeries piece = f.slice(first, last - first);
            piece.window_id = id;
            pieces.push_back(std::move(piece));
        }
        WindowResult result;
        result.window_id = id;
        CorrelationCurve curve;
        if (pieces.empty()) {
            result.dropped = true;
            result.reason = "window contains too few points";
        } else {
            try {
                result = ensemble_product(pieces, analysis.window, id);
                curve = window_curve(pieces, analysis.window);
            } catch (const DomainError& e) {
                result.dropped = true;
                result.reason = e.what();
            }
        }
        if (result.point) report.products.push_back(*result.point);
        report.windows.push_back(result);
        report.curves.push_back(std::move(curve));
    }
    return report;
}

void write_report(const std::filesystem::path& dir, const RunReport& report) {
    write_products(dir / "products.csv", report.products);
    write_windows(dir / "windows.csv", report.windows);
    for (std::size_t k = 0; k < report.curves.size(); ++k) {
        if (report.curves[k].lags.empty()) continue;
        write_curve(dir / "curves" / ("window_" + pad(report.windows[k].window_id, 3) + ".csv"),
                    report.curves[k]);
    }
    if (report.fit) write_text_file(dir / "fit.json", to_json(*report.fit).dump(2) + "\n");
    if (!report.chi.empty()) write_chi(dir / "chi.csv", report.chi);
}

} // namespace ericson
