// Command-line front end: run, analyze, fit, import.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ericson/io.hpp"
#include "ericson/pipeline.hpp"

namespace {

using namespace ericson;
namespace fs = std::filesystem;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool keep_spectra = false;
    std::string windows;
    std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "JSON configuration document");
    cmd->add_option("--seed", c.seed, "Master seed (overrides the config)");
    cmd->add_option("--out", c.out, "Output directory or file");
    cmd->add_flag("--keep-spectra", c.keep_spectra, "Write every sampled spectrum");
    cmd->add_option("--windows", c.windows, "Window selection");
    cmd->add_option("--jobs", c.jobs, "Worker threads (0: all cores)");
}

void report_summary(const RunReport& r) {
    std::size_t dropped = 0;
    for (const auto& w : r.windows) dropped += w.dropped ? 1 : 0;
    std::printf("windows: %zu, product rows: %zu, dropped: %zu, skipped realizations: %zu\n",
                r.windows.size(), r.products.size(), dropped, r.skipped.size());
    for (const auto& w : r.windows)
        if (w.dropped) std::printf("  window %d dropped: %s\n", w.window_id, w.reason.c_str());
    for (const auto& s : r.skipped)
        std::printf("  skipped %s (window %d, realization %ld): %s\n", s.stage.c_str(), s.window,
                    s.realization, s.message.c_str());
    if (r.fit) {
        const auto names = r.fit->model().param_names();
        std::printf("fit %s:", to_string(r.fit->family));
        for (std::size_t i = 0; i < names.size(); ++i)
            std::printf(" %s=%.4f", names[i].c_str(), r.fit->params[i]);
        std::printf(" rms=%.3g%s\n", r.fit->residual_norm, r.fit->converged ? "" : " (not converged)");
    } else if (!r.fit_note.empty()) {
        std::printf("%s\n", r.fit_note.c_str());
    }
}

int cmd_run(const Common& o) {
    if (o.config.empty()) throw ConfigError("run needs --config");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(o.config));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(o.config + ": " + e.what());
    }
    if (o.seed) j["seed"] = *o.seed;
    if (!o.out.empty()) j["output"] = o.out;
    if (o.keep_spectra) j["keep_spectra"] = true;
    if (!o.windows.empty()) j["windows"] = parse_window_list(o.windows);
    if (o.jobs) j["jobs"] = *o.jobs;
    const RunConfig cfg = parse_config(j);
    const RunReport report = run_pipeline(cfg, true, [](int done, int total) {
        std::fprintf(stderr, "window %d/%d done\n", done, total);
    });
    report_summary(report);
    std::printf("outputs written to %s\n", cfg.output.string().c_str());
    return report.exit_code();
}

Unfolding parse_unfolding(const std::string& text) {
    Unfolding u;
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
        if (kind == "identity") {
            u.kind = Unfolding::Kind::identity;
        } else if (kind == "graph") {
            u.kind = Unfolding::Kind::graph;
            u.density = std::stod(arg);
        } else if (kind == "billiard") {
            u.kind = Unfolding::Kind::billiard;
            u.area = std::stod(arg);
        } else if (kind == "semicircle") {
            u.kind = Unfolding::Kind::semicircle;
            u.dim = std::stol(arg);
        } else {
            throw ConfigError("");
        }
    } catch (const std::exception&) {
        throw ConfigError("bad --unfold '" + text +
                          "' (identity, graph:DENSITY, billiard:AREA_M2 or semicircle:N)");
    }
    return u;
}

std::vector<WindowBounds> parse_bounds(const std::string& text) {
    std::vector<WindowBounds> out;
    std::istringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        const auto colon = part.find(':');
        try {
            if (colon == std::string::npos) throw ConfigError("");
            WindowBounds b{std::stod(part.substr(0, colon)), std::stod(part.substr(colon + 1))};
            if (!(b.hi > b.lo)) throw ConfigError("");
            if (!out.empty() && b.lo < out.back().hi) throw ConfigError("");
            out.push_back(b);
        } catch (const std::exception&) {
            throw ConfigError("bad --windows '" + text + "' (expected ordered lo:hi,lo:hi ranges)");
        }
    }
    return out;
}

int cmd_analyze(const Common& o, const std::vector<std::string>& files, const std::string& unfold,
                const std::string& family) {
    if (files.empty()) throw ConfigError("analyze needs at least one spectrum file");
    AnalysisConfig analysis;
    std::optional<AnsatzFamily> fit_family;
    if (!family.empty()) fit_family = ansatz_family_from_string(family);
    if (!o.config.empty()) {
        nlohmann::json j = nlohmann::json::parse(read_text_file(o.config), nullptr, false);
        if (j.is_discarded()) throw ConfigError(o.config + ": not valid JSON");
        // Reuse the run-config parser for the analysis and fit sections.
        nlohmann::json probe = {{"model", "rmt_billiard"}, {"rmt_billiard", {{"windows", {{{"t_real", 0.5}}}}}}};
        for (const char* key : {"analysis", "fit"})
            if (j.contains(key)) probe[key] = j[key];
        const RunConfig parsed = parse_config(probe);
        analysis = parsed.analysis;
        if (!fit_family) fit_family = parsed.fit_family;
    } else {
        analysis.window.subintervals = 1;
        analysis.window.pool = true;
    }
    std::vector<SMatrixSpectrum> spectra;
    for (const auto& f : files) {
        std::ifstream probe(f);
        std::string first;
        std::getline(probe, first);
        spectra.push_back(first.rfind("# ", 0) == 0 ? read_spectrum(f) : import_spectrum(f));
    }
    const auto bounds = o.windows.empty() ? std::vector<WindowBounds>{} : parse_bounds(o.windows);
    RunReport report = analyze_spectra(spectra, parse_unfolding(unfold), bounds, analysis);
    const AnsatzFamily fam = fit_family.value_or(AnsatzFamily::freq_lorentzian);
    if (report.products.size() >= 2 * AnsatzModel::initial(fam).params.size())
        report.fit = fit_ansatz(report.products, fam);
    else
        report.fit_note = "fit skipped: too few product points";
    const fs::path out = o.out.empty() ? fs::path("ericson_analysis") : fs::path(o.out);
    write_report(out, report);
    report_summary(report);
    std::printf("outputs written to %s\n", out.string().c_str());
    return report.exit_code();
}

int cmd_fit(const Common& o, const std::string& products, const std::string& family,
            const std::string& qd, double kappa) {
    if (products.empty()) throw ConfigError("fit needs a product table");
    const auto points = read_products(products);
    const FitResult r = fit_ansatz(points, ansatz_family_from_string(family.empty() ? "freq_lorentzian" : family));
    const fs::path out = o.out.empty() ? fs::path("fit.json") : fs::path(o.out);
    const fs::path file = fs::is_directory(out) ? out / "fit.json" : out;
    write_text_file(file, to_json(r).dump(2) + "\n");
    const auto names = r.model().param_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        std::printf("%s = %.6f +- %.6f\n", names[i].c_str(), r.params[i], r.param_stderr[i]);
    std::printf("residual_norm = %.6g, converged = %s, n_points = %d\n", r.residual_norm,
                r.converged ? "true" : "false", r.n_points);
    if (!qd.empty()) {
        AnsatzModel model{ansatz_family_from_string(qd), {}};
        if (model.family == AnsatzFamily::qd_lorentzian) model.params = {kappa};
        for (const auto& p : points)
            if (p.gamma > 0.0 && p.gamma <= 1.0)
                std::printf("qd(%g) = %.6f\n", p.gamma, eval_qd(model, p.gamma));
    }
    std::printf("fit written to %s\n", file.string().c_str());
    return r.converged ? exit_ok : exit_numerical;
}

int cmd_import(const Common& o, const std::string& input, const std::string& format) {
    if (input.empty()) throw ConfigError("import needs an input CSV");
    const SMatrixSpectrum s = import_spectrum(input, import_format_from_string(format));
    fs::path out = o.out.empty() ? fs::path(fs::path(input).stem().string() + ".spectrum.csv") : fs::path(o.out);
    if (fs::is_directory(out)) out /= fs::path(input).stem().string() + ".spectrum.csv";
    write_spectrum(out, s);
    std::printf("imported %zu points into %s\n", s.size(), out.string().c_str());
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counting-of-maxima analysis of simulated and measured scattering spectra"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ericson::version());

    Common run_o, analyze_o, fit_o, import_o;
    auto* run = app.add_subcommand("run", "Simulate an ensemble and write product tables");
    add_common(run, run_o);

    auto* analyze = app.add_subcommand("analyze", "Analyze stored or imported spectra");
    add_common(analyze, analyze_o);
    std::vector<std::string> analyze_files;
    std::string unfold = "identity", analyze_family;
    analyze->add_option("spectra", analyze_files, "Spectrum files (one realization each)");
    analyze->add_option("--unfold", unfold, "identity | graph:DENSITY | billiard:AREA | semicircle:N");
    analyze->add_option("--family", analyze_family, "Ansatz family to fit");

    auto* fit = app.add_subcommand("fit", "Fit an ansatz to a product table");
    add_common(fit, fit_o);
    std::string products, family, qd;
    double kappa = 10.0;
    fit->add_option("products", products, "CSV gamma,product,stderr,model_tag");
    fit->add_option("--family", family, "freq_lorentzian | two_channel | parametric");
    fit->add_option("--qd", qd, "Also print a quantum-dot prediction (qd_lorentzian | qd_squared_lorentzian)");
    fit->add_option("--kappa", kappa, "Linear denominator coefficient for qd_lorentzian");

    auto* imp = app.add_subcommand("import", "Convert an external S21 CSV into a spectrum file");
    add_common(imp, import_o);
    std::string input, format = "auto";
    imp->add_option("input", input, "CSV with abscissa,s21_re,s21_im or abscissa,s21_abs2");
    imp->add_option("--format", format, "auto | complex | abs2");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ericson::exit_config;
    }

    try {
        if (*run) return cmd_run(run_o);
        if (*analyze) return cmd_analyze(analyze_o, analyze_files, unfold, analyze_family);
        if (*fit) return cmd_fit(fit_o, products, family, qd, kappa);
        if (*imp) return cmd_import(import_o, input, format);
    } catch (const ericson::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return ericson::exit_config;
    } catch (const ericson::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return ericson::exit_numerical;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "file error: " << e.what() << "\n";
        return ericson::exit_config;
    }
    return ericson::exit_config;
}
