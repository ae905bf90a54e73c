#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "ericson/analysis.hpp"
#include "ericson/ensembles.hpp"
#include "ericson/error.hpp"
#include "ericson/fits.hpp"
#include "ericson/graphs.hpp"
#include "ericson/pipeline.hpp"

namespace py = pybind11;
using namespace ericson;

namespace {

UnfoldedSeries make_series(std::vector<double> abscissa, std::vector<double> values) {
    UnfoldedSeries s;
    s.abscissa = std::move(abscissa);
    s.values = std::move(values);
    s.validate();
    return s;
}

py::dict curve_dict(const CorrelationCurve& c) {
    py::dict d;
    d["lags"] = c.lags;
    d["values"] = c.values;
    d["c0"] = c.c0;
    d["width"] = c.width;
    d["shape"] = to_string(c.shape);
    return d;
}

py::dict fit_dict(const FitResult& r) {
    py::dict d;
    d["family"] = to_string(r.family);
    d["params"] = r.params;
    d["param_stderr"] = r.param_stderr;
    d["residual_norm"] = r.residual_norm;
    d["converged"] = r.converged;
    d["iterations"] = r.iterations;
    return d;
}

py::dict report_dict(const RunReport& report) {
    py::list products;
    for (const auto& p : report.products) {
        py::dict d;
        d["gamma"] = p.gamma;
        d["product"] = p.product;
        d["stderr"] = p.std_error;
        d["model_tag"] = p.model_tag;
        if (p.tunneling) d["tunneling"] = *p.tunneling;
        products.append(d);
    }
    py::dict out;
    out["products"] = products;
    out["chi"] = report.chi;
    out["resonance_density"] = report.resonance_density;
    out["exit_code"] = report.exit_code();
    out["fit"] = report.fit ? py::object(fit_dict(*report.fit)) : py::object(py::none());
    out["fit_note"] = report.fit_note;
    py::list dropped;
    for (const auto& w : report.windows)
        if (w.dropped) dropped.append(py::make_tuple(w.window_id, w.reason));
    out["dropped"] = dropped;
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Ericson fluctuation statistics of simulated scattering spectra";

    auto error = py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
    py::register_exception<DomainError>(m, "DomainError", error.ptr());

    m.def("version", &version);

    m.def("sample_goe", [](Eigen::Index n, std::uint64_t seed, std::uint64_t realization) {
        return Eigen::MatrixXd(sample_goe(n, RngPlan{seed, realization}).entries.real());
    }, py::arg("n"), py::arg("seed"), py::arg("realization") = 0);

    m.def("tetrahedron_s_matrix", [](double w, double f, double potential) {
        GraphSpec spec = make_tetrahedron(w, {0, 1});
        if (potential != 0.0) spec = spec.with_uniform_potential(potential);
        return graph_s_matrix(spec, f);
    }, py::arg("w"), py::arg("f"), py::arg("potential") = 0.0);

    m.def("count_maxima", [](std::vector<double> x, std::vector<double> y, double min_prominence) {
        const MaximaStats s = count_maxima(make_series(std::move(x), std::move(y)), min_prominence);
        py::dict d;
        d["n_max"] = s.n_max;
        d["span"] = s.span;
        d["density"] = s.density;
        return d;
    }, py::arg("abscissa"), py::arg("values"), py::arg("min_prominence") = 0.0);

    m.def("autocorrelation", [](std::vector<double> x, std::vector<double> y, double max_lag,
                                const std::string& shape) {
        CorrelationCurve c = autocorrelation(make_series(std::move(x), std::move(y)), max_lag,
                                             correlation_shape_from_string(shape));
        c.width = correlation_width(c);
        return curve_dict(c);
    }, py::arg("abscissa"), py::arg("values"), py::arg("max_lag"), py::arg("shape") = "lorentzian");

    m.def("eval_ansatz", [](const std::string& family, std::vector<double> params, double x) {
        return eval_ansatz(AnsatzModel{ansatz_family_from_string(family), std::move(params)}, x);
    }, py::arg("family"), py::arg("params"), py::arg("x"));

    m.def("fit_ansatz", [](std::vector<double> gamma, std::vector<double> product,
                           std::vector<double> stderr_, const std::string& family) {
        if (gamma.size() != product.size() || (!stderr_.empty() && stderr_.size() != gamma.size()))
            throw DomainError("gamma, product and stderr must have equal lengths");
        std::vector<ProductPoint> points(gamma.size());
        for (std::size_t i = 0; i < gamma.size(); ++i)
            points[i] = {gamma[i], product[i], stderr_.empty() ? 0.0 : stderr_[i], "", std::nullopt};
        return fit_dict(fit_ansatz(points, ansatz_family_from_string(family)));
    }, py::arg("gamma"), py::arg("product"), py::arg("stderr") = std::vector<double>{},
       py::arg("family") = "freq_lorentzian");

    m.def("run_json", [](const std::string& text, bool write) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        const RunConfig c = parse_config(j);
        validate(c);
        RunReport report;
        {
            py::gil_scoped_release release;
            report = run_pipeline(c, write);
        }
        return report_dict(report);
    }, py::arg("config"), py::arg("write") = false);
}
