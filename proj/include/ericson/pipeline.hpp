#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ericson/analysis.hpp"
#include "ericson/ensembles.hpp"
#include "ericson/error.hpp"
#include "ericson/fits.hpp"
#include "ericson/graphs.hpp"
#include "ericson/scattering.hpp"

namespace ericson {

/// Library version string recorded in manifests.
const char* version();

/// Exit codes of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_partial = 4 };

/// Error raised by a pipeline stage, tagged with where it happened.
class PipelineError : public Error {
public:
    PipelineError(const std::string& stage, int window, long realization, const std::string& what);
    const std::string& stage() const noexcept { return stage_; }
    int window() const noexcept { return window_; }
    long realization() const noexcept { return realization_; }

private:
    std::string stage_;
    int window_;
    long realization_;
};

enum class ModelKind { rmt_billiard, rmt_parametric, graph };
const char* to_string(ModelKind m);
ModelKind model_kind_from_string(const std::string& s);

/// One coupling setting of the billiard model. The first `real_channels`
/// channels get t_real, the rest t_fictitious. xi is used for partial_t.
struct BilliardWindow {
    double t_real = 0.1;
    double t_fictitious = 0.1;
    double xi = 0.0;
};

struct BilliardConfig {
    Eigen::Index n = 200;
    Eigen::Index m = 32;
    int real_channels = 2;
    SymmetryClass symmetry = SymmetryClass::goe;
    SolveMethod method = SolveMethod::poles;
    double center = 0.0;     // energy window centre in units of the semicircle radius
    double half_width = 0.2; // half width in units of the semicircle radius
    std::vector<BilliardWindow> windows;
};

struct ParametricWindow {
    double t_real = 0.1;
    double t_fictitious = 0.1;
};

struct ParametricConfig {
    Eigen::Index n = 100;
    Eigen::Index m = 32;
    int real_channels = 2;
    double mu_lo = 0.0;
    double mu_hi = 1.5707963267948966;
    int mu_points = 800;
    /// Fixed frequencies: midpoints between adjacent eigenvalues of H(mu_lo)
    /// closest to the band centre.
    int frequencies = 24;
    /// Fraction of central levels used for the level-velocity average.
    double velocity_fraction = 0.5;
    std::vector<ParametricWindow> windows;
};

struct GraphWindow {
    double w = 1.0;
    int lead_count = 2;
    double potential = 0.0; // A on every bond (i < j)
};

struct GraphConfig {
    std::string kind = "tetrahedron"; // tetrahedron | random_regular | file
    std::filesystem::path file;
    int vertices = 60;
    int degree = 3;
    std::vector<int> leads{0, 1}; // tetrahedron and file graphs
    std::vector<GraphWindow> windows;
    double spacings_per_segment = 100.0;
    double f_start = 0.6180339887498949;
    /// Zero: measure from the arg det S winding; otherwise use this density.
    double density = 0.0;
    double density_spacings = 400.0; // length of the measurement range
    /// Samples per mean spacing; narrow resonances are missed when too low.
    double density_samples = 2000.0;
};

struct AnalysisConfig {
    WindowSpec window;
    double points_per_spacing = 100.0;
};

struct QdConfig {
    AnsatzFamily family = AnsatzFamily::qd_squared_lorentzian;
    double kappa = 10.0;
};

struct RunConfig {
    ModelKind model = ModelKind::rmt_billiard;
    std::uint64_t seed = 1;
    int ensemble_size = 1;
    int jobs = 0; // 0: hardware concurrency
    std::filesystem::path output = "ericson_out";
    bool keep_spectra = false;
    std::optional<std::vector<int>> window_subset;
    AnalysisConfig analysis;
    std::optional<AnsatzFamily> fit_family;
    std::optional<QdConfig> qd;
    BilliardConfig billiard;
    ParametricConfig parametric;
    GraphConfig graph;
};

/// Parses and validates a configuration document. Throws ConfigError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical document (sorted keys, all defaults spelled out).
nlohmann::json config_to_json(const RunConfig& c);
/// Validation beyond parsing; throws ConfigError.
void validate(const RunConfig& c);
/// 64-bit FNV-1a of the canonical document, as 16 hex digits.
std::string config_hash(const RunConfig& c);

/// Parses "0,2,5-7" into window indices.
std::vector<int> parse_window_list(const std::string& text);

struct SkipRecord {
    std::string stage;
    int window = 0;
    long realization = 0;
    std::string message;
};

struct RunReport {
    std::vector<WindowResult> windows;
    std::vector<ProductPoint> products;
    std::vector<CorrelationCurve> curves; // one per window, empty when dropped
    std::optional<FitResult> fit;
    std::string fit_note;
    std::vector<std::pair<double, double>> chi;
    std::vector<SkipRecord> skipped;
    std::vector<double> resonance_density; // graph model, per window

    int exit_code() const;
};

/// Progress callback: (window index, windows total).
using ProgressFn = std::function<void(int, int)>;

/// sample -> sweep -> unfold -> correlate -> count -> product -> fit.
/// With `write` set, writes products.csv, windows.csv, curves, fit.json,
/// chi.csv, optional spectra and finally manifest.json into c.output.
RunReport run_pipeline(const RunConfig& c, bool write = true, const ProgressFn& progress = {});

/// Energy grid over [lo, hi] uniform in the unfolded semicircle variable.
std::vector<double> semicircle_grid(Eigen::Index n, double lo, double hi, double points_per_spacing);

/// Product points of a set of spectra analysed window by window; each file
/// is one realization. Used by the `analyze` command.
RunReport analyze_spectra(const std::vector<SMatrixSpectrum>& spectra, const Unfolding& unfolding,
                          const std::vector<WindowBounds>& windows, const AnalysisConfig& analysis,
                          ChannelPair channel = {1, 0});

/// Writes the tabular outputs of a report into `dir`.
void write_report(const std::filesystem::path& dir, const RunReport& report);

} // namespace ericson
