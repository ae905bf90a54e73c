#include <doctest.h>

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ericson/error.hpp"
#include "ericson/io.hpp"
#include "ericson/pipeline.hpp"

using namespace ericson;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::path(ERICSON_TEST_TMP) / "pipeline" / name;
    fs::remove_all(p);
    return p;
}

json small_billiard(const fs::path& out) {
    return {{"model", "rmt_billiard"},
            {"seed", 99},
            {"ensemble_size", 2},
            {"jobs", 1},
            {"output", out.string()},
            {"rmt_billiard",
             {{"N", 50},
              {"M", 8},
              {"half_width", 0.5},
              {"windows", {{{"t_real", 0.6}, {"t_fictitious", 0.3}}, {{"t_real", 0.9}, {"t_fictitious", 0.5}}}}}}};
}

std::string config_error(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("small billiard run writes a consistent manifest and tables") {
    const fs::path out = scratch("small");
    const RunConfig cfg = parse_config(small_billiard(out));
    const RunReport report = run_pipeline(cfg);
    CHECK(report.exit_code() == exit_ok);
    CHECK(report.windows.size() == 2);
    CHECK(report.products.size() == 2);
    for (const auto& p : report.products) {
        REQUIRE(p.tunneling);
        CHECK(*p.tunneling > 0.0);
        CHECK(*p.tunneling <= 1.0);
        CHECK(p.model_tag == "rmt_billiard_goe");
    }
    const json manifest = json::parse(read_text_file(out / "manifest.json"));
    CHECK(manifest.at("realizations") == 2);
    CHECK(manifest.at("product_rows") == 2);
    CHECK(manifest.at("seed") == 99);
    CHECK(manifest.at("rng") == kRngAlgorithm);
    CHECK(manifest.at("config_hash") == config_hash(cfg));
    CHECK(manifest.at("version") == version());
    CHECK(read_products(out / "products.csv").size() == 2);
    CHECK(fs::exists(out / "windows.csv"));
    CHECK(fs::exists(out / "curves" / "window_000.csv"));
    CHECK(fs::exists(out / "config.json"));
    CHECK_FALSE(fs::exists(out / "spectra"));
}

TEST_CASE("identical configs reproduce identical bytes regardless of jobs") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    json ja = small_billiard(a), jb = small_billiard(b);
    jb["jobs"] = 2;
    run_pipeline(parse_config(ja));
    run_pipeline(parse_config(jb));
    CHECK(read_text_file(a / "products.csv") == read_text_file(b / "products.csv"));
    CHECK(read_text_file(a / "windows.csv") == read_text_file(b / "windows.csv"));
    CHECK(config_hash(parse_config(ja)) == config_hash(parse_config(jb)));

    json jc = small_billiard(scratch("det_c"));
    jc["seed"] = 100;
    run_pipeline(parse_config(jc));
    CHECK(read_text_file(a / "products.csv") != read_text_file(fs::path(ERICSON_TEST_TMP) / "pipeline" / "det_c" / "products.csv"));
    CHECK(config_hash(parse_config(ja)) != config_hash(parse_config(jc)));
}

TEST_CASE("kept spectra and window subsets") {
    const fs::path out = scratch("subset");
    json j = small_billiard(out);
    j["keep_spectra"] = true;
    j["windows"] = {1};
    const RunReport report = run_pipeline(parse_config(j));
    REQUIRE(report.windows.size() == 1);
    CHECK(report.windows[0].window_id == 1);
    CHECK(fs::exists(out / "spectra" / "w001_r0000.csv"));
    CHECK(fs::exists(out / "spectra" / "w001_r0001.csv"));
    const SMatrixSpectrum s = read_spectrum(out / "spectra" / "w001_r0000.csv");
    CHECK(s.metadata.seed == 99);
    CHECK(s.metadata.realization == 0);
}

TEST_CASE("stored spectra reproduce the run through analyze_spectra") {
    const fs::path out = scratch("reanalyze");
    json j = small_billiard(out);
    j["keep_spectra"] = true;
    j["windows"] = {0};
    const RunConfig cfg = parse_config(j);
    const RunReport run = run_pipeline(cfg);
    std::vector<SMatrixSpectrum> spectra{read_spectrum(out / "spectra" / "w000_r0000.csv"),
                                         read_spectrum(out / "spectra" / "w000_r0001.csv")};
    Unfolding u;
    u.kind = Unfolding::Kind::semicircle;
    u.dim = 50;
    const RunReport again = analyze_spectra(spectra, u, {}, cfg.analysis);
    REQUIRE(again.products.size() == 1);
    CHECK(again.products[0].product == doctest::Approx(run.products[0].product).epsilon(1e-12));
}

TEST_CASE("unresolved windows make the run partial") {
    const fs::path out = scratch("partial");
    json j = small_billiard(out);
    j["analysis"] = {{"max_lag", 0.05}};
    const RunReport report = run_pipeline(parse_config(j));
    CHECK(report.exit_code() == exit_partial);
    CHECK(report.products.empty());
    const json manifest = json::parse(read_text_file(out / "manifest.json"));
    CHECK(manifest.at("dropped_windows").size() == 2);
    CHECK(manifest.at("exit_code") == exit_partial);
}

TEST_CASE("configuration errors name the offending key") {
    const fs::path out = scratch("unused");
    json j = small_billiard(out);
    j["ensemble_size"] = 0;
    CHECK(config_error(j).find("ensemble_size") != std::string::npos);

    j = small_billiard(out);
    j["rmt_billiard"]["typo"] = 1;
    CHECK(config_error(j).find("rmt_billiard.typo") != std::string::npos);

    j = small_billiard(out);
    j["rmt_billiard"]["windows"][0]["t_real"] = 1.5;
    CHECK_FALSE(config_error(j).empty());

    j = small_billiard(out);
    j["windows"] = {3};
    CHECK(config_error(j).find("window index") != std::string::npos);

    j = small_billiard(out);
    j["model"] = "cavity";
    CHECK(config_error(j).find("cavity") != std::string::npos);

    j = small_billiard(out);
    j["seed"] = "abc";
    CHECK(config_error(j).find("seed") != std::string::npos);

    j = {{"model", "graph"}, {"graph", {{"kind", "file"}, {"file", "/nonexistent.json"}, {"windows", {{{"w", 1.0}}}}}}};
    CHECK(config_error(j).find("does not exist") != std::string::npos);
}

TEST_CASE("canonical config round-trips") {
    const RunConfig cfg = parse_config(small_billiard(scratch("canon")));
    const json canon = config_to_json(cfg);
    const RunConfig back = parse_config(canon);
    CHECK(config_to_json(back) == canon);
    CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("window lists") {
    CHECK(parse_window_list("0,2,5-7") == std::vector<int>{0, 2, 5, 6, 7});
    CHECK_THROWS_AS(parse_window_list("3-1"), ConfigError);
    CHECK_THROWS_AS(parse_window_list("a"), ConfigError);
    CHECK_THROWS_AS(parse_window_list(""), ConfigError);
}

TEST_CASE("small graph and parametric runs") {
    const fs::path g = scratch("graph");
    json jg = {{"model", "graph"},
               {"seed", 5},
               {"ensemble_size", 2},
               {"output", g.string()},
               {"graph", {{"kind", "tetrahedron"}, {"spacings_per_segment", 60}, {"windows", {{{"w", 1.5}}, {{"w", 1.5}, {"A", 0.5}}}}}}};
    const RunReport rg = run_pipeline(parse_config(jg));
    CHECK(rg.windows.size() == 2);
    REQUIRE(rg.resonance_density.size() == 2);
    CHECK(rg.resonance_density[0] == doctest::Approx(2.0 * make_tetrahedron(1.0, {0, 1}).total_length()).epsilon(0.1));

    const fs::path p = scratch("parametric");
    json jp = {{"model", "rmt_parametric"},
               {"seed", 6},
               {"ensemble_size", 2},
               {"output", p.string()},
               {"rmt_parametric", {{"N", 40}, {"M", 6}, {"frequencies", 4}, {"mu_points", 300}, {"windows", {{{"t_real", 0.8}, {"t_fictitious", 0.4}}}}}}};
    const RunReport rp = run_pipeline(parse_config(jp));
    REQUIRE(rp.windows.size() == 1);
    CHECK(rp.windows[0].realizations == 2);
}
