#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "ericson/error.hpp"
#include "ericson/io.hpp"

using namespace ericson;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path(ERICSON_TEST_TMP) / "io";
    fs::create_directories(dir);
    return dir / name;
}

fs::path write_raw(const std::string& name, const std::string& text) {
    const fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

std::string error_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("spectra round-trip with every digit intact") {
    SMatrixSpectrum s;
    s.unit = AbscissaUnit::unfolded;
    s.channel_count = 3;
    s.channels = {{1, 0}, {0, 0}, {2, 1}};
    for (int i = 0; i < 50; ++i) {
        s.grid.push_back(0.1 * i + 1.0 / 3.0);
        for (int c = 0; c < 3; ++c)
            s.values.emplace_back(std::sin(1.0 + i * 0.37 + c) / 7.0, std::cos(i * 1.1 - c) * 1e-9);
    }
    s.metadata.seed = 123456789012345ULL;
    s.metadata.realization = 17;
    s.metadata.model = "rmt_billiard";
    s.metadata.window_lo = -0.1;
    s.metadata.window_hi = 0.1;
    s.metadata.skipped = {0.25};
    s.metadata.extra["xi"] = "0.5";
    const fs::path p = scratch("round.csv");
    write_spectrum(p, s);
    const SMatrixSpectrum back = read_spectrum(p);
    CHECK(back.grid == s.grid);
    CHECK(back.values == s.values);
    CHECK(back.channels == s.channels);
    CHECK(back.unit == s.unit);
    CHECK(back.channel_count == 3);
    CHECK(back.metadata.seed == s.metadata.seed);
    CHECK(back.metadata.realization == 17);
    CHECK(back.metadata.skipped == s.metadata.skipped);
    CHECK(back.metadata.extra == s.metadata.extra);
    CHECK_FALSE(fs::exists(p.string() + ".tmp"));
}

TEST_CASE("external complex spectra import") {
    const fs::path p = write_raw("three.csv", "# measured\nabscissa,s21_re,s21_im\n1.0,0.1,0.2\n2.0,0.3,-0.4\n3.0,0,0\n");
    const SMatrixSpectrum s = import_spectrum(p);
    REQUIRE(s.size() == 3);
    CHECK(s.metadata.external);
    CHECK(s.at(1, 0) == std::complex<double>(0.3, -0.4));
    CHECK(s.channels == std::vector<ChannelPair>{{1, 0}});
    CHECK(s.metadata.window_lo == 1.0);
    CHECK(s.metadata.window_hi == 3.0);

    write_spectrum(scratch("exported.csv"), s);
    const SMatrixSpectrum again = read_spectrum(scratch("exported.csv"));
    CHECK(again.values == s.values);
}

TEST_CASE("abs2 import stores the amplitude") {
    const fs::path p = write_raw("abs2.csv", "abscissa,s21_abs2\n0.5,0.25\n0.6,0.04\n");
    const SMatrixSpectrum s = import_spectrum(p, ImportFormat::abs2);
    CHECK(s.cross_section()[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.cross_section()[1] == doctest::Approx(0.04).epsilon(1e-15));
    CHECK_THROWS_AS(import_spectrum(p, ImportFormat::complex), ConfigError);
}

TEST_CASE("malformed imports report the line number") {
    const fs::path dec = write_raw("dec.csv", "abscissa,s21_re,s21_im\n1,0,0\n3,0,0\n2,0,0\n");
    CHECK(error_of([&] { import_spectrum(dec); }).find("dec.csv:4:") != std::string::npos);
    const fs::path bad = write_raw("bad.csv", "abscissa,s21_re,s21_im\n1,0,0\n2,x,0\n");
    CHECK(error_of([&] { import_spectrum(bad); }).find("bad.csv:3:") != std::string::npos);
    const fs::path cols = write_raw("cols.csv", "abscissa,s21_re,s21_im\n1,0\n");
    CHECK(error_of([&] { import_spectrum(cols); }).find("cols.csv:2:") != std::string::npos);
    const fs::path hdr = write_raw("hdr.csv", "f,re,im\n1,0,0\n");
    CHECK(error_of([&] { import_spectrum(hdr); }).find("hdr.csv:1:") != std::string::npos);
    const fs::path neg = write_raw("neg.csv", "abscissa,s21_abs2\n1,-0.1\n");
    CHECK_THROWS_AS(import_spectrum(neg), ConfigError);
    CHECK_THROWS_AS(import_spectrum(scratch("missing.csv")), ConfigError);
}

TEST_CASE("product tables round-trip") {
    std::vector<ProductPoint> pts(3);
    for (int i = 0; i < 3; ++i) {
        pts[i].gamma = 0.1 + i / 3.0;
        pts[i].product = 0.5 - 1.0 / (7.0 + i);
        pts[i].std_error = 1e-3 * (i + 1);
        pts[i].model_tag = "tag";
    }
    const fs::path p = scratch("products.csv");
    write_products(p, pts);
    const auto back = read_products(p);
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back[i].gamma == pts[i].gamma);
        CHECK(back[i].product == pts[i].product);
        CHECK(back[i].std_error == pts[i].std_error);
        CHECK(back[i].model_tag == "tag");
    }
    pts[0].model_tag = "a,b";
    CHECK_THROWS(write_products(p, pts));
}

TEST_CASE("format_double keeps 17 significant digits") {
    for (double v : {1.0 / 3.0, 1e-300, -2.5e17, 0.1 + 0.2}) CHECK(std::stod(format_double(v)) == v);
}
